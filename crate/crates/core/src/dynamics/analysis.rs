//! Frequency extraction, resonance calibration and spectral gap.

use serde::{Deserialize, Serialize};

use super::blocks::Partition;
use super::TimeSeries;
use crate::error::{Error, Result};
use crate::model::{rotating_frame_hamiltonian, SystemParams};
use crate::qspace::{CompositeSpace, Level, Operator};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    /// Time of the first major maximum of `pop_rr` (us).
    pub t_first_max: f64,
    /// Interpolated value at that maximum.
    pub peak: f64,
    /// Oscillation frequency `1 / (2 t_first_max)` in MHz (times 2 pi).
    pub omega_mhz: f64,
}

/// Locates the first maximum of `y` whose prominence is at least half the
/// full range, ignoring small fast ripples, and refines it with a
/// least-squares parabola over the samples within 10% of the range below
/// the peak (at least the three bracketing samples).
pub fn first_major_maximum(t: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = y.len();
    if n < 3 || t.len() != n {
        return Err(Error::NoMaximum);
    }
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    if !(range > 1e-9 * hi.abs().max(1.0)) {
        return Err(Error::NoMaximum);
    }
    let needed = 0.5 * range;
    let mut found = None;
    for k in 1..n - 1 {
        if !(y[k] >= y[k - 1] && y[k] >= y[k + 1]) {
            continue;
        }
        // Lowest point on each side before the series climbs above y[k].
        let mut left_min = y[k];
        for j in (0..k).rev() {
            if y[j] > y[k] {
                break;
            }
            left_min = left_min.min(y[j]);
        }
        let mut right_min = y[k];
        for &v in &y[k + 1..] {
            if v > y[k] {
                break;
            }
            right_min = right_min.min(v);
        }
        if y[k] - left_min.max(right_min) >= needed {
            found = Some(k);
            break;
        }
    }
    let k = found.ok_or(Error::NoMaximum)?;
    let floor = y[k] - 0.1 * range;
    let mut a = k - 1;
    while a > 0 && y[a - 1] >= floor {
        a -= 1;
    }
    let mut b = k + 1;
    while b + 1 < n && y[b + 1] >= floor {
        b += 1;
    }
    // Least-squares parabola in the shifted variable s = t - t_k.
    let tk = t[k];
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for i in a..=b {
        let s = t[i] - tk;
        let pows = [1.0, s, s * s];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += pows[r] * pows[c];
            }
            rhs[r] += pows[r] * y[i];
        }
    }
    let mat = nalgebra::Matrix3::from_fn(|r, c| m[r][c]);
    let coef = mat
        .lu()
        .solve(&nalgebra::Vector3::from(rhs))
        .ok_or(Error::NoMaximum)?;
    let (c0, c1, c2) = (coef[0], coef[1], coef[2]);
    if !(c2 < 0.0) {
        return Ok((tk, y[k]));
    }
    let s_star = (-c1 / (2.0 * c2)).clamp(t[a] - tk, t[b] - tk);
    Ok((tk + s_star, c0 + c1 * s_star + c2 * s_star * s_star))
}

/// `pi / t_first_max` of `pop_rr`, returned as an ordinary frequency in MHz.
pub fn extract_frequency(series: &TimeSeries) -> Result<FrequencyEstimate> {
    let (t_max, peak) = first_major_maximum(&series.times(), &series.pop_rr())?;
    if !(t_max > 0.0) {
        return Err(Error::NoMaximum);
    }
    Ok(FrequencyEstimate {
        t_first_max: t_max,
        peak,
        omega_mhz: 1.0 / (2.0 * t_max),
    })
}

struct Resolved {
    energies: Vec<f64>,
    gg: Vec<nalgebra::Complex<f64>>,
    rr: Vec<nalgebra::Complex<f64>>,
}

/// Eigenpairs of the component holding `|gg,n>` and `|rr,n>`, with the
/// two targets' components along every eigenvector.
fn resolve(h: &Operator, n: usize) -> Result<Resolved> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(h.hermitian_deviation()));
    }
    let space = h.space();
    let missing = || Error::InvalidRange {
        what: "photon number",
        detail: format!("{n} outside band {space}"),
    };
    let gg = space.encode(Level::G, Level::G, n).ok_or_else(missing)?;
    let rr = space.encode(Level::R, Level::R, n).ok_or_else(missing)?;
    let partition = Partition::from_operators(space.dim(), [h]);
    let c = partition.comp_of(gg);
    if partition.comp_of(rr) != c {
        return Err(Error::IllDefined(
            "|gg,n> and |rr,n> are not coupled".into(),
        ));
    }
    let eig = nalgebra::SymmetricEigen::new(partition.restrict(h, c, c));
    let (lg, lr) = (partition.local_of(gg), partition.local_of(rr));
    Ok(Resolved {
        energies: eig.eigenvalues.iter().copied().collect(),
        gg: eig.eigenvectors.row(lg).iter().copied().collect(),
        rr: eig.eigenvectors.row(lr).iter().copied().collect(),
    })
}

/// Amplitude threshold for the eigenvectors entering [`effective_gap`].
pub const GAP_OVERLAP_MIN: f64 = 0.5;

/// Splitting of the two eigenvectors with the largest joint overlap
/// `|<k|gg,n>| |<k|rr,n>|`. Both must overlap each target with amplitude
/// at least [`GAP_OVERLAP_MIN`].
pub fn effective_gap(h: &Operator, n: usize) -> Result<f64> {
    let r = resolve(h, n)?;
    let mut ranked: Vec<usize> = (0..r.energies.len()).collect();
    let joint = |k: usize| r.gg[k].norm() * r.rr[k].norm();
    ranked.sort_by(|&a, &b| joint(b).total_cmp(&joint(a)).then(a.cmp(&b)));
    if ranked.len() < 2 {
        return Err(Error::IllDefined("fewer than two eigenvectors".into()));
    }
    let (k1, k2) = (ranked[0], ranked[1]);
    for k in [k1, k2] {
        let weakest = r.gg[k].norm().min(r.rr[k].norm());
        if weakest < GAP_OVERLAP_MIN {
            return Err(Error::IllDefined(format!(
                "eigenvector overlap {weakest:.3} below {GAP_OVERLAP_MIN}"
            )));
        }
    }
    Ok((r.energies[k1] - r.energies[k2]).abs())
}

/// Peak `|gg,n> -> |rr,n>` transfer carried by the two dominant
/// eigenvectors, `(|u_1| + |u_2|)^2` with `u_k = <rr|k><k|gg>`. Fast
/// ripples from weakly populated eigenvectors are excluded, so the value
/// varies smoothly with the parameters.
pub fn transfer_contrast(params: &SystemParams, n: usize, band_halfwidth: usize) -> Result<f64> {
    let space = CompositeSpace::around(n, band_halfwidth);
    let h = rotating_frame_hamiltonian(params, &space)?;
    let r = resolve(&h, n)?;
    let mut u: Vec<f64> = r
        .gg
        .iter()
        .zip(&r.rr)
        .map(|(g, rr)| (rr * g.conj()).norm())
        .collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let top = u[0] + u.get(1).copied().unwrap_or(0.0);
    Ok(top * top)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Correction to add to the Rydberg offset (MHz).
    pub offset_mhz: f64,
    pub contrast: f64,
    /// False when the coarse scan saw more than one local maximum.
    pub unimodal: bool,
}

impl Calibration {
    pub fn apply(&self, params: &SystemParams) -> SystemParams {
        SystemParams {
            rydberg_offset: params.rydberg_offset + self.offset_mhz,
            ..*params
        }
    }
}

const COARSE_POINTS: usize = 41;
const GOLDEN_TOL_MHZ: f64 = 1e-8;

/// Offset of both Rydberg energies within `[-width, width]` (width in kHz)
/// maximizing [`transfer_contrast`]: coarse scan, then golden-section
/// refinement around the best sample.
pub fn calibrate_resonance(
    params: &SystemParams,
    n: usize,
    search_width_khz: f64,
    band_halfwidth: usize,
) -> Result<Calibration> {
    if !(search_width_khz > 0.0) {
        return Err(Error::InvalidParam {
            key: "search_width",
            reason: format!("{search_width_khz} must be > 0"),
        });
    }
    let width = search_width_khz * 1e-3;
    let f = |eps: f64| {
        let p = SystemParams {
            rydberg_offset: params.rydberg_offset + eps,
            ..*params
        };
        transfer_contrast(&p, n, band_halfwidth)
    };
    let xs: Vec<f64> = (0..COARSE_POINTS)
        .map(|k| -width + 2.0 * width * k as f64 / (COARSE_POINTS - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect::<Result<_>>()?;
    let best = (0..COARSE_POINTS)
        .max_by(|&a, &b| ys[a].total_cmp(&ys[b]).then(b.cmp(&a)))
        .unwrap();
    let peaks = (0..COARSE_POINTS)
        .filter(|&k| {
            let left = k == 0 || ys[k] > ys[k - 1];
            let right = k + 1 == COARSE_POINTS || ys[k] > ys[k + 1];
            left && right
        })
        .count();
    let unimodal = peaks <= 1;
    if !unimodal {
        log::warn!("transfer contrast is not unimodal over +-{search_width_khz} kHz; using the best sample");
    }
    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(COARSE_POINTS - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > GOLDEN_TOL_MHZ {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    let mut x = 0.5 * (a + b);
    let mut fx = f(x)?;
    if ys[best] > fx {
        x = xs[best];
        fx = ys[best];
    }
    Ok(Calibration {
        offset_mhz: x,
        contrast: fx,
        unimodal,
    })
}
