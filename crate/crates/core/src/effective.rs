//! Perturbative effective couplings, level shifts, parameter-condition
//! checks and thermal photon statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Planck constant (J s), exact SI value.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant (J/K), exact SI value.
pub const BOLTZMANN: f64 = 1.380_649e-23;

fn guard(x: f64, what: &'static str) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        Err(Error::DivisionGuard(what))
    } else {
        Ok(x)
    }
}

/// Two-photon `g -> r` couplings of the first and second atom at photon number `n`.
pub fn two_photon_rabi(p: &SystemParams, n: usize) -> (f64, f64) {
    (two_photon1(p, n as f64 + 1.0), two_photon2(p, n as f64))
}

// Argument is the photon factor under the square root.
fn two_photon1(p: &SystemParams, photons_plus_one: f64) -> f64 {
    p.rabi1 * p.coupling_a * photons_plus_one.sqrt() / p.laser_detuning1
}

fn two_photon2(p: &SystemParams, photons: f64) -> f64 {
    p.rabi2 * p.coupling_b * photons.sqrt() / p.laser_detuning2
}

/// Stark-corrected detunings of the intermediate states `|rg, n+1>` and
/// `|gr, n-1>`. The `(n - 1)` term of the second is taken literally at `n = 0`.
pub fn intermediate_detunings(p: &SystemParams, n: usize) -> (f64, f64) {
    let n = n as f64;
    let (d1, d2) = (p.laser_detuning1, p.laser_detuning2);
    let (ga2, gb2) = (p.coupling_a.powi(2), p.coupling_b.powi(2));
    let first = d1 + p.rabi1.powi(2) / d1 - p.cavity_detuning_a - ga2 * (n + 1.0) / d1
        + gb2 * (n + 2.0) / p.cavity_detuning_b;
    let second = d2 + p.rabi2.powi(2) / d2 + p.cavity_detuning_b
        - ga2 * (n - 1.0) / p.cavity_detuning_a
        - gb2 * n / d2;
    (first, second)
}

/// Bare detunings of the same intermediate states.
pub fn bare_detunings(p: &SystemParams) -> (f64, f64) {
    (
        p.laser_detuning1 - p.cavity_detuning_a,
        p.laser_detuning2 + p.cavity_detuning_b,
    )
}

/// Effective `|gg,n> <-> |rr,n>` coupling as the sum over both excitation paths.
pub fn effective_rabi(p: &SystemParams, n: usize) -> Result<f64> {
    let (i1, i2) = intermediate_detunings(p, n);
    let i1 = guard(i1, "first intermediate detuning")?;
    let i2 = guard(i2, "second intermediate detuning")?;
    let nf = n as f64;
    let via_first = two_photon1(p, nf + 1.0) * two_photon2(p, nf + 1.0) / i1;
    let via_second = two_photon2(p, nf) * two_photon1(p, nf) / i2;
    Ok(via_first + via_second)
}

/// Closed form `rabi1 rabi2 g_a g_b / (delta1 delta2 D)` with `D` the given detuning.
pub fn closed_form_rabi_with(p: &SystemParams, detuning: f64) -> Result<f64> {
    let d = guard(detuning, "detuning")?;
    Ok(p.rabi1 * p.rabi2 * p.coupling_a * p.coupling_b
        / (p.laser_detuning1 * p.laser_detuning2 * d))
}

/// Closed form with `D` equal to the Stark-corrected first detuning at `n = 0`.
pub fn closed_form_rabi(p: &SystemParams) -> Result<f64> {
    closed_form_rabi_with(p, intermediate_detunings(p, 0).0)
}

/// Linear photon-number scaling `1 - (g_a / Delta_a)^2 n` of the effective coupling.
pub fn rabi_scaling(p: &SystemParams, n: usize) -> f64 {
    1.0 - (p.coupling_a / p.cavity_detuning_a).powi(2) * n as f64
}

/// Leading fourth-order shift of `|gg, n>`.
pub fn ground_shift(p: &SystemParams, n: usize) -> Result<f64> {
    let (i1, i2) = intermediate_detunings(p, n);
    let nf = n as f64;
    let first = p.rabi1.powi(2) * p.coupling_a.powi(2) * (nf + 1.0)
        / (p.laser_detuning1.powi(2) * guard(i1, "first intermediate detuning")?);
    let second = if n == 0 {
        0.0
    } else {
        p.rabi2.powi(2) * p.coupling_b.powi(2) * nf
            / (p.laser_detuning2.powi(2) * guard(i2, "second intermediate detuning")?)
    };
    Ok(first + second)
}

/// Order-of-magnitude size of the fourth-order shift of `|rr, n>` (unit prefactor).
pub fn srr_diagnostic(p: &SystemParams, n: usize) -> f64 {
    let n2 = (n as f64).powi(2);
    p.coupling_a.powi(4) * n2 / p.cavity_detuning_a.powi(3)
        + p.coupling_b.powi(4) * n2 / p.cavity_detuning_b.powi(3)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub n: usize,
    pub two_photon1: f64,
    pub two_photon2: f64,
    pub intermediate1: f64,
    pub intermediate2: f64,
    pub effective_rabi: f64,
    pub ground_shift: f64,
    pub resonance_residual: f64,
}

pub fn effective_params(p: &SystemParams, n: usize) -> Result<EffectiveParams> {
    let (t1, t2) = two_photon_rabi(p, n);
    let (i1, i2) = intermediate_detunings(p, n);
    Ok(EffectiveParams {
        n,
        two_photon1: t1,
        two_photon2: t2,
        intermediate1: i1,
        intermediate2: i2,
        effective_rabi: effective_rabi(p, n)?,
        ground_shift: ground_shift(p, n)?,
        resonance_residual: i1 + i2,
    })
}

/// `g_b / (eta * eta_tilde * sqrt(n_max + 1))`.
pub fn max_rabi_bound(coupling_b: f64, eta: f64, eta_tilde: f64, n_max: usize) -> Result<f64> {
    for (key, v) in [("g_b", coupling_b), ("eta", eta), ("eta_tilde", eta_tilde)] {
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::InvalidParam {
                key,
                reason: format!("{v} must be > 0"),
            });
        }
    }
    Ok(coupling_b / (eta * eta_tilde * ((n_max + 1) as f64).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Minimum Förster margin.
    pub forster_min: f64,
    /// Stark-matching residual limit relative to `g_a^2 / |Delta_a|`.
    pub stark_rel: f64,
    /// Ground-shift matching residual limit relative to `rabi1 g_a / |delta1|`.
    pub sgg_rel: f64,
    /// Maximum `|D1 + D2| / |effective rabi|`.
    pub resonance_max: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            forster_min: 100.0,
            stark_rel: 1e-3,
            sgg_rel: 1e-2,
            resonance_max: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub forster: bool,
    pub stark_match: bool,
    pub sgg_match: bool,
    pub resonance: bool,
}

impl Verdicts {
    pub fn all_pass(&self) -> bool {
        self.forster && self.stark_match && self.sgg_match && self.resonance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub n_max: usize,
    /// `None` when the denominator vanishes (infinite margin).
    pub forster_margin: Option<f64>,
    pub stark_match_residual: f64,
    pub sgg_match_residual: f64,
    /// `(n, ratio)` for every probed `n`.
    pub resonance_ratio: Vec<(usize, f64)>,
    pub bound_omega_max: f64,
    pub thresholds: Thresholds,
    pub verdict: Verdicts,
}

pub fn forster_margin(p: &SystemParams, n_max: usize) -> Option<f64> {
    let worst = (0..=n_max)
        .map(|n| {
            let n = n as f64;
            p.coupling_a
                * p.coupling_b
                * ((n + 1.0) / p.cavity_detuning_b - n / p.cavity_detuning_a).abs()
        })
        .fold(0.0, f64::max);
    (worst > 0.0).then(|| (p.cavity_detuning_a - p.cavity_detuning_b).abs() / worst)
}

pub fn check_conditions(p: &SystemParams, n_max: usize, th: &Thresholds) -> Result<ConditionReport> {
    p.validate()?;
    let forster = forster_margin(p, n_max);
    let stark_scale = p.coupling_a.powi(2) / p.cavity_detuning_a.abs();
    let stark = (p.coupling_a.powi(2) / p.cavity_detuning_a
        - p.coupling_b.powi(2) / p.cavity_detuning_b)
        .abs();
    let sgg_scale = p.rabi1 * p.coupling_a / p.laser_detuning1.abs();
    let sgg = (sgg_scale - p.rabi2 * p.coupling_b / p.laser_detuning2.abs()).abs();
    let mut ratios = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let (i1, i2) = intermediate_detunings(p, n);
        let rabi = effective_rabi(p, n)?;
        let ratio = if rabi == 0.0 {
            f64::INFINITY
        } else {
            (i1 + i2).abs() / rabi.abs()
        };
        ratios.push((n, ratio));
    }
    let (t1, _) = two_photon_rabi(p, 0);
    let i1 = intermediate_detunings(p, 0).0;
    let eta = p.laser_detuning2.abs() / p.rabi2;
    let eta_tilde = i1.abs() / t1.abs();
    let bound = if eta.is_finite() && eta_tilde.is_finite() && eta > 0.0 && eta_tilde > 0.0 {
        max_rabi_bound(p.coupling_b, eta, eta_tilde, n_max).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    let verdict = Verdicts {
        forster: forster.map_or(true, |m| m > th.forster_min),
        stark_match: stark < th.stark_rel * stark_scale,
        sgg_match: sgg < th.sgg_rel * sgg_scale,
        resonance: ratios.iter().all(|&(_, r)| r < th.resonance_max),
    };
    Ok(ConditionReport {
        n_max,
        forster_margin: forster,
        stark_match_residual: stark,
        sgg_match_residual: sgg,
        resonance_ratio: ratios,
        bound_omega_max: bound,
        thresholds: *th,
        verdict,
    })
}

/// Default probe range `ceil(2 nbar)`.
pub fn default_n_max(nbar: f64) -> usize {
    (2.0 * nbar).ceil().max(0.0) as usize
}

/// Bose-Einstein occupation of a mode at `frequency_ghz` and `temperature_k`.
pub fn thermal_occupation(frequency_ghz: f64, temperature_k: f64) -> Result<f64> {
    if !(frequency_ghz > 0.0) {
        return Err(Error::InvalidParam {
            key: "frequency",
            reason: format!("{frequency_ghz} must be > 0"),
        });
    }
    if temperature_k < 0.0 || temperature_k.is_nan() {
        return Err(Error::InvalidParam {
            key: "temperature",
            reason: format!("{temperature_k} must be >= 0"),
        });
    }
    if temperature_k == 0.0 {
        return Ok(0.0);
    }
    let x = PLANCK * frequency_ghz * 1e9 / (BOLTZMANN * temperature_k);
    Ok(occupation_from_ratio(x))
}

/// Occupation for a given `hbar omega / (k T)`.
pub fn occupation_from_ratio(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

/// Thermal photon-number probability `nbar^n / (nbar + 1)^(n + 1)`.
pub fn thermal_distribution(nbar: f64, n: usize) -> f64 {
    let q = nbar / (nbar + 1.0);
    q.powi(n as i32) / (nbar + 1.0)
}

/// Smallest `N` with `sum_{n <= N} p(n) >= 1 - tail`.
pub fn thermal_cutoff(nbar: f64, tail: f64) -> usize {
    if nbar <= 0.0 {
        return 0;
    }
    let q = nbar / (nbar + 1.0);
    // 1 - q^(N+1) >= 1 - tail
    let mut n = ((tail.ln() / q.ln()).ceil() as i64 - 1).max(0) as usize;
    while n > 0 && 1.0 - q.powi(n as i32) >= 1.0 - tail {
        n -= 1;
    }
    while 1.0 - q.powi(n as i32 + 1) < 1.0 - tail {
        n += 1;
    }
    n
}
