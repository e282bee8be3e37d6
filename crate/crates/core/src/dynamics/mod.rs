//! Pure-state and master-equation propagation with observable extraction.

pub mod analysis;
pub mod blocks;
mod exact;
pub mod fidelity;
pub mod krylov;
mod secular;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qspace::{CompositeSpace, Level, Operator, QuantumState, C64};

pub use analysis::{
    calibrate_resonance, effective_gap, extract_frequency, transfer_contrast, Calibration,
    FrequencyEstimate,
};
pub use blocks::{BlockDensity, BlockLayout, Dissipation, Partition};
pub use fidelity::{
    thermal_average, transfer_fidelity, transfer_point, transfer_profile, FidelityOptions,
    ProfilePoint, ThermalFidelity,
};
pub use krylov::{expv, KrylovOptions};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Populations may exceed one by at most this much.
pub const POPULATION_SLACK: f64 = 1e-8;
/// Largest tolerated population on truncated Fock edges.
pub const EDGE_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t_us: f64,
    pub pop_gg: f64,
    pub pop_rr: f64,
    pub coh_gg_rr: C64,
    pub photon_mean: f64,
    pub edge_population: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
}

impl TimeSeries {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t_us).collect()
    }

    pub fn pop_rr(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.pop_rr).collect()
    }

    pub fn pop_gg(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.pop_gg).collect()
    }

    pub fn max_edge_population(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.edge_population)
            .fold(0.0, f64::max)
    }

    /// Checks ordering, population bounds and the coherence bound.
    pub fn validate(&self) -> Result<()> {
        for w in self.samples.windows(2) {
            if !(w[1].t_us > w[0].t_us) {
                return Err(Error::InvalidState(format!(
                    "times not strictly increasing at {}",
                    w[1].t_us
                )));
            }
        }
        for s in &self.samples {
            for (name, p) in [("pop_gg", s.pop_gg), ("pop_rr", s.pop_rr)] {
                if !(-POPULATION_SLACK..=1.0 + POPULATION_SLACK).contains(&p) {
                    return Err(Error::InvalidState(format!("{name} = {p} at t = {}", s.t_us)));
                }
            }
            let bound = (s.pop_gg.max(0.0) * s.pop_rr.max(0.0)).sqrt() + POPULATION_SLACK;
            if s.coh_gg_rr.norm() > bound {
                return Err(Error::InvalidState(format!(
                    "coherence {} exceeds bound {bound} at t = {}",
                    s.coh_gg_rr.norm(),
                    s.t_us
                )));
            }
        }
        Ok(())
    }
}

/// Worst-case state diagnostics over a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integrity {
    pub max_trace_error: f64,
    pub max_hermitian_error: f64,
    pub min_eigenvalue: f64,
    pub max_edge_population: f64,
}

impl Default for Integrity {
    fn default() -> Self {
        Integrity {
            max_trace_error: 0.0,
            max_hermitian_error: 0.0,
            min_eigenvalue: 0.0,
            max_edge_population: 0.0,
        }
    }
}

impl Integrity {
    pub fn merge(&mut self, other: &Integrity) {
        self.max_trace_error = self.max_trace_error.max(other.max_trace_error);
        self.max_hermitian_error = self.max_hermitian_error.max(other.max_hermitian_error);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.max_edge_population = self.max_edge_population.max(other.max_edge_population);
    }

    /// Trace, hermiticity and positivity within the state tolerances.
    pub fn state_ok(&self) -> bool {
        self.max_trace_error < crate::qspace::NORM_TOL
            && self.max_hermitian_error < crate::qspace::DENSITY_HERMITIAN_TOL
            && self.min_eigenvalue >= -crate::qspace::POSITIVITY_TOL
    }

    pub fn edge_ok(&self) -> bool {
        self.max_edge_population < EDGE_LIMIT
    }
}

/// Index sets for the observables of a [`Sample`].
#[derive(Clone, Debug)]
pub(crate) struct Probes {
    gg: Vec<usize>,
    rr: Vec<usize>,
    photons: Vec<f64>,
    edge: Vec<bool>,
}

impl Probes {
    pub(crate) fn new(space: &CompositeSpace) -> Self {
        let ns = space.fock_min()..=space.fock_max();
        Probes {
            gg: ns.clone().map(|n| space.index(Level::G, Level::G, n)).collect(),
            rr: ns.map(|n| space.index(Level::R, Level::R, n)).collect(),
            photons: (0..space.dim()).map(|i| space.photons(i) as f64).collect(),
            edge: (0..space.dim())
                .map(|i| space.is_truncation_edge(space.photons(i)))
                .collect(),
        }
    }

    pub(crate) fn from_amplitudes(&self, t_us: f64, psi: &[C64]) -> Sample {
        let pop = |i: usize| psi[i].norm_sqr();
        Sample {
            t_us,
            pop_gg: self.gg.iter().map(|&i| pop(i)).sum(),
            pop_rr: self.rr.iter().map(|&i| pop(i)).sum(),
            coh_gg_rr: self
                .gg
                .iter()
                .zip(&self.rr)
                .map(|(&g, &r)| psi[g] * psi[r].conj())
                .sum(),
            photon_mean: psi.iter().zip(&self.photons).map(|(a, n)| a.norm_sqr() * n).sum(),
            edge_population: psi
                .iter()
                .zip(&self.edge)
                .filter(|(_, &e)| e)
                .map(|(a, _)| a.norm_sqr())
                .sum(),
        }
    }

    pub(crate) fn from_blocks(&self, t_us: f64, rho: &BlockDensity) -> Sample {
        let diag = |i: usize| rho.element(i, i).re;
        Sample {
            t_us,
            pop_gg: self.gg.iter().map(|&i| diag(i)).sum(),
            pop_rr: self.rr.iter().map(|&i| diag(i)).sum(),
            coh_gg_rr: self
                .gg
                .iter()
                .zip(&self.rr)
                .map(|(&g, &r)| rho.element(g, r))
                .sum(),
            photon_mean: (0..self.photons.len()).map(|i| diag(i) * self.photons[i]).sum(),
            edge_population: (0..self.edge.len())
                .filter(|&i| self.edge[i])
                .map(diag)
                .sum(),
        }
    }
}

fn integrity_of(rho: &BlockDensity, sample: &Sample) -> Integrity {
    Integrity {
        max_trace_error: (rho.trace() - C64::new(1.0, 0.0)).norm(),
        max_hermitian_error: rho.hermitian_deviation(),
        min_eigenvalue: rho.min_eigenvalue(),
        max_edge_population: sample.edge_population,
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidRange {
            what: "time grid",
            detail: "empty".into(),
        });
    }
    if times[0] < 0.0 || !times.iter().all(|t| t.is_finite()) {
        return Err(Error::InvalidRange {
            what: "time grid",
            detail: "times must be finite and >= 0".into(),
        });
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidRange {
            what: "time grid",
            detail: "times must be strictly increasing".into(),
        });
    }
    Ok(())
}

/// Evenly spaced grid of `count` points on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|k| t_max * k as f64 / (count - 1) as f64)
        .collect()
}

#[derive(Clone, Debug)]
pub struct UnitaryEvolution {
    pub series: TimeSeries,
    pub integrity: Integrity,
    pub final_state: DVector<C64>,
}

/// Hermitian eigendecomposition of each component of `h` touched by `support`.
pub(crate) struct Spectrum {
    pub energies: Vec<Option<DVector<f64>>>,
    pub vectors: Vec<Option<DMatrix<C64>>>,
}

impl Spectrum {
    pub(crate) fn new(h: &Operator, partition: &Partition, comps: impl IntoIterator<Item = usize>) -> Self {
        let mut energies = vec![None; partition.len()];
        let mut vectors = vec![None; partition.len()];
        for c in comps {
            if energies[c].is_some() {
                continue;
            }
            let block = partition.restrict(h, c, c);
            let eig = nalgebra::SymmetricEigen::new(block);
            energies[c] = Some(eig.eigenvalues);
            vectors[c] = Some(eig.eigenvectors);
        }
        Spectrum { energies, vectors }
    }
}

/// Exact evolution `psi(t) = V exp(-i 2 pi E t) V^dagger psi0` by
/// blockwise eigendecomposition.
pub fn propagate_unitary(h: &Operator, psi0: &QuantumState, times: &[f64]) -> Result<UnitaryEvolution> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(h.hermitian_deviation()));
    }
    let amps = match psi0 {
        QuantumState::Pure { amplitudes, .. } => amplitudes,
        QuantumState::Mixed { .. } => {
            return Err(Error::InvalidState("pure state required".into()));
        }
    };
    if psi0.space() != h.space() {
        return Err(Error::SpaceMismatch);
    }
    psi0.validate()?;
    check_times(times)?;
    let space = *h.space();
    let partition = Partition::from_operators(space.dim(), [h]);
    let comps: Vec<usize> = {
        let mut c: Vec<usize> = (0..space.dim())
            .filter(|&i| amps[i] != C64::new(0.0, 0.0))
            .map(|i| partition.comp_of(i))
            .collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    let spectrum = Spectrum::new(h, &partition, comps.iter().copied());
    // Dressed coefficients per component.
    let coeffs: Vec<DVector<C64>> = comps
        .iter()
        .map(|&c| {
            let v = spectrum.vectors[c].as_ref().unwrap();
            let local = DVector::from_iterator(
                partition.size(c),
                partition.members(c).iter().map(|&i| amps[i]),
            );
            v.adjoint() * local
        })
        .collect();

    let probes = Probes::new(&space);
    let mut psi = vec![C64::new(0.0, 0.0); space.dim()];
    let mut samples = Vec::with_capacity(times.len());
    let mut integrity = Integrity::default();
    for &t in times {
        if t == 0.0 {
            // Exact identity rather than V V^dagger.
            psi.copy_from_slice(amps.as_slice());
        } else {
            for (k, &c) in comps.iter().enumerate() {
                let e = spectrum.energies[c].as_ref().unwrap();
                let v = spectrum.vectors[c].as_ref().unwrap();
                let phased = DVector::from_iterator(
                    e.len(),
                    e.iter()
                        .zip(coeffs[k].iter())
                        .map(|(&ek, &ck)| ck * C64::from_polar(1.0, -TWO_PI * ek * t)),
                );
                let local = v * phased;
                for (j, &i) in partition.members(c).iter().enumerate() {
                    psi[i] = local[j];
                }
            }
        }
        let sample = probes.from_amplitudes(t, &psi);
        let norm2: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        integrity.max_trace_error = integrity.max_trace_error.max((norm2 - 1.0).abs());
        integrity.max_edge_population = integrity.max_edge_population.max(sample.edge_population);
        samples.push(sample);
    }
    Ok(UnitaryEvolution {
        series: TimeSeries { samples },
        integrity,
        final_state: DVector::from_vec(psi),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Engine {
    /// Krylov propagation of the full block-sparse Liouvillian.
    Exact,
    /// Dressed-basis propagation keeping only dissipative couplings between
    /// modes whose frequencies lie within connected clusters of spacing
    /// below `cutoff_mhz`.
    Secular { cutoff_mhz: f64 },
}

impl Default for Engine {
    fn default() -> Self {
        Engine::Secular { cutoff_mhz: 2.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PropagatorOptions {
    pub engine: Engine,
    pub krylov: KrylovOptions,
}

#[derive(Clone, Debug)]
pub struct DensityEvolution {
    pub series: TimeSeries,
    pub integrity: Integrity,
    pub final_state: DMatrix<C64>,
}

/// Master-equation propagation `d rho / dt = -i 2 pi [H, rho] + 2 pi sum D[L] rho`.
pub fn propagate_lindblad(
    h: &Operator,
    lindblads: &[Operator],
    rho0: &QuantumState,
    times: &[f64],
    opts: &PropagatorOptions,
) -> Result<DensityEvolution> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(h.hermitian_deviation()));
    }
    if rho0.space() != h.space() || lindblads.iter().any(|l| l.space() != h.space()) {
        return Err(Error::SpaceMismatch);
    }
    rho0.validate()?;
    check_times(times)?;
    let space = *h.space();
    let dim = space.dim();
    let rho = rho0.density();

    let mut loss_ops = Vec::with_capacity(lindblads.len());
    for l in lindblads {
        loss_ops.push(l.adjoint().mul(l)?);
    }
    let partition = Partition::from_operators(dim, std::iter::once(h).chain(loss_ops.iter()));
    let dissipation = Dissipation::new(&partition, lindblads);
    let mut initial = Vec::new();
    for r in 0..dim {
        for c in 0..dim {
            if rho[(r, c)] != C64::new(0.0, 0.0) {
                initial.push((partition.comp_of(r), partition.comp_of(c)));
            }
        }
    }
    let layout = BlockLayout::reachable(&partition, &dissipation, initial);
    let start = BlockDensity::from_dense(&partition, &layout, &rho);
    let probes = Probes::new(&space);

    let mut samples = Vec::with_capacity(times.len());
    let mut integrity = Integrity::default();
    let mut observe = |state: &BlockDensity, t: f64| {
        let s = probes.from_blocks(t, state);
        integrity.merge(&integrity_of(state, &s));
        samples.push(s);
    };
    let last = match opts.engine {
        Engine::Exact => exact::run(h, &partition, &dissipation, &layout, start, times, &opts.krylov, &mut observe)?,
        Engine::Secular { cutoff_mhz } => secular::run(
            h,
            &partition,
            &dissipation,
            &layout,
            start,
            times,
            cutoff_mhz,
            &opts.krylov,
            &mut observe,
        )?,
    };
    Ok(DensityEvolution {
        series: TimeSeries { samples },
        integrity,
        final_state: last.to_dense(dim),
    })
}
