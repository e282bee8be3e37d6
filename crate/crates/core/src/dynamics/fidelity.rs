//! Thermally averaged `|gg> -> |rr>` transfer.

use serde::{Deserialize, Serialize};

use super::{propagate_lindblad, propagate_unitary, Integrity, PropagatorOptions};
use crate::effective::{thermal_cutoff, thermal_distribution};
use crate::error::{Error, Result};
use crate::model::{lindblad_set, rotating_frame_hamiltonian, SystemParams};
use crate::par;
use crate::qspace::{CompositeSpace, Level, QuantumState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityOptions {
    pub band_halfwidth: usize,
    /// Thermal weight left out of the average.
    pub tail: f64,
    /// Band widenings (by 2) tried when edge population exceeds the limit.
    pub band_retries: usize,
    pub propagator: PropagatorOptions,
}

impl Default for FidelityOptions {
    fn default() -> Self {
        FidelityOptions {
            band_halfwidth: 4,
            tail: 1e-4,
            band_retries: 2,
            propagator: PropagatorOptions::default(),
        }
    }
}

/// `<rr,n| rho(t) |rr,n>` for initial `|gg,n>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub n: usize,
    pub value: f64,
    pub band_halfwidth: usize,
    pub integrity: Integrity,
    /// Edge population stayed above the limit after all retries.
    pub edge_flagged: bool,
}

fn single(params: &SystemParams, t: f64, n: usize, halfwidth: usize, opts: &FidelityOptions) -> Result<ProfilePoint> {
    let space = CompositeSpace::around(n, halfwidth);
    let h = rotating_frame_hamiltonian(params, &space)?;
    let lindblads = lindblad_set(params, &space)?;
    let psi0 = QuantumState::basis(&space, Level::G, Level::G, n)?;
    let rr = space.index(Level::R, Level::R, n);
    let times = [t];
    let (value, integrity) = if lindblads.is_empty() {
        let ev = propagate_unitary(&h, &psi0, &times)?;
        (ev.final_state[rr].norm_sqr(), ev.integrity)
    } else {
        let ev = propagate_lindblad(&h, &lindblads, &psi0, &times, &opts.propagator)?;
        (ev.final_state[(rr, rr)].re, ev.integrity)
    };
    if !integrity.state_ok() {
        return Err(Error::Propagation {
            time: t,
            reason: format!("state integrity violated: {integrity:?}"),
        });
    }
    Ok(ProfilePoint {
        n,
        value,
        band_halfwidth: halfwidth,
        integrity,
        edge_flagged: !integrity.edge_ok(),
    })
}

/// Transfer for a single photon number, widening the band while the edge
/// population stays above the limit.
pub fn transfer_point(params: &SystemParams, t: f64, n: usize, opts: &FidelityOptions) -> Result<ProfilePoint> {
    let mut hw = opts.band_halfwidth;
    let mut point = single(params, t, n, hw, opts)?;
    for _ in 0..opts.band_retries {
        if !point.edge_flagged {
            break;
        }
        log::warn!(
            "n = {n}: edge population {:e} with band half-width {hw}; widening",
            point.integrity.max_edge_population
        );
        hw += 2;
        point = single(params, t, n, hw, opts)?;
    }
    Ok(point)
}

/// Transfer into `|rr,n>` at time `t` for each initial `|gg,n>`, computed
/// as independent tasks and returned in the order of `ns`.
pub fn transfer_profile(
    params: &SystemParams,
    t: f64,
    ns: &[usize],
    opts: &FidelityOptions,
) -> Result<Vec<ProfilePoint>> {
    if !(t > 0.0) {
        return Err(Error::InvalidParam {
            key: "t_pi",
            reason: format!("{t} must be > 0"),
        });
    }
    par::map(ns, |&n| {
        transfer_point(params, t, n, opts).map_err(|e| Error::AtPhotonNumber {
            n,
            source: Box::new(e),
        })
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalFidelity {
    pub nbar: f64,
    pub fidelity: f64,
    /// Total thermal weight of the included photon numbers.
    pub weight: f64,
    pub n_terms: usize,
}

/// Thermal average over a precomputed profile (ascending `n` from 0).
pub fn thermal_average(profile: &[ProfilePoint], nbar: f64, tail: f64) -> Result<ThermalFidelity> {
    let cutoff = thermal_cutoff(nbar, tail);
    if profile.len() <= cutoff || profile.iter().enumerate().any(|(i, p)| p.n != i) {
        return Err(Error::InvalidRange {
            what: "profile",
            detail: format!("needs photon numbers 0..={cutoff} in order"),
        });
    }
    let mut fidelity = 0.0;
    let mut weight = 0.0;
    for p in &profile[..=cutoff] {
        let w = thermal_distribution(nbar, p.n);
        fidelity += w * p.value;
        weight += w;
    }
    Ok(ThermalFidelity {
        nbar,
        fidelity,
        weight,
        n_terms: cutoff + 1,
    })
}

/// `F = sum_n p(n | nbar) <rr,n| rho(t_pi) |rr,n>`; the omitted tail
/// contributes zero.
pub fn transfer_fidelity(
    params: &SystemParams,
    t_pi: f64,
    nbar: f64,
    opts: &FidelityOptions,
) -> Result<ThermalFidelity> {
    if !(nbar >= 0.0) {
        return Err(Error::InvalidParam {
            key: "nbar_th",
            reason: format!("{nbar} must be >= 0"),
        });
    }
    let cutoff = thermal_cutoff(nbar, opts.tail);
    let ns: Vec<usize> = (0..=cutoff).collect();
    let profile = transfer_profile(params, t_pi, &ns, opts)?;
    thermal_average(&profile, nbar, opts.tail)
}
