//! Full Rabi cycle on `|gg,n>` read as a controlled-phase gate.
//!
//! A spectator pair with one atom in the idle level `s` evolves exactly
//! like `|gg,n>` with that atom's laser switched off, because an atom
//! sitting in `g` without its laser couples to nothing. The conditional
//! phase is `phi_gg - phi_gs - phi_sg` (`|ss>` stays at zero frame energy).

use nalgebra::DMatrix;
use serde::Serialize;

use super::output::{OutputDir, Sidecar};
use super::setup::{measure_frequency, Setup};
use crate::dynamics::{propagate_lindblad, Partition, PropagatorOptions, TWO_PI};
use crate::error::{Error, Result};
use crate::model::{lindblad_set, rotating_frame_hamiltonian, SystemParams};
use crate::qspace::{CompositeSpace, Level, QuantumState, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GateAmplitudes {
    /// `<gg,n| psi(t) >` (no-jump amplitude when dissipative).
    pub gg: C64,
    /// Same with the second laser off.
    pub gs: C64,
    /// Same with the first laser off.
    pub sg: C64,
    /// `<gg,n| rho(t) |gg,n>`.
    pub survival: f64,
}

impl GateAmplitudes {
    pub fn conditional_phase(&self) -> f64 {
        (self.gg * self.gs.conj() * self.sg.conj()).arg()
    }
}

/// `<gg,n| exp(-i 2 pi (H - i K / 2) t) |gg,n>` with `K = sum L^dagger L`.
fn no_jump_amplitude(params: &SystemParams, n: usize, hw: usize, t: f64) -> Result<C64> {
    let space = CompositeSpace::around(n, hw);
    let h = rotating_frame_hamiltonian(params, &space)?;
    let lindblads = lindblad_set(params, &space)?;
    let mut loss = Vec::with_capacity(lindblads.len());
    for l in &lindblads {
        loss.push(l.adjoint().mul(l)?);
    }
    let partition = Partition::from_operators(space.dim(), std::iter::once(&h).chain(loss.iter()));
    let gg = space.index(Level::G, Level::G, n);
    let c = partition.comp_of(gg);
    let mut gen: DMatrix<C64> = partition.restrict(&h, c, c) * C64::new(0.0, -TWO_PI * t);
    for k in &loss {
        gen -= partition.restrict(k, c, c) * C64::new(std::f64::consts::PI * t, 0.0);
    }
    let u = gen.exp();
    let local = partition.local_of(gg);
    Ok(u[(local, local)])
}

/// Amplitudes after time `t` on the band of half-width `hw`.
pub fn gate_amplitudes(
    params: &SystemParams,
    n: usize,
    hw: usize,
    t: f64,
    opts: &PropagatorOptions,
) -> Result<GateAmplitudes> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParam {
            key: "gate time",
            reason: format!("{t} must be finite and >= 0"),
        });
    }
    let gg = no_jump_amplitude(params, n, hw, t)?;
    let gs = no_jump_amplitude(&SystemParams { rabi2: 0.0, ..*params }, n, hw, t)?;
    let sg = no_jump_amplitude(&SystemParams { rabi1: 0.0, ..*params }, n, hw, t)?;
    let space = CompositeSpace::around(n, hw);
    let lindblads = lindblad_set(params, &space)?;
    let survival = if lindblads.is_empty() || t == 0.0 {
        gg.norm_sqr()
    } else {
        let h = rotating_frame_hamiltonian(params, &space)?;
        let psi0 = QuantumState::basis(&space, Level::G, Level::G, n)?;
        let ev = propagate_lindblad(&h, &lindblads, &psi0, &[t], opts)?;
        let i = space.index(Level::G, Level::G, n);
        ev.final_state[(i, i)].re
    };
    Ok(GateAmplitudes { gg, gs, sg, survival })
}

/// `|tr(U_ideal^dagger U)|^2 / 16` for `U = diag(e^{i phi}, 1, 1, 1)` and
/// `U_ideal = diag(-1, 1, 1, 1)`.
pub fn cphase_fidelity(phase: f64) -> f64 {
    (C64::new(3.0, 0.0) - C64::from_polar(1.0, phase)).norm_sqr() / 16.0
}

#[derive(Clone, Debug, Serialize)]
pub struct GateReport {
    pub n: usize,
    pub measured_frequency_khz: f64,
    /// `2 pi / Omega_exact`: one full cycle.
    pub t_2pi_us: f64,
    pub rydberg_offset_mhz: f64,
    pub method: &'static str,
    /// Literal `arg <gg,n|psi(t_2pi)>` in the rotating frame.
    pub phase_gg_raw: f64,
    pub phase_gs: f64,
    pub phase_sg: f64,
    /// Conditional phase relative to the spectator states, in `(-pi, pi]`.
    pub phase_gg: f64,
    pub survival_gg: f64,
    pub cphase_fidelity: f64,
    pub decay_mhz: f64,
    pub dephasing_mhz: f64,
    /// `1 - (Gamma + gamma) tau` with ordinary-frequency rates.
    pub decoherence_estimate_ordinary: f64,
    /// `1 - 2 pi (Gamma + gamma) tau`, rates read as angular.
    pub decoherence_estimate_angular: f64,
}

pub fn decoherence_estimates(decay_mhz: f64, dephasing_mhz: f64, tau_us: f64) -> (f64, f64) {
    let x = (decay_mhz + dephasing_mhz) * tau_us;
    (1.0 - x, 1.0 - TWO_PI * x)
}

pub fn run_gate_check(setup: &Setup) -> Result<GateReport> {
    let cfg = &setup.config;
    let n = cfg.gate_photon_number;
    let hw = cfg.band_halfwidth;
    let (params, _) = setup.calibrated(&setup.base_params(), n)?;
    let freq = measure_frequency(&params, n, hw)?;
    let t = 1.0 / freq.omega_mhz;
    let amps = gate_amplitudes(&params, n, hw, t, &cfg.tolerances.propagator())?;
    let phase = amps.conditional_phase();
    let (ordinary, angular) = decoherence_estimates(params.decay, params.dephasing, t);
    let dissipative = params.decay > 0.0 || params.dephasing > 0.0 || params.cavity_loss > 0.0;
    Ok(GateReport {
        n,
        measured_frequency_khz: freq.omega_mhz * 1e3,
        t_2pi_us: t,
        rydberg_offset_mhz: params.rydberg_offset,
        method: if dissipative { "lindblad+no-jump" } else { "unitary" },
        phase_gg_raw: amps.gg.arg(),
        phase_gs: amps.gs.arg(),
        phase_sg: amps.sg.arg(),
        phase_gg: phase,
        survival_gg: amps.survival,
        cphase_fidelity: cphase_fidelity(phase),
        decay_mhz: params.decay,
        dephasing_mhz: params.dephasing,
        decoherence_estimate_ordinary: ordinary,
        decoherence_estimate_angular: angular,
    })
}

impl GateReport {
    pub fn to_text(&self) -> String {
        format!(
            "gate on |gg,{n}>\n\
             measured frequency  {f:.4} kHz\n\
             t_2pi = tau         {t:.4} us\n\
             method              {m}\n\
             phase_gg            {p:.4} rad (|phase - pi| = {dp:.4})\n\
             phase_gg raw        {raw:.4} rad (spectators: gs {gs:.4}, sg {sg:.4})\n\
             survival_gg         {s:.6}\n\
             cphase_fidelity     {cf:.6}\n\
             1 - (G + g) tau     {o:.6} (ordinary-frequency rates)\n\
             1 - 2pi (G + g) tau {a:.6} (angular rates)\n",
            n = self.n,
            f = self.measured_frequency_khz,
            t = self.t_2pi_us,
            m = self.method,
            p = self.phase_gg,
            dp = (self.phase_gg.abs() - std::f64::consts::PI).abs(),
            raw = self.phase_gg_raw,
            gs = self.phase_gs,
            sg = self.phase_sg,
            s = self.survival_gg,
            cf = self.cphase_fidelity,
            o = self.decoherence_estimate_ordinary,
            a = self.decoherence_estimate_angular,
        )
    }
}

pub fn write_gate(setup: &Setup, report: &GateReport, out: &mut OutputDir) -> Result<()> {
    out.write_json(
        "gate.json",
        &Sidecar::new("gate", &setup.config, Some(&setup.resolution), report),
    )?;
    out.write_text("gate.txt", &report.to_text())?;
    Ok(())
}
