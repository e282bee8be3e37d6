//! Resolution of the reference frequency, calibration and per-run parameters.

use serde::Serialize;

use super::config::{CalibrationMode, ExperimentConfig, OmegaRef};
use crate::dynamics::{
    calibrate_resonance, extract_frequency, propagate_unitary, uniform_grid, Calibration,
    FrequencyEstimate,
};
use crate::effective::{closed_form_rabi, effective_rabi};
use crate::error::{Error, Result};
use crate::model::{rotating_frame_hamiltonian, SystemParams};
use crate::qspace::{CompositeSpace, Level, QuantumState};

const PILOT_SAMPLES_PER_PERIOD: f64 = 400.0;
const PILOT_DOUBLINGS: usize = 6;

/// Coherent `|gg,n>` evolution long enough to catch the first major
/// maximum of `pop_rr`. The horizon starts at 1.5 periods of the
/// perturbative estimate and doubles until a maximum is found.
pub fn measure_frequency(params: &SystemParams, n: usize, band_halfwidth: usize) -> Result<FrequencyEstimate> {
    let p = params.without_dissipation();
    let space = CompositeSpace::around(n, band_halfwidth);
    let h = rotating_frame_hamiltonian(&p, &space)?;
    let psi0 = QuantumState::basis(&space, Level::G, Level::G, n)?;
    let guess = effective_rabi(&p, n).map(f64::abs).unwrap_or(0.0);
    // Oscillation frequency is twice the coupling.
    let mut period = if guess > 0.0 { 1.0 / (2.0 * guess) } else { 100.0 };
    let mut horizon = 1.5 * period;
    for _ in 0..=PILOT_DOUBLINGS {
        let count = (PILOT_SAMPLES_PER_PERIOD * horizon / period).ceil() as usize + 1;
        let ev = propagate_unitary(&h, &psi0, &uniform_grid(horizon, count))?;
        match extract_frequency(&ev.series) {
            Ok(f) => return Ok(f),
            Err(Error::NoMaximum) => {
                log::debug!("no maximum within {horizon} us at n = {n}; doubling");
                horizon *= 2.0;
                period *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoMaximum)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolution {
    /// Reference frequency `Omega_ref / 2 pi` in kHz, used for figure units.
    pub omega_ref_khz: f64,
    pub omega_ref_source: &'static str,
    /// Pilot measurement at `n = 0` on the (calibrated) coherent model.
    pub pilot: FrequencyEstimate,
    pub measured_khz: f64,
    /// Closed-form perturbative coupling, kHz.
    pub closed_form_khz: f64,
    /// Two-path perturbative coupling at `n = 0`, kHz.
    pub two_path_khz: f64,
    /// `measured / closed form`.
    pub measured_over_closed_form: f64,
    /// Calibration at `n = 0` when the mode is not `none`.
    pub reference_calibration: Option<Calibration>,
    pub calibration_mode: CalibrationMode,
}

/// A config together with everything derived from the pilot run.
#[derive(Clone, Debug)]
pub struct Setup {
    pub config: ExperimentConfig,
    pub resolution: Resolution,
}

impl Setup {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let raw = config.params.coherent();
        let hw = config.band_halfwidth;
        let width = config.tolerances.calibration_width_khz;
        let reference_calibration = match config.calibration {
            CalibrationMode::None => None,
            _ => Some(calibrate_resonance(&raw, 0, width, hw)?),
        };
        let coherent = reference_calibration.map_or(raw, |c| c.apply(&raw));
        let pilot = measure_frequency(&coherent, 0, hw)?;
        let measured_khz = pilot.omega_mhz * 1e3;
        let (omega_ref_khz, omega_ref_source) = match config.omega_ref {
            OmegaRef::Measured => (measured_khz, "measured"),
            OmegaRef::Fixed(v) => (v, "fixed"),
        };
        let closed_form_khz = closed_form_rabi(&raw)?.abs() * 1e3;
        let two_path_khz = effective_rabi(&raw, 0)?.abs() * 1e3;
        log::info!(
            "reference frequency {omega_ref_khz:.4} kHz ({omega_ref_source}); measured {measured_khz:.4} kHz, closed form {closed_form_khz:.4} kHz"
        );
        let calibration_mode = config.calibration;
        Ok(Setup {
            config,
            resolution: Resolution {
                omega_ref_khz,
                omega_ref_source,
                pilot,
                measured_khz,
                closed_form_khz,
                two_path_khz,
                measured_over_closed_form: measured_khz / closed_form_khz,
                reference_calibration,
                calibration_mode,
            },
        })
    }

    pub fn omega_ref_mhz(&self) -> f64 {
        self.resolution.omega_ref_khz * 1e-3
    }

    /// Model with rates from the config, converted through the reference frequency.
    pub fn base_params(&self) -> SystemParams {
        self.config.params.system(self.omega_ref_mhz())
    }

    /// `base` with the resonance trim for photon number `n` applied.
    pub fn calibrated(&self, base: &SystemParams, n: usize) -> Result<(SystemParams, Option<Calibration>)> {
        match self.config.calibration {
            CalibrationMode::None => Ok((*base, None)),
            CalibrationMode::Reference => {
                let c = self.resolution.reference_calibration.expect("calibrated in setup");
                Ok((c.apply(base), Some(c)))
            }
            CalibrationMode::PerN => {
                let c = calibrate_resonance(
                    &base.without_dissipation(),
                    n,
                    self.config.tolerances.calibration_width_khz,
                    self.config.band_halfwidth,
                )?;
                Ok((c.apply(base), Some(c)))
            }
        }
    }

    /// Time in units of the reference period.
    pub fn scaled_time(&self, t_us: f64) -> f64 {
        t_us * self.omega_ref_mhz()
    }
}
