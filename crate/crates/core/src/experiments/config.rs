//! Strict JSON configuration for the canned experiments.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Engine, FidelityOptions, KrylovOptions, PropagatorOptions};
use crate::effective::Thresholds;
use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Photon numbers above this are rejected at parse time.
pub const MAX_PHOTON_NUMBER: usize = 400;

/// A rate given either in MHz or in units of the reference frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rate {
    Mhz(f64),
    Figure(f64),
}

impl Rate {
    pub fn mhz(&self, omega_ref_mhz: f64) -> f64 {
        match *self {
            Rate::Mhz(v) => v,
            Rate::Figure(v) => v * omega_ref_mhz,
        }
    }

    pub fn figure(&self, omega_ref_mhz: f64) -> f64 {
        match *self {
            Rate::Mhz(v) => v / omega_ref_mhz,
            Rate::Figure(v) => v,
        }
    }
}

/// Model constants as they appear in the file. Frequencies in MHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub omega1: f64,
    pub omega2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub g_a: f64,
    pub g_b: f64,
    #[serde(rename = "Delta_a")]
    pub cavity_detuning_a: f64,
    #[serde(rename = "Delta_b")]
    pub cavity_detuning_b: f64,
    #[serde(rename = "Gamma", default, skip_serializing_if = "Option::is_none")]
    pub decay_mhz: Option<f64>,
    #[serde(rename = "Gamma_fig", default, skip_serializing_if = "Option::is_none")]
    pub decay_fig: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_deph: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_fig: Option<f64>,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub nbar_th: f64,
    #[serde(default)]
    pub rydberg_offset: f64,
}

impl ParamsSection {
    pub fn reference() -> Self {
        let p = SystemParams::reference();
        ParamsSection {
            omega1: p.rabi1,
            omega2: p.rabi2,
            delta1: p.laser_detuning1,
            delta2: p.laser_detuning2,
            g_a: p.coupling_a,
            g_b: p.coupling_b,
            cavity_detuning_a: p.cavity_detuning_a,
            cavity_detuning_b: p.cavity_detuning_b,
            decay_mhz: None,
            decay_fig: None,
            gamma_deph: None,
            gamma_fig: None,
            kappa: 0.0,
            nbar_th: 0.0,
            rydberg_offset: 0.0,
        }
    }

    pub fn decay(&self) -> Rate {
        match (self.decay_mhz, self.decay_fig) {
            (_, Some(v)) => Rate::Figure(v),
            (Some(v), None) => Rate::Mhz(v),
            (None, None) => Rate::Mhz(0.0),
        }
    }

    pub fn dephasing(&self) -> Rate {
        match (self.gamma_deph, self.gamma_fig) {
            (_, Some(v)) => Rate::Figure(v),
            (Some(v), None) => Rate::Mhz(v),
            (None, None) => Rate::Mhz(0.0),
        }
    }

    /// Hamiltonian constants with all rates converted through `omega_ref_mhz`.
    pub fn system(&self, omega_ref_mhz: f64) -> SystemParams {
        SystemParams {
            rabi1: self.omega1,
            rabi2: self.omega2,
            laser_detuning1: self.delta1,
            laser_detuning2: self.delta2,
            coupling_a: self.g_a,
            coupling_b: self.g_b,
            cavity_detuning_a: self.cavity_detuning_a,
            cavity_detuning_b: self.cavity_detuning_b,
            decay: self.decay().mhz(omega_ref_mhz),
            dephasing: self.dephasing().mhz(omega_ref_mhz),
            cavity_loss: self.kappa,
            thermal_photons: self.nbar_th,
            rydberg_offset: self.rydberg_offset,
        }
    }

    /// Dissipation-free constants; needs no reference frequency.
    pub fn coherent(&self) -> SystemParams {
        self.system(1.0).without_dissipation()
    }

    fn validate(&self) -> Result<()> {
        if self.decay_mhz.is_some() && self.decay_fig.is_some() {
            return Err(config_error("params", "`Gamma` and `Gamma_fig` are mutually exclusive"));
        }
        if self.gamma_deph.is_some() && self.gamma_fig.is_some() {
            return Err(config_error(
                "params",
                "`gamma_deph` and `gamma_fig` are mutually exclusive",
            ));
        }
        for (key, rate) in [
            ("Gamma_fig", self.decay_fig),
            ("gamma_fig", self.gamma_fig),
        ] {
            if let Some(v) = rate {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(config_error(format!("params.{key}"), format!("{v} must be finite and >= 0")));
                }
            }
        }
        self.system(1.0).validate().map_err(|e| match e {
            Error::InvalidParam { key, reason } => config_error(format!("params.{key}"), reason),
            other => other,
        })
    }
}

/// Which resonance trim is applied before the dynamics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Use `rydberg_offset` as given.
    None,
    /// Calibrate once at `n = 0` and apply to every photon number.
    #[default]
    Reference,
    /// Calibrate separately for every photon number.
    PerN,
}

/// Figure-unit reference frequency: measured in a pilot run or pinned (kHz).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OmegaRef {
    Measured,
    Fixed(f64),
}

impl Default for OmegaRef {
    fn default() -> Self {
        OmegaRef::Measured
    }
}

impl std::str::FromStr for OmegaRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("measured") {
            return Ok(OmegaRef::Measured);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| config_error("omega_ref", format!("expected \"measured\" or a number in kHz, got {s:?}")))?;
        OmegaRef::fixed(v)
    }
}

impl OmegaRef {
    pub fn fixed(khz: f64) -> Result<Self> {
        if !(khz > 0.0 && khz.is_finite()) {
            return Err(config_error("omega_ref", format!("{khz} must be > 0")));
        }
        Ok(OmegaRef::Fixed(khz))
    }
}

impl Serialize for OmegaRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            OmegaRef::Measured => s.serialize_str("measured"),
            OmegaRef::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for OmegaRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            Value(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Word(w) => w.parse().map_err(serde::de::Error::custom),
            Raw::Value(v) => OmegaRef::fixed(v).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Secular,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub engine: EngineKind,
    /// Frequency spacing (MHz) that separates dressed-mode clusters.
    pub secular_cutoff_mhz: f64,
    pub krylov_dim: usize,
    /// Krylov local error per microsecond, relative.
    pub krylov_tol: f64,
    /// Thermal weight left out of the fidelity average.
    pub thermal_tail: f64,
    pub band_retries: usize,
    /// Half-width (kHz) of the resonance calibration window.
    pub calibration_width_khz: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let k = KrylovOptions::default();
        Tolerances {
            engine: EngineKind::Secular,
            secular_cutoff_mhz: 2.0,
            krylov_dim: k.dim,
            krylov_tol: k.tol,
            thermal_tail: 1e-4,
            band_retries: 2,
            calibration_width_khz: 30.0,
        }
    }
}

impl Tolerances {
    pub fn propagator(&self) -> PropagatorOptions {
        PropagatorOptions {
            engine: match self.engine {
                EngineKind::Secular => Engine::Secular {
                    cutoff_mhz: self.secular_cutoff_mhz,
                },
                EngineKind::Exact => Engine::Exact,
            },
            krylov: KrylovOptions {
                dim: self.krylov_dim,
                tol: self.krylov_tol,
                ..KrylovOptions::default()
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("tolerances.secular_cutoff_mhz", self.secular_cutoff_mhz),
            ("tolerances.krylov_tol", self.krylov_tol),
            ("tolerances.thermal_tail", self.thermal_tail),
            ("tolerances.calibration_width_khz", self.calibration_width_khz),
        ];
        for (path, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error(path, format!("{v} must be > 0")));
            }
        }
        if self.thermal_tail >= 1.0 {
            return Err(config_error("tolerances.thermal_tail", "must be < 1"));
        }
        if self.krylov_dim < 2 {
            return Err(config_error("tolerances.krylov_dim", "must be >= 2"));
        }
        Ok(())
    }
}

fn default_photon_numbers() -> Vec<usize> {
    vec![0, 5, 10, 20]
}

fn default_gammas() -> Vec<f64> {
    vec![0.0, 0.06, 0.2, 0.4]
}

fn default_nbar_grid() -> Vec<f64> {
    (0..=10).map(f64::from).collect()
}

fn default_t_max_scaled() -> f64 {
    3.0
}

fn default_samples_per_period() -> usize {
    200
}

fn default_band_halfwidth() -> usize {
    4
}

fn default_effective_range() -> [usize; 2] {
    [0, 20]
}

/// The full configuration document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamsSection,
    #[serde(default)]
    pub omega_ref: OmegaRef,
    #[serde(default = "default_photon_numbers")]
    pub photon_numbers: Vec<usize>,
    /// Dephasing rates of the fidelity curves, in figure units.
    #[serde(default = "default_gammas")]
    pub gammas_fig: Vec<f64>,
    #[serde(default = "default_nbar_grid")]
    pub nbar_grid: Vec<f64>,
    /// Rabi horizon in units of the reference period.
    #[serde(default = "default_t_max_scaled")]
    pub t_max_scaled: f64,
    #[serde(default = "default_samples_per_period")]
    pub samples_per_period: usize,
    #[serde(default = "default_band_halfwidth")]
    pub band_halfwidth: usize,
    #[serde(default)]
    pub calibration: CalibrationMode,
    #[serde(default)]
    pub gate_photon_number: usize,
    /// Probe range of the condition report; `ceil(2 nbar_th)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Inclusive photon-number range of the effective-parameter dump.
    #[serde(default = "default_effective_range")]
    pub effective_range: [usize; 2],
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub tolerances: Tolerances,
}

pub(crate) fn config_error(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    /// Defaults with the reference parameter set.
    pub fn reference() -> Self {
        serde_json::from_value(serde_json::json!({ "params": ParamsSection::reference() }))
            .expect("reference config is valid")
    }

    /// Parses a config document, or the `config` member of a run sidecar.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| config_error("<document>", e.to_string()))?;
        let value = match value {
            serde_json::Value::Object(mut map) if map.contains_key("experiment") && map.contains_key("config") => {
                map.remove("config").unwrap()
            }
            other => other,
        };
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "<document>".to_string() } else { path };
            config_error(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| config_error(path.display().to_string(), e.to_string()))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let OmegaRef::Fixed(v) = self.omega_ref {
            OmegaRef::fixed(v)?;
        }
        if self.photon_numbers.is_empty() {
            return Err(config_error("photon_numbers", "must not be empty"));
        }
        if let Some(&n) = self.photon_numbers.iter().find(|&&n| n > MAX_PHOTON_NUMBER) {
            return Err(config_error(
                "photon_numbers",
                format!("{n} exceeds the supported maximum {MAX_PHOTON_NUMBER}"),
            ));
        }
        if self.gate_photon_number > MAX_PHOTON_NUMBER {
            return Err(config_error("gate_photon_number", format!("exceeds {MAX_PHOTON_NUMBER}")));
        }
        if self.gammas_fig.is_empty() {
            return Err(config_error("gammas_fig", "must not be empty"));
        }
        for (i, &g) in self.gammas_fig.iter().enumerate() {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(config_error(format!("gammas_fig[{i}]"), format!("{g} must be finite and >= 0")));
            }
        }
        if self.nbar_grid.is_empty() {
            return Err(config_error("nbar_grid", "must not be empty"));
        }
        for (i, &nb) in self.nbar_grid.iter().enumerate() {
            if !(nb >= 0.0 && nb.is_finite()) {
                return Err(config_error(format!("nbar_grid[{i}]"), format!("{nb} must be finite and >= 0")));
            }
        }
        if !(self.t_max_scaled > 0.0 && self.t_max_scaled.is_finite()) {
            return Err(config_error("t_max_scaled", format!("{} must be > 0", self.t_max_scaled)));
        }
        if self.samples_per_period < 4 {
            return Err(config_error("samples_per_period", "must be >= 4"));
        }
        if self.band_halfwidth < 1 {
            return Err(config_error("band_halfwidth", "must be >= 1"));
        }
        let [lo, hi] = self.effective_range;
        if lo > hi {
            return Err(config_error("effective_range", format!("{lo} > {hi}")));
        }
        let th = &self.thresholds;
        for (path, v) in [
            ("thresholds.forster_min", th.forster_min),
            ("thresholds.stark_rel", th.stark_rel),
            ("thresholds.sgg_rel", th.sgg_rel),
            ("thresholds.resonance_max", th.resonance_max),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(config_error(path, format!("{v} must be finite and >= 0")));
            }
        }
        self.tolerances.validate()
    }

    pub fn fidelity_options(&self) -> FidelityOptions {
        FidelityOptions {
            band_halfwidth: self.band_halfwidth,
            tail: self.tolerances.thermal_tail,
            band_retries: self.tolerances.band_retries,
            propagator: self.tolerances.propagator(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
