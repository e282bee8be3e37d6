//! `|gg,n> <-> |rr,n>` oscillations for several photon numbers.

use serde::Serialize;

use super::output::{OutputDir, Sidecar};
use super::setup::Setup;
use super::svg::{LineChart, Series};
use crate::dynamics::{
    extract_frequency, propagate_lindblad, propagate_unitary, uniform_grid, Calibration,
    FrequencyEstimate, Integrity, PropagatorOptions, TimeSeries,
};
use crate::error::{Error, Result};
use crate::model::{lindblad_set, rotating_frame_hamiltonian, SystemParams};
use crate::par;
use crate::qspace::{CompositeSpace, Level, QuantumState};

/// One set of dissipation rates, in both unit systems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateSetting {
    pub label: &'static str,
    pub decay_mhz: f64,
    pub dephasing_mhz: f64,
    pub decay_fig: f64,
    pub dephasing_fig: f64,
}

/// The coherent run, plus the configured rates when any dissipation is set.
pub fn rate_settings(setup: &Setup) -> Vec<RateSetting> {
    let base = setup.base_params();
    let w = setup.omega_ref_mhz();
    let mut out = vec![RateSetting {
        label: "coherent",
        decay_mhz: 0.0,
        dephasing_mhz: 0.0,
        decay_fig: 0.0,
        dephasing_fig: 0.0,
    }];
    if base.decay > 0.0 || base.dephasing > 0.0 || base.cavity_loss > 0.0 {
        out.push(RateSetting {
            label: "damped",
            decay_mhz: base.decay,
            dephasing_mhz: base.dephasing,
            decay_fig: base.decay / w,
            dephasing_fig: base.dephasing / w,
        });
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct RabiRecord {
    pub n: usize,
    pub rates: RateSetting,
    pub kappa_mhz: f64,
    pub rydberg_offset_mhz: f64,
    pub calibration: Option<Calibration>,
    pub band: [usize; 2],
    pub horizon_us: f64,
    pub samples: usize,
    pub method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub propagator: Option<PropagatorOptions>,
    pub frequency: Option<FrequencyEstimate>,
    /// Extracted oscillation frequency in kHz.
    pub omega_exact_khz: Option<f64>,
    pub max_pop_rr: f64,
    pub integrity: Integrity,
    pub edge_flagged: bool,
}

#[derive(Clone, Debug)]
pub struct RabiRun {
    pub record: RabiRecord,
    pub series: TimeSeries,
}

#[derive(Debug)]
pub struct RabiFailure {
    pub n: usize,
    pub label: &'static str,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct RabiOutcome {
    pub runs: Vec<RabiRun>,
    pub failures: Vec<RabiFailure>,
}

impl RabiOutcome {
    pub fn find(&self, n: usize, label: &str) -> Option<&RabiRun> {
        self.runs
            .iter()
            .find(|r| r.record.n == n && r.record.rates.label == label)
    }
}

/// Evolves `|gg,n>` on the band of half-width `hw`.
pub fn evolve(
    params: &SystemParams,
    n: usize,
    hw: usize,
    times: &[f64],
    opts: &PropagatorOptions,
) -> Result<(TimeSeries, Integrity, bool)> {
    let space = CompositeSpace::around(n, hw);
    let h = rotating_frame_hamiltonian(params, &space)?;
    let lindblads = lindblad_set(params, &space)?;
    let psi0 = QuantumState::basis(&space, Level::G, Level::G, n)?;
    if lindblads.is_empty() {
        let ev = propagate_unitary(&h, &psi0, times)?;
        Ok((ev.series, ev.integrity, true))
    } else {
        let ev = propagate_lindblad(&h, &lindblads, &psi0, times, opts)?;
        Ok((ev.series, ev.integrity, false))
    }
}

fn single(setup: &Setup, n: usize, rates: RateSetting) -> Result<RabiRun> {
    let cfg = &setup.config;
    let base = SystemParams {
        decay: rates.decay_mhz,
        dephasing: rates.dephasing_mhz,
        ..setup.base_params()
    };
    let (params, calibration) = setup.calibrated(&base, n)?;
    let horizon = cfg.t_max_scaled / setup.omega_ref_mhz();
    let count = (cfg.samples_per_period as f64 * cfg.t_max_scaled).ceil() as usize + 1;
    let times = uniform_grid(horizon, count);
    let opts = cfg.tolerances.propagator();
    let mut hw = cfg.band_halfwidth;
    let (series, integrity, unitary) = {
        let mut attempt = evolve(&params, n, hw, &times, &opts)?;
        for _ in 0..cfg.tolerances.band_retries {
            if attempt.1.edge_ok() {
                break;
            }
            log::warn!(
                "n = {n} ({}): edge population {:e} at half-width {hw}; widening",
                rates.label,
                attempt.1.max_edge_population
            );
            hw += 2;
            attempt = evolve(&params, n, hw, &times, &opts)?;
        }
        attempt
    };
    if !integrity.state_ok() {
        return Err(Error::Propagation {
            time: horizon,
            reason: format!("state integrity violated: {integrity:?}"),
        });
    }
    series.validate()?;
    let frequency = match extract_frequency(&series) {
        Ok(f) => Some(f),
        Err(Error::NoMaximum) => {
            log::warn!("n = {n} ({}): no major maximum within the horizon", rates.label);
            None
        }
        Err(e) => return Err(e),
    };
    let space = CompositeSpace::around(n, hw);
    Ok(RabiRun {
        record: RabiRecord {
            n,
            rates,
            kappa_mhz: params.cavity_loss,
            rydberg_offset_mhz: params.rydberg_offset,
            calibration,
            band: [space.fock_min(), space.fock_max()],
            horizon_us: horizon,
            samples: times.len(),
            method: if unitary { "unitary" } else { "lindblad" },
            propagator: (!unitary).then_some(opts),
            frequency,
            omega_exact_khz: frequency.map(|f| f.omega_mhz * 1e3),
            max_pop_rr: series.pop_rr().into_iter().fold(0.0, f64::max),
            integrity,
            edge_flagged: !integrity.edge_ok(),
        },
        series,
    })
}

/// Runs every configured photon number and rate setting. Failures are
/// collected per run; the remaining runs still complete.
pub fn run_rabi(setup: &Setup) -> RabiOutcome {
    let jobs: Vec<(usize, RateSetting)> = setup
        .config
        .photon_numbers
        .iter()
        .flat_map(|&n| rate_settings(setup).into_iter().map(move |r| (n, r)))
        .collect();
    let results = par::map(&jobs, |&(n, r)| single(setup, n, r));
    let mut outcome = RabiOutcome::default();
    for ((n, r), res) in jobs.into_iter().zip(results) {
        match res {
            Ok(run) => outcome.runs.push(run),
            Err(error) => {
                log::error!("rabi n = {n} ({}): {error}", r.label);
                outcome.failures.push(RabiFailure { n, label: r.label, error });
            }
        }
    }
    outcome
}

#[derive(Serialize)]
struct Row {
    t_us: f64,
    t_scaled: f64,
    pop_gg: f64,
    pop_rr: f64,
    re_coh: f64,
    im_coh: f64,
    photon_mean: f64,
    edge_pop: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RabiSummary {
    pub omega_ref_khz: f64,
    pub closed_form_khz: f64,
    pub runs: Vec<SummaryEntry>,
    /// `max / min - 1` over the coherent extracted frequencies.
    pub coherent_frequency_spread: Option<f64>,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryEntry {
    pub n: usize,
    pub label: &'static str,
    pub omega_exact_khz: Option<f64>,
    pub first_peak_pop_rr: Option<f64>,
    pub max_pop_rr: f64,
    pub over_closed_form: Option<f64>,
    pub rydberg_offset_khz: f64,
    pub csv: String,
}

pub fn summarize(setup: &Setup, outcome: &RabiOutcome) -> RabiSummary {
    let cf = setup.resolution.closed_form_khz;
    let runs: Vec<SummaryEntry> = outcome
        .runs
        .iter()
        .map(|r| SummaryEntry {
            n: r.record.n,
            label: r.record.rates.label,
            omega_exact_khz: r.record.omega_exact_khz,
            first_peak_pop_rr: r.record.frequency.map(|f| f.peak),
            max_pop_rr: r.record.max_pop_rr,
            over_closed_form: r.record.omega_exact_khz.map(|w| w / cf),
            rydberg_offset_khz: r.record.rydberg_offset_mhz * 1e3,
            csv: csv_name(r.record.n, r.record.rates.label),
        })
        .collect();
    let coherent: Vec<f64> = runs
        .iter()
        .filter(|e| e.label == "coherent")
        .filter_map(|e| e.omega_exact_khz)
        .collect();
    let spread = (coherent.len() >= 2).then(|| {
        let hi = coherent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = coherent.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo - 1.0
    });
    RabiSummary {
        omega_ref_khz: setup.resolution.omega_ref_khz,
        closed_form_khz: cf,
        runs,
        coherent_frequency_spread: spread,
        failures: outcome
            .failures
            .iter()
            .map(|f| format!("n = {} ({}): {}", f.n, f.label, f.error))
            .collect(),
    }
}

fn csv_name(n: usize, label: &str) -> String {
    format!("rabi_n{n}_{label}.csv")
}

pub fn write_rabi(setup: &Setup, outcome: &RabiOutcome, out: &mut OutputDir, svg: bool) -> Result<RabiSummary> {
    for run in &outcome.runs {
        let rows: Vec<Row> = run
            .series
            .samples
            .iter()
            .map(|s| Row {
                t_us: s.t_us,
                t_scaled: setup.scaled_time(s.t_us),
                pop_gg: s.pop_gg,
                pop_rr: s.pop_rr,
                re_coh: s.coh_gg_rr.re,
                im_coh: s.coh_gg_rr.im,
                photon_mean: s.photon_mean,
                edge_pop: s.edge_population,
            })
            .collect();
        let name = csv_name(run.record.n, run.record.rates.label);
        out.write_csv(&name, &rows)?;
        let sidecar = Sidecar::new("rabi", &setup.config, Some(&setup.resolution), &run.record);
        out.write_json(&name.replace(".csv", ".json"), &sidecar)?;
    }
    let summary = summarize(setup, outcome);
    out.write_json(
        "rabi_summary.json",
        &Sidecar::new("rabi", &setup.config, Some(&setup.resolution), &summary),
    )?;
    if svg {
        let series = outcome
            .runs
            .iter()
            .map(|r| Series {
                name: format!("n = {} {}", r.record.n, r.record.rates.label),
                points: r
                    .series
                    .samples
                    .iter()
                    .map(|s| (setup.scaled_time(s.t_us), s.pop_rr))
                    .collect(),
                dashed: r.record.rates.label != "coherent",
            })
            .collect();
        let chart = LineChart {
            title: "Population of |rr> from |gg,n>".into(),
            x_label: "time [reference periods]".into(),
            y_label: "pop_rr".into(),
            series,
            y_range: Some((0.0, 1.0)),
        };
        out.write_text("rabi.svg", &chart.render())?;
    }
    Ok(summary)
}
