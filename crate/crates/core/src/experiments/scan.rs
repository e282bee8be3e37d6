//! Thermally averaged transfer fidelity versus mean photon number.

use serde::Serialize;

use super::output::{OutputDir, Sidecar};
use super::setup::Setup;
use super::svg::{LineChart, Series};
use crate::dynamics::{thermal_average, transfer_point, ProfilePoint, ThermalFidelity};
use crate::effective::thermal_cutoff;
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::par;

#[derive(Clone, Debug, Serialize)]
pub struct Curve {
    /// The dissipation-free reference curve.
    pub reference: bool,
    pub decay_fig: f64,
    pub dephasing_fig: f64,
    pub decay_mhz: f64,
    pub dephasing_mhz: f64,
    pub profile: Vec<ProfilePoint>,
    pub points: Vec<ThermalFidelity>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FidelityScan {
    /// `1 / (2 omega_ref)`: half a reference period.
    pub t_pi_us: f64,
    pub max_photon_number: usize,
    pub curves: Vec<Curve>,
}

impl FidelityScan {
    pub fn curve(&self, decay_fig: f64, dephasing_fig: f64) -> Option<&Curve> {
        self.curves
            .iter()
            .find(|c| c.decay_fig == decay_fig && c.dephasing_fig == dephasing_fig)
    }
}

/// `(decay_fig, dephasing_fig)` of every curve, reference first.
pub fn curve_rates(setup: &Setup) -> Vec<(f64, f64)> {
    let decay = setup.config.params.decay().figure(setup.omega_ref_mhz());
    std::iter::once((0.0, 0.0))
        .chain(setup.config.gammas_fig.iter().map(|&g| (decay, g)))
        .collect()
}

pub fn run_fidelity_scan(setup: &Setup) -> Result<FidelityScan> {
    let cfg = &setup.config;
    let w = setup.omega_ref_mhz();
    let t_pi = 0.5 / w;
    let opts = cfg.fidelity_options();
    let nbar_max = cfg.nbar_grid.iter().copied().fold(0.0, f64::max);
    let cutoff = thermal_cutoff(nbar_max, opts.tail);
    let rates = curve_rates(setup);
    log::info!(
        "fidelity scan: t_pi = {t_pi:.4} us, {} curves, photon numbers 0..={cutoff}",
        rates.len()
    );

    let base = setup.base_params();
    // Trims depend only on n, so compute them once for all curves.
    let ns: Vec<usize> = (0..=cutoff).collect();
    let trims: Vec<f64> = par::map(&ns, |&n| {
        setup
            .calibrated(&base.without_dissipation(), n)
            .map(|(p, _)| p.rydberg_offset)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..rates.len())
        .flat_map(|c| ns.iter().map(move |&n| (c, n)))
        .collect();
    let results = par::map(&jobs, |&(c, n)| {
        let (decay_fig, dephasing_fig) = rates[c];
        let params = SystemParams {
            decay: decay_fig * w,
            dephasing: dephasing_fig * w,
            rydberg_offset: trims[n],
            ..base
        };
        transfer_point(&params, t_pi, n, &opts).map_err(|e| Error::AtPhotonNumber {
            n,
            source: Box::new(e),
        })
    });
    let mut profiles: Vec<Vec<ProfilePoint>> = vec![Vec::with_capacity(ns.len()); rates.len()];
    for ((c, _), r) in jobs.into_iter().zip(results) {
        profiles[c].push(r?);
    }

    let mut curves = Vec::with_capacity(rates.len());
    for (c, profile) in profiles.into_iter().enumerate() {
        let (decay_fig, dephasing_fig) = rates[c];
        let points = cfg
            .nbar_grid
            .iter()
            .map(|&nbar| thermal_average(&profile, nbar, opts.tail))
            .collect::<Result<Vec<_>>>()?;
        let min_weight = points.iter().map(|p| p.weight).fold(1.0, f64::min);
        log::info!(
            "curve Gamma_fig = {decay_fig}, gamma_fig = {dephasing_fig}: smallest thermal weight {min_weight:.6}"
        );
        if profile.iter().any(|p| p.edge_flagged) {
            log::warn!("curve Gamma_fig = {decay_fig}, gamma_fig = {dephasing_fig}: edge population above limit");
        }
        curves.push(Curve {
            reference: c == 0,
            decay_fig,
            dephasing_fig,
            decay_mhz: decay_fig * w,
            dephasing_mhz: dephasing_fig * w,
            profile,
            points,
        });
    }
    Ok(FidelityScan {
        t_pi_us: t_pi,
        max_photon_number: cutoff,
        curves,
    })
}

#[derive(Serialize)]
struct Row {
    nbar_th: f64,
    #[serde(rename = "Gamma_fig")]
    decay_fig: f64,
    gamma_fig: f64,
    fidelity: f64,
}

pub fn write_fidelity(setup: &Setup, scan: &FidelityScan, out: &mut OutputDir, svg: bool) -> Result<()> {
    let rows: Vec<Row> = scan
        .curves
        .iter()
        .flat_map(|c| {
            c.points.iter().map(move |p| Row {
                nbar_th: p.nbar,
                decay_fig: c.decay_fig,
                gamma_fig: c.dephasing_fig,
                fidelity: p.fidelity,
            })
        })
        .collect();
    out.write_csv("fidelity.csv", &rows)?;
    out.write_json(
        "fidelity.json",
        &Sidecar::new("fidelity", &setup.config, Some(&setup.resolution), scan),
    )?;
    if svg {
        let series = scan
            .curves
            .iter()
            .map(|c| Series {
                name: if c.reference {
                    "reference".to_string()
                } else {
                    format!("G = {:.3}, g = {}", c.decay_fig, c.dephasing_fig)
                },
                points: c.points.iter().map(|p| (p.nbar, p.fidelity)).collect(),
                dashed: c.reference,
            })
            .collect();
        let chart = LineChart {
            title: "Transfer fidelity at half a reference period".into(),
            x_label: "mean thermal photon number".into(),
            y_label: "F".into(),
            series,
            y_range: None,
        };
        out.write_text("fidelity.svg", &chart.render())?;
    }
    Ok(())
}
