//! Parameter-condition report and the table of perturbative quantities.

use std::fmt::Write;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{OutputDir, Sidecar};
use crate::effective::{
    bare_detunings, check_conditions, closed_form_rabi, default_n_max, effective_params,
    rabi_scaling, srr_diagnostic, ConditionReport,
};
use crate::error::Result;

/// Conditions evaluated on the Hamiltonian constants; rates are ignored.
pub fn run_condition_report(config: &ExperimentConfig) -> Result<ConditionReport> {
    let p = config.params.coherent();
    let n_max = config.n_max.unwrap_or_else(|| default_n_max(config.params.nbar_th));
    check_conditions(&p, n_max, &config.thresholds)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn condition_text(config: &ExperimentConfig, r: &ConditionReport) -> String {
    let p = config.params.coherent();
    let th = &r.thresholds;
    let stark_limit = th.stark_rel * p.coupling_a.powi(2) / p.cavity_detuning_a.abs();
    let sgg_limit = th.sgg_rel * p.rabi1 * p.coupling_a / p.laser_detuning1.abs();
    let worst = r
        .resonance_ratio
        .iter()
        .copied()
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let mut s = String::new();
    let _ = writeln!(s, "conditions over n = 0..={}", r.n_max);
    let _ = writeln!(
        s,
        "  forster margin       {:>14}  > {:<12} {}",
        r.forster_margin.map_or("inf".to_string(), |m| format!("{m:.4}")),
        th.forster_min,
        verdict(r.verdict.forster)
    );
    let _ = writeln!(
        s,
        "  stark residual       {:>14.6e}  < {:<12.6e} {}",
        r.stark_match_residual,
        stark_limit,
        verdict(r.verdict.stark_match)
    );
    let _ = writeln!(
        s,
        "  ground-shift residual{:>15.6e}  < {:<12.6e} {}",
        r.sgg_match_residual,
        sgg_limit,
        verdict(r.verdict.sgg_match)
    );
    let _ = writeln!(
        s,
        "  resonance ratio max  {:>14.6}  < {:<12} {} (at n = {})",
        worst.1,
        th.resonance_max,
        verdict(r.verdict.resonance),
        worst.0
    );
    let _ = writeln!(s, "  rate bound           {:>14.6} MHz", r.bound_omega_max);
    let _ = writeln!(
        s,
        "overall: {}",
        if r.verdict.all_pass() { "all pass" } else { "FAIL" }
    );
    s
}

pub fn write_conditions(config: &ExperimentConfig, report: &ConditionReport, out: &mut OutputDir) -> Result<()> {
    out.write_json("conditions.json", &Sidecar::new("check", config, None, report))?;
    out.write_text("conditions.txt", &condition_text(config, report))?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct EffectiveRow {
    pub n: usize,
    pub tilde_omega1: f64,
    pub tilde_omega2: f64,
    #[serde(rename = "Delta1")]
    pub intermediate1: f64,
    #[serde(rename = "Delta2")]
    pub intermediate2: f64,
    pub bar_omega: f64,
    pub s_gg: f64,
    pub resonance_residual: f64,
    pub scaling: f64,
    pub srr_diagnostic: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EffectiveTable {
    pub closed_form: f64,
    pub bare_detunings: (f64, f64),
    pub rows: Vec<EffectiveRow>,
}

pub fn run_effective(config: &ExperimentConfig) -> Result<EffectiveTable> {
    let p = config.params.coherent();
    let [lo, hi] = config.effective_range;
    let rows = (lo..=hi)
        .map(|n| {
            let e = effective_params(&p, n)?;
            Ok(EffectiveRow {
                n,
                tilde_omega1: e.two_photon1,
                tilde_omega2: e.two_photon2,
                intermediate1: e.intermediate1,
                intermediate2: e.intermediate2,
                bar_omega: e.effective_rabi,
                s_gg: e.ground_shift,
                resonance_residual: e.resonance_residual,
                scaling: rabi_scaling(&p, n),
                srr_diagnostic: srr_diagnostic(&p, n),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EffectiveTable {
        closed_form: closed_form_rabi(&p)?,
        bare_detunings: bare_detunings(&p),
        rows,
    })
}

pub fn effective_text(t: &EffectiveTable) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "closed-form coupling {:.6e} MHz; bare detunings {:.4}, {:.4} MHz",
        t.closed_form, t.bare_detunings.0, t.bare_detunings.1
    );
    let _ = writeln!(
        s,
        "{:>4} {:>12} {:>12} {:>12} {:>12} {:>13} {:>13} {:>13}",
        "n", "tilde_om1", "tilde_om2", "Delta1", "Delta2", "bar_omega", "s_gg", "residual"
    );
    for r in &t.rows {
        let _ = writeln!(
            s,
            "{:>4} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>13.6e} {:>13.6e} {:>13.6e}",
            r.n,
            r.tilde_omega1,
            r.tilde_omega2,
            r.intermediate1,
            r.intermediate2,
            r.bar_omega,
            r.s_gg,
            r.resonance_residual
        );
    }
    s
}

pub fn write_effective(config: &ExperimentConfig, table: &EffectiveTable, out: &mut OutputDir) -> Result<()> {
    out.write_csv("effective.csv", &table.rows)?;
    out.write_json("effective.json", &Sidecar::new("effective", config, None, table))?;
    Ok(())
}
