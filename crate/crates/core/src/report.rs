//! Tables for the single-run commands.

use serde_json::json;

use crate::analytic::{self, AnalyticPrediction};
use crate::cavity::run_cavity_ensemble;
use crate::config::RunConfig;
use crate::error::Result;
use crate::estimators::{atomic_moments, corrected_moments, quadrature_stats, MomentSet};
use crate::optimize::{minimize_xi_over_photons, OptimizationResult};
use crate::output::{Bundle, Cell, Table};
use crate::phys::decay_factor;
use crate::tw::{run_ensemble, RunOptions};

pub const ANALYTIC_COLUMNS: &[&str] = &[
    "n_photons", "photon_flux", "chi_ns", "chi1", "chi2", "mu", "lambda", "zeta", "eps_tau", "eps_bar",
    "xi", "var_s1", "var_s2", "var_sb", "cov_jz_sb", "mean_jx", "mean_na1", "gain",
];

pub const TW_COLUMNS: &[&str] = &[
    "n_traj_used", "n_diverged", "xi_analytic", "xi_tw", "xi_stderr", "var_s1", "var_s2", "var_sb",
    "cov_jz_sb", "mean_na1", "mean_na2", "mean_jx", "gain", "var_y1", "var_y2",
];

pub const ATOMS_COLUMNS: &[&str] = &[
    "t", "mean_na1", "mean_na2", "mean_jx", "var_jz", "stderr_mean_na1", "stderr_var_jz", "eps_t",
];

pub const CAVITY_COLUMNS: &[&str] = &[
    "steps_used", "empty_steady_state", "n_traj_used", "n_diverged", "xi", "xi_stderr", "var_s1",
    "var_s2", "var_sb", "cov_jz_sb", "mean_na1", "mean_jx", "gain",
];

pub const TRACE_COLUMNS: &[&str] = &["t", "mean_na1", "mean_nc", "input_flux", "output_flux"];

pub const OPTIMIZE_COLUMNS: &[&str] = &[
    "mu", "zeta", "squeeze_r", "xi_min", "lambda_opt", "nph_opt", "flux_opt", "bracket_lo",
    "bracket_hi", "iterations", "fallback",
];

fn prediction_row(cfg: &RunConfig, p: &AnalyticPrediction) -> Vec<Cell> {
    let c = cfg.physical.couplings();
    vec![
        c.n_photons.into(),
        cfg.physical.photon_flux.into(),
        c.chi_ns.into(),
        c.chi1.into(),
        c.chi2.into(),
        c.mu.into(),
        c.lambda.into(),
        c.zeta.into(),
        c.eps_tau.into(),
        c.eps_bar.into(),
        p.xi.into(),
        p.var_jz.into(),
        p.var_s2.into(),
        p.var_sb.into(),
        p.cov_jz_sb.into(),
        p.mean_jx.into(),
        p.mean_na1.into(),
        p.gain.into(),
    ]
}

/// Closed-form prediction for a free-space configuration.
pub fn analytic_bundle(cfg: &RunConfig) -> Result<Bundle> {
    let p = analytic::predict(&cfg.physical)?;
    let mut t = Table::new("analytic", "analytic/1", ANALYTIC_COLUMNS);
    t.push(prediction_row(cfg, &p));
    Ok(Bundle {
        command: "analytic".into(),
        parameters: json!({}),
        tables: vec![t],
    })
}

fn moments_cells(m: &MomentSet) -> [Cell; 5] {
    [m.var_s1().into(), m.var_s2.into(), m.var_sb.into(), m.cov_jz_sb.into(), m.mean_na1.into()]
}

/// Free-space ensemble: final-time moments and the atomic trajectory.
pub fn tw_bundle(cfg: &RunConfig, opts: &RunOptions) -> Result<Bundle> {
    let ens = run_ensemble(&cfg.physical, &cfg.noise, opts)?;
    let m = corrected_moments(&ens)?;
    let q = quadrature_stats(&ens)?;
    let xi_a = analytic::predict(&cfg.physical).ok().map(|p| p.xi);
    let mut summary = Table::new("tw", "tw/1", TW_COLUMNS);
    let mut row: Vec<Cell> = vec![
        m.n_traj_used.into(),
        ens.n_diverged.into(),
        xi_a.into(),
        m.xi.into(),
        m.stderr_xi.into(),
    ];
    row.extend(moments_cells(&m));
    row.extend([m.mean_na2.into(), m.mean_jx.into(), m.gain.into(), q.var_y1.into(), q.var_y2.into()]);
    summary.push(row);

    let chi2 = cfg.physical.couplings().chi2;
    let mut atoms = Table::new("tw_atoms", "atoms/1", ATOMS_COLUMNS);
    for idx in 0..ens.save_times.len() {
        let a = atomic_moments(&ens, idx)?;
        atoms.push(vec![
            a.t.into(),
            a.mean_na1.into(),
            a.mean_na2.into(),
            a.mean_jx.into(),
            a.var_jz.into(),
            a.stderr_mean_na1.into(),
            a.stderr_var_jz.into(),
            decay_factor(chi2 * cfg.physical.photon_flux * a.t).into(),
        ]);
    }
    Ok(Bundle {
        command: "tw".into(),
        parameters: json!({"n_save": opts.n_save, "noiseless": opts.noiseless}),
        tables: vec![summary, atoms],
    })
}

/// Cavity ensemble: final-time moments and the mean time traces.
pub fn cavity_bundle(cfg: &RunConfig, opts: &RunOptions) -> Result<Bundle> {
    let ce = run_cavity_ensemble(&cfg.physical, &cfg.noise, opts)?;
    let m = corrected_moments(&ce.ensemble)?;
    let mut summary = Table::new("cavity", "cavity/1", CAVITY_COLUMNS);
    let mut row: Vec<Cell> = vec![
        ce.steps_used.into(),
        ce.empty_steady_state.into(),
        m.n_traj_used.into(),
        ce.ensemble.n_diverged.into(),
        m.xi.into(),
        m.stderr_xi.into(),
    ];
    row.extend(moments_cells(&m));
    row.extend([m.mean_jx.into(), m.gain.into()]);
    summary.push(row);
    Ok(Bundle {
        command: "cavity".into(),
        parameters: json!({"n_save": opts.n_save, "noiseless": opts.noiseless}),
        tables: vec![summary, traces_table("cavity_traces", &ce.traces)],
    })
}

pub fn traces_table(name: &str, tr: &crate::cavity::CavityTraces) -> Table {
    let mut t = Table::new(name, "traces/1", TRACE_COLUMNS);
    for i in 0..tr.t.len() {
        t.push(vec![
            tr.t[i].into(),
            tr.mean_na1[i].into(),
            tr.mean_nc[i].into(),
            tr.input_flux[i].into(),
            tr.output_flux[i].into(),
        ]);
    }
    t
}

pub fn optimize_row(mu: f64, squeeze_r: f64, tau: f64, r: &OptimizationResult) -> Vec<Cell> {
    vec![
        mu.into(),
        r.zeta.into(),
        squeeze_r.into(),
        r.xi_min.into(),
        r.arg_lambda.into(),
        r.arg_nph.into(),
        (r.arg_nph / tau).into(),
        r.bracket.0.into(),
        r.bracket.1.into(),
        r.iterations.into(),
        r.fallback.to_string().into(),
    ]
}

/// Photon number minimizing the closed-form squeezing parameter.
pub fn optimize_bundle(cfg: &RunConfig) -> Result<Bundle> {
    let p = &cfg.physical;
    if p.cavity.is_some() {
        return Err(crate::Error::Config("the optimizer works on free-space configurations".into()));
    }
    let c = p.couplings();
    let r = minimize_xi_over_photons(&c, p.squeeze_r)?;
    let mut t = Table::new("optimize", "optimize/1", OPTIMIZE_COLUMNS);
    t.push(optimize_row(c.mu, p.squeeze_r, p.interaction_time, &r));
    Ok(Bundle {
        command: "optimize".into(),
        parameters: json!({}),
        tables: vec![t],
    })
}
