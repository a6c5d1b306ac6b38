//! Named recipes regenerating the data behind each figure at desk scale.
//!
//! Physical parameters are fixed per recipe (Rb-87, 10^6 atoms, detuning
//! 1e11 rad/s unless noted). Trajectory count, step count, seed and worker
//! count come from [`ReproduceOptions`].

use std::f64::consts::LN_10;

use serde::Serialize;
use serde_json::json;

use crate::analytic::{self, squeeze_r_from_db, squeezing_db};
use crate::cavity::run_cavity_ensemble;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::estimators::{bootstrap_samples, corrected_moments, moments_from_samples};
use crate::optimize::{min_xi_vs_zeta_curve, minimize_xi_over_photons};
use crate::output::{Bundle, Cell, Table};
use crate::phys::{AtomSpecies, CavityConfig, PhysicalConfig};
use crate::report::traces_table;
use crate::rng::NoiseSpec;
use crate::sweep::{log_grid, sweep_table, Subject, SweepParam, SweepSpec};
use crate::tw::{run_ensemble, run_single_mode, RunOptions};

pub const TAGS: &[&str] = &[
    "fig2", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig12", "fig13", "fig14",
];

const N_ATOMS: f64 = 1e6;
const DETUNING: f64 = 1e11;
const LARGE_DETUNING: f64 = 1e13;
const FREE_TAU: f64 = 1e-3;
const CAVITY_TAU: f64 = 1e-4;
const CAVITY_LENGTH: f64 = 0.1;
const AREAS: [f64; 3] = [1e-6, 1e-8, 1e-10];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReproduceOptions {
    pub seed: u64,
    pub n_traj: usize,
    pub n_steps: usize,
    #[serde(skip)]
    pub workers: usize,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            n_traj: 400,
            n_steps: 256,
            workers: 0,
        }
    }
}

impl ReproduceOptions {
    fn noise(&self) -> NoiseSpec {
        NoiseSpec::new(self.seed, self.n_traj, self.n_steps)
    }

    fn run(&self, n_save: usize) -> RunOptions {
        RunOptions {
            workers: self.workers,
            n_save,
            noiseless: false,
        }
    }
}

fn free_space(opts: &ReproduceOptions, area: f64, squeeze_r: f64, se: bool) -> RunConfig {
    let mut p = PhysicalConfig::free_space(AtomSpecies::rb87(), area, DETUNING, N_ATOMS, 0.0, FREE_TAU);
    p.squeeze_r = squeeze_r;
    p.spontaneous_emission = se;
    RunConfig { physical: p, noise: opts.noise() }
}

fn cavity(opts: &ReproduceOptions, area: f64, detuning: f64, kappa: f64, flux: f64) -> RunConfig {
    let mut p = PhysicalConfig::free_space(AtomSpecies::rb87(), area, detuning, N_ATOMS, flux, CAVITY_TAU);
    p.cavity = Some(CavityConfig::new(kappa, CAVITY_LENGTH));
    RunConfig { physical: p, noise: opts.noise() }
}

/// Detuning for the cavity runs: small areas need the larger
/// detuning to keep the intracavity photon number well above one.
fn cavity_detuning(area: f64) -> f64 {
    if area <= 1e-9 {
        LARGE_DETUNING
    } else {
        DETUNING
    }
}

fn area_label(area: f64) -> String {
    format!("A{area:.0e}")
}

/// Reference configuration recorded in the manifest of a recipe.
pub fn reference_config(tag: &str, opts: &ReproduceOptions) -> Result<RunConfig> {
    check_tag(tag)?;
    Ok(match tag {
        "fig12" | "fig13" | "fig14" => cavity(opts, 1e-8, DETUNING, 1e6, 1e12),
        _ => free_space(opts, 1e-10, 0.0, tag != "fig4"),
    })
}

fn check_tag(tag: &str) -> Result<()> {
    if TAGS.contains(&tag) {
        Ok(())
    } else {
        Err(Error::UnknownTag {
            tag: tag.to_string(),
            available: TAGS.join(", "),
        })
    }
}

pub fn reproduce(tag: &str, opts: &ReproduceOptions) -> Result<Bundle> {
    check_tag(tag)?;
    let tables = match tag {
        "fig2" => vec![fig2(opts)?],
        "fig4" => vec![fig4(opts)?],
        "fig5" => vec![emission_sweep(opts, "fig5", 1e-6, 0.0)?],
        "fig6" => vec![emission_sweep(opts, "fig6", 1e-8, 0.0)?],
        "fig7" => vec![emission_sweep(opts, "fig7", 1e-10, 0.0)?],
        "fig8" => vec![fig8()?],
        "fig9" => AREAS
            .iter()
            .map(|&a| emission_sweep(opts, &format!("fig9_{}", area_label(a)), a, LN_10))
            .collect::<Result<_>>()?,
        "fig10" => vec![fig10(opts)?],
        "fig12" => vec![fig12(opts)?],
        "fig13" => fig13(opts)?,
        "fig14" => vec![fig14(opts)?],
        _ => unreachable!("tag checked"),
    };
    Ok(Bundle {
        command: format!("reproduce-{tag}"),
        parameters: json!({"tag": tag, "options": opts}),
        tables,
    })
}

pub const SINGLE_MODE_COLUMNS: &[&str] =
    &["u", "n_ph", "xi_analytic", "xi_tw", "xi_stderr", "var_s2", "mean_jx", "status"];

/// Single-mode model against its closed form over `u = chi^2 N_ph t^2`.
fn fig2(opts: &ReproduceOptions) -> Result<Table> {
    // chi t N_a stays far below one so the small-angle closed form applies
    let chi_t = 1e-2 / N_ATOMS;
    let mut t = Table::new("fig2", "single_mode/1", SINGLE_MODE_COLUMNS);
    for u in log_grid(1e-3, 3.0, 16) {
        let n_ph = u / (chi_t * chi_t);
        let xi_a = analytic::xi_single_mode(chi_t, n_ph, N_ATOMS, 1.0)?;
        let row = run_single_mode(N_ATOMS, n_ph, chi_t, &opts.noise(), opts.workers).and_then(|s| {
            let m = moments_from_samples(&s, N_ATOMS)?;
            let err = bootstrap_samples(&s, N_ATOMS, 200, opts.seed)?;
            Ok((m, err))
        });
        t.push(match row {
            Ok((m, err)) => vec![
                u.into(),
                n_ph.into(),
                xi_a.into(),
                m.xi.into(),
                err.into(),
                m.var_s2.into(),
                m.mean_jx.into(),
                "ok".into(),
            ],
            Err(e) => vec![u.into(), n_ph.into(), xi_a.into(), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, e.to_string().into()],
        });
    }
    Ok(t)
}

/// Lossless free-space sweep over `nu = chi^2 N_ph`.
fn fig4(opts: &ReproduceOptions) -> Result<Table> {
    let cfg = free_space(opts, 1e-10, 0.0, false);
    let chi = cfg.physical.couplings().chi_ns;
    let grid = log_grid(1e-3, 3.0, 12).into_iter().map(|nu| nu / (chi * chi)).collect();
    let spec = SweepSpec {
        subject: Subject::Tw,
        param: SweepParam::NPhotons,
        grid,
    };
    sweep_table("fig4", &cfg, &spec, &opts.run(17))
}

/// Free-space sweep with spontaneous emission over `lambda = chi2 N_ph`.
fn emission_sweep(opts: &ReproduceOptions, name: &str, area: f64, squeeze_r: f64) -> Result<Table> {
    let cfg = free_space(opts, area, squeeze_r, true);
    let chi2 = cfg.physical.couplings().chi2;
    let grid = log_grid(1e-4, 3.0, 14).into_iter().map(|l| l / chi2).collect();
    let spec = SweepSpec {
        subject: Subject::Tw,
        param: SweepParam::NPhotons,
        grid,
    };
    sweep_table(name, &cfg, &spec, &opts.run(17))
}

pub const ZETA_COLUMNS: &[&str] = &["zeta", "area", "mu", "xi_min", "lambda_opt", "nph_opt"];

/// Optimal squeezing against the optical depth, far-detuned mapping.
fn fig8() -> Result<Table> {
    let species = AtomSpecies::rb87();
    let chi2_at = |area: f64| {
        PhysicalConfig::free_space(species, area, DETUNING, N_ATOMS, 0.0, FREE_TAU)
            .couplings()
            .chi2
    };
    let zetas = log_grid(1e-2, 1e6, 33);
    let mut t = Table::new("fig8", "zeta_curve/1", ZETA_COLUMNS);
    for p in min_xi_vs_zeta_curve(&species, N_ATOMS, &zetas, 0.0, chi2_at)? {
        t.push(vec![
            p.zeta.into(),
            p.area.into(),
            (p.zeta / N_ATOMS).into(),
            p.result.xi_min.into(),
            p.result.arg_lambda.into(),
            p.result.arg_nph.into(),
        ]);
    }
    Ok(t)
}

pub const DB_COLUMNS: &[&str] = &[
    "area", "improvement_db", "squeezing_db", "squeeze_r", "xi_min_analytic", "nph_opt", "xi_tw", "xi_stderr", "status",
];

/// Minimum squeezing parameter against the input squeezing in dB. The
/// simulated point sits at the analytic optimum.
fn fig10(opts: &ReproduceOptions) -> Result<Table> {
    let mut t = Table::new("fig10", "db_scan/1", DB_COLUMNS);
    for area in AREAS {
        for db in (0..=10).map(|i| 2.0 * i as f64) {
            let r = squeeze_r_from_db(db);
            let mut cfg = free_space(opts, area, r, true);
            let best = minimize_xi_over_photons(&cfg.physical.couplings(), r)?;
            cfg.physical.photon_flux = best.arg_nph / FREE_TAU;
            let sim = run_ensemble(&cfg.physical, &cfg.noise, &opts.run(2)).and_then(|e| corrected_moments(&e));
            let mut row: Vec<Cell> = vec![area.into(), db.into(), squeezing_db(r).into(), r.into(), best.xi_min.into(), best.arg_nph.into()];
            match sim {
                Ok(m) => row.extend([m.xi.into(), m.stderr_xi.into(), "ok".into()]),
                Err(e) => row.extend([Cell::Empty, Cell::Empty, e.to_string().into()]),
            }
            t.push(row);
        }
    }
    Ok(t)
}

/// Cavity time traces around the fill-up at `1/kappa`.
fn fig12(opts: &ReproduceOptions) -> Result<Table> {
    let cfg = cavity(opts, 1e-8, DETUNING, 1e6, 1e12);
    let ce = run_cavity_ensemble(&cfg.physical, &cfg.noise, &opts.run(201))?;
    Ok(traces_table("fig12", &ce.traces))
}

fn cavity_flux_grid(area: f64) -> Vec<f64> {
    if area >= 1e-6 {
        log_grid(1e12, 1e15, 7)
    } else {
        log_grid(1e10, 1e13, 7)
    }
}

/// Cavity squeezing against input flux for each area.
fn fig13(opts: &ReproduceOptions) -> Result<Vec<Table>> {
    AREAS
        .iter()
        .map(|&area| {
            let cfg = cavity(opts, area, cavity_detuning(area), 1e6, 1e12);
            let spec = SweepSpec {
                subject: Subject::Cavity,
                param: SweepParam::PhotonFlux,
                grid: cavity_flux_grid(area),
            };
            sweep_table(&format!("fig13_{}", area_label(area)), &cfg, &spec, &opts.run(2))
        })
        .collect()
}

pub const KAPPA_COLUMNS: &[&str] = &[
    "kappa", "area", "detuning", "xi_min_cavity", "flux_opt", "xi_stderr", "xi_free_space", "status",
];

/// Minimum over a flux scan of the cavity squeezing against area for three
/// cavity linewidths, next to the free-space optimum.
fn fig14(opts: &ReproduceOptions) -> Result<Table> {
    let mut t = Table::new("fig14", "kappa_scan/1", KAPPA_COLUMNS);
    for kappa in [1e5, 1e6, 1e7] {
        for area in [1e-6, 1e-7, 1e-8, 1e-9, 1e-10] {
            let det = cavity_detuning(area);
            let free = free_space(opts, area, 0.0, true);
            let xi_free = minimize_xi_over_photons(&free.physical.couplings(), 0.0)?.xi_min;
            let mut best: Option<(f64, f64, f64)> = None;
            let mut last_err = None;
            for flux in log_grid(1e9, 1e17, 17) {
                let cfg = cavity(opts, area, det, kappa, flux);
                match run_cavity_ensemble(&cfg.physical, &cfg.noise, &opts.run(2)).and_then(|c| corrected_moments(&c.ensemble)) {
                    Ok(m) if best.is_none_or(|b| m.xi < b.0) => best = Some((m.xi, flux, m.stderr_xi)),
                    Ok(_) => {}
                    Err(e) => last_err = Some(e.to_string()),
                }
            }
            let mut row: Vec<Cell> = vec![kappa.into(), area.into(), det.into()];
            match best {
                Some((xi, flux, err)) => row.extend([xi.into(), flux.into(), err.into()]),
                None => row.extend([Cell::Empty, Cell::Empty, Cell::Empty]),
            }
            row.push(xi_free.into());
            row.push(match (best, last_err) {
                (Some(_), _) => "ok".into(),
                (None, Some(e)) => e.into(),
                (None, None) => "no points".into(),
            });
            t.push(row);
        }
    }
    Ok(t)
}
