//! Cavity run at A = 1e-8 m^2: filling transient and final squeezing.

use qnd_squeeze::cavity::run_cavity_ensemble;
use qnd_squeeze::estimators::corrected_moments;
use qnd_squeeze::phys::{AtomSpecies, CavityConfig, PhysicalConfig};
use qnd_squeeze::rng::NoiseSpec;
use qnd_squeeze::tw::RunOptions;

fn main() -> qnd_squeeze::Result<()> {
    let kappa = 1e6;
    let mut cfg = PhysicalConfig::free_space(AtomSpecies::rb87(), 1e-8, 1e11, 1e6, 1e12, 1e-4);
    cfg.cavity = Some(CavityConfig::new(kappa, 0.1));
    let opts = RunOptions {
        n_save: 41,
        ..RunOptions::default()
    };
    let ce = run_cavity_ensemble(&cfg, &NoiseSpec::new(11, 200, 256), &opts)?;
    let tr = &ce.traces;
    println!("steps {}  empty steady state N_c {:.4e}", ce.steps_used, ce.empty_steady_state);
    println!("{:>8} {:>10} {:>10} {:>8}", "kappa t", "<N_a1>", "<N_c>", "out/in");
    for i in (0..tr.t.len()).step_by(4) {
        println!(
            "{:>8.1} {:>10.1} {:>10.4e} {:>8.4}",
            kappa * tr.t[i],
            tr.mean_na1[i],
            tr.mean_nc[i],
            tr.output_flux[i] / tr.input_flux[i]
        );
    }
    let m = corrected_moments(&ce.ensemble)?;
    println!("xi {:.4} ± {:.4}", m.xi, m.stderr_xi);
    Ok(())
}
