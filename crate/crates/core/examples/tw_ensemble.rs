//! Free-space truncated-Wigner run next to the closed forms.
//!
//! Optional arguments: trajectories, steps.

use qnd_squeeze::analytic::{xi_spont, xi_spont_exact_loss};
use qnd_squeeze::estimators::{atomic_moments, corrected_moments};
use qnd_squeeze::optimize::minimize_xi_over_photons;
use qnd_squeeze::phys::{AtomSpecies, PhysicalConfig};
use qnd_squeeze::rng::NoiseSpec;
use qnd_squeeze::tw::{run_ensemble, RunOptions};

fn main() -> qnd_squeeze::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let n_traj = args.next().unwrap_or(2000);
    let n_steps = args.next().unwrap_or(256);

    let (area, n_atoms, tau) = (1e-10, 1e4, 1e-3);
    let mut cfg = PhysicalConfig::free_space(AtomSpecies::rb87(), area, 1e11, n_atoms, 0.0, tau);
    let c = cfg.couplings();
    let n_ph = minimize_xi_over_photons(&c, 0.0)?.arg_nph;
    cfg.photon_flux = n_ph / tau;

    let ens = run_ensemble(&cfg, &NoiseSpec::new(7, n_traj, n_steps), &RunOptions::default())?;
    let m = corrected_moments(&ens)?;
    println!("zeta {:.2}  lambda {:.4}  photons {n_ph:.4e}", c.zeta, c.chi2 * n_ph);
    println!("xi  tw {:.4} ± {:.4}", m.xi, m.stderr_xi);
    println!("    closed form {:.4}", xi_spont(&c, n_ph, n_atoms, 0.0)?.xi);
    println!("    exact loss  {:.4}", xi_spont_exact_loss(&c, n_ph, n_atoms, 0.0)?.xi);
    println!("gain {:.4e}  diverged {}", m.gain, ens.n_diverged);

    println!("\n{:>9} {:>10} {:>10}", "t", "<N_a1>", "N_a e^-2Gt/2");
    for i in 0..ens.save_times.len() {
        let a = atomic_moments(&ens, i)?;
        let expect = 0.5 * n_atoms * (-2.0 * c.chi2 * cfg.photon_flux * a.t).exp();
        println!("{:>9.2e} {:>10.1} {:>10.1}", a.t, a.mean_na1, expect);
    }
    Ok(())
}
