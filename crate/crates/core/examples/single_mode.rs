//! Single-mode exchange model: simulated squeezing against the closed form.

use qnd_squeeze::analytic::xi_single_mode;
use qnd_squeeze::estimators::moments_from_samples;
use qnd_squeeze::rng::NoiseSpec;
use qnd_squeeze::sweep::log_grid;
use qnd_squeeze::tw::run_single_mode;

fn main() -> qnd_squeeze::Result<()> {
    let (n_atoms, chi_t) = (1e4, 1e-6);
    // the exchange map is exact, the step count only has to validate
    let spec = NoiseSpec::new(3, 4000, 16);
    println!("{:>9} {:>10} {:>10}", "u", "sim", "closed");
    for u in log_grid(1e-3, 2.0, 9) {
        let n_ph = u / (chi_t * chi_t);
        let samples = run_single_mode(n_atoms, n_ph, chi_t, &spec, 0)?;
        let m = moments_from_samples(&samples, n_atoms)?;
        println!("{u:>9.3e} {:>10.5} {:>10.5}", m.xi, xi_single_mode(chi_t, n_ph, n_atoms, 1.0)?);
    }
    Ok(())
}
