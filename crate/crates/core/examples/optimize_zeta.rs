//! Best achievable squeezing against optical depth, coherent and 10 dB squeezed probe.

use std::f64::consts::LN_10;

use qnd_squeeze::optimize::min_xi_vs_zeta_curve;
use qnd_squeeze::phys::{AtomSpecies, PhysicalConfig};
use qnd_squeeze::sweep::log_grid;

fn main() -> qnd_squeeze::Result<()> {
    let sp = AtomSpecies::rb87();
    let n_atoms = 1e6;
    let chi2_at = |area: f64| PhysicalConfig::free_space(sp, area, 1e11, n_atoms, 0.0, 1e-3).couplings().chi2;
    let zetas = log_grid(1e-1, 1e5, 13);
    let coherent = min_xi_vs_zeta_curve(&sp, n_atoms, &zetas, 0.0, chi2_at)?;
    let squeezed = min_xi_vs_zeta_curve(&sp, n_atoms, &zetas, LN_10, chi2_at)?;
    println!("{:>10} {:>10} {:>9} {:>9} {:>8}", "zeta", "area", "xi", "xi_10dB", "lambda");
    for (a, b) in coherent.iter().zip(&squeezed) {
        println!(
            "{:>10.3e} {:>10.3e} {:>9.5} {:>9.5} {:>8.4}",
            a.zeta, a.area, a.result.xi_min, b.result.xi_min, a.result.arg_lambda
        );
    }
    Ok(())
}
