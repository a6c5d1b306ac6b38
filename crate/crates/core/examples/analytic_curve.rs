//! Closed-form squeezing parameter against photon number for three probe areas.
//!
//! Prints `area,n_photons,xi` rows.

use qnd_squeeze::analytic::xi_spont;
use qnd_squeeze::phys::{AtomSpecies, PhysicalConfig};
use qnd_squeeze::sweep::log_grid;

fn main() -> qnd_squeeze::Result<()> {
    let n_atoms = 1e6;
    println!("area,n_photons,xi");
    for area in [1e-6, 1e-8, 1e-10] {
        let c = PhysicalConfig::free_space(AtomSpecies::rb87(), area, 1e11, n_atoms, 0.0, 1e-3).couplings();
        // stop once half the atoms are gone
        let top = 0.35 / c.chi2;
        for n in log_grid(top * 1e-8, top, 25) {
            let p = xi_spont(&c, n, n_atoms, 0.0)?;
            println!("{area:e},{n:.4e},{:.6}", p.xi);
        }
    }
    Ok(())
}
