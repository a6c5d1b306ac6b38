//! Photon-flux sweep of the free-space simulator, written as CSV to stdout.

use qnd_squeeze::config::parse_config_str;
use qnd_squeeze::sweep::{log_grid, sweep_table, Subject, SweepParam, SweepSpec};
use qnd_squeeze::tw::RunOptions;

const CONFIG: &str = "
species = rb87
area = 1e-10 m^2
detuning = 1e11 rad/s
n_atoms = 1e4
photon_flux = 1e12 1/s
tau = 1e-3 s
n_traj = 400
n_steps = 128
seed = 5
";

fn main() -> qnd_squeeze::Result<()> {
    let cfg = parse_config_str(CONFIG)?;
    let spec = SweepSpec {
        subject: Subject::Tw,
        param: SweepParam::PhotonFlux,
        grid: log_grid(1e10, 1e13, 7),
    };
    let t = sweep_table("flux_sweep", &cfg, &spec, &RunOptions::default())?;
    print!("{}", t.to_csv_string("-"));
    Ok(())
}
