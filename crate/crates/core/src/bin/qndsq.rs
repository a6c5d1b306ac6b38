use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qnd_squeeze::config::{parse_config, RunConfig};
use qnd_squeeze::output::{unix_now, write_bundle, Bundle};
use qnd_squeeze::reproduce::{self, ReproduceOptions};
use qnd_squeeze::sweep::{lin_grid, log_grid, Subject, SweepParam, SweepSpec};
use qnd_squeeze::tw::RunOptions;
use qnd_squeeze::{report, sweep, Error, Result};

/// QND spin-squeezing models and simulators.
#[derive(Parser, Debug)]
#[command(name = "qndsq", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Run configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV tables and the manifest
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of trajectories
    #[arg(long, global = true)]
    traj: Option<usize>,
    /// Integration steps per trajectory
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form free-space prediction
    Analytic,
    /// Free-space truncated-Wigner ensemble
    Tw(SimArgs),
    /// Cavity truncated-Wigner ensemble
    Cavity(SimArgs),
    /// Photon number minimizing the closed-form squeezing parameter
    Optimize,
    /// One-parameter sweep
    Sweep(SweepArgs),
    /// Regenerate the data behind a figure
    Reproduce {
        /// Figure tag, e.g. fig8
        tag: String,
    },
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Saved time points per trajectory
    #[arg(long, default_value_t = 17)]
    n_save: usize,
    /// Drop vacuum noise (mean-field run)
    #[arg(long)]
    noiseless: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    subject: Subject,
    #[arg(long)]
    param: SweepParam,
    /// Comma-separated grid values
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["log_grid", "lin_grid"])]
    grid: Vec<f64>,
    /// lo:hi:n evenly spaced in the logarithm
    #[arg(long, conflicts_with = "lin_grid")]
    log_grid: Option<String>,
    /// lo:hi:n evenly spaced
    #[arg(long)]
    lin_grid: Option<String>,
}

fn parse_range(s: &str) -> Result<(f64, f64, usize)> {
    let bad = || Error::Config(format!("expected lo:hi:n, got `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
    let (lo, hi): (f64, f64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
    let n: usize = n.parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && hi > lo && n >= 2) {
        return Err(bad());
    }
    Ok((lo, hi, n))
}

impl SweepArgs {
    fn grid(&self, log_needs_positive: bool) -> Result<Vec<f64>> {
        if let Some(s) = &self.log_grid {
            let (lo, hi, n) = parse_range(s)?;
            if log_needs_positive && lo <= 0.0 {
                return Err(Error::Config("log grid needs lo > 0".into()));
            }
            Ok(log_grid(lo, hi, n))
        } else if let Some(s) = &self.lin_grid {
            let (lo, hi, n) = parse_range(s)?;
            Ok(lin_grid(lo, hi, n))
        } else if self.grid.is_empty() {
            Err(Error::Config("sweep needs --grid, --log-grid or --lin-grid".into()))
        } else {
            Ok(self.grid.clone())
        }
    }
}

impl Global {
    fn run_config(&self) -> Result<RunConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs --config <file>".into()))?;
        let mut cfg = parse_config(path).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
            other => other,
        })?;
        if let Some(s) = self.seed {
            cfg.noise.seed = s;
        }
        if let Some(n) = self.traj {
            cfg.noise.n_traj = n;
        }
        if let Some(n) = self.steps {
            cfg.noise.n_steps = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn run_options(&self, n_save: usize, noiseless: bool) -> RunOptions {
        RunOptions {
            workers: self.workers,
            n_save,
            noiseless,
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let started = unix_now();
    let (cfg, bundle): (RunConfig, Bundle) = match &cli.command {
        Command::Analytic => {
            let cfg = g.run_config()?;
            let b = report::analytic_bundle(&cfg)?;
            (cfg, b)
        }
        Command::Tw(a) => {
            let cfg = g.run_config()?;
            let b = report::tw_bundle(&cfg, &g.run_options(a.n_save, a.noiseless))?;
            (cfg, b)
        }
        Command::Cavity(a) => {
            let cfg = g.run_config()?;
            let b = report::cavity_bundle(&cfg, &g.run_options(a.n_save, a.noiseless))?;
            (cfg, b)
        }
        Command::Optimize => {
            let cfg = g.run_config()?;
            let b = report::optimize_bundle(&cfg)?;
            (cfg, b)
        }
        Command::Sweep(a) => {
            let cfg = g.run_config()?;
            let spec = SweepSpec {
                subject: a.subject,
                param: a.param,
                grid: a.grid(true)?,
            };
            let b = sweep::sweep(&cfg, &spec, &g.run_options(2, false))?;
            (cfg, b)
        }
        Command::Reproduce { tag } => {
            let d = ReproduceOptions::default();
            let opts = ReproduceOptions {
                seed: g.seed.unwrap_or(d.seed),
                n_traj: g.traj.unwrap_or(d.n_traj),
                n_steps: g.steps.unwrap_or(d.n_steps),
                workers: g.workers,
            };
            let cfg = reproduce::reference_config(tag, &opts)?;
            let b = reproduce::reproduce(tag, &opts)?;
            (cfg, b)
        }
    };
    let manifest = write_bundle(&g.out, &cfg, &bundle, started)?;
    if !g.quiet {
        for t in &bundle.tables {
            print!("{}", t.to_csv_string(&manifest.hash));
        }
        for p in &manifest.outputs {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qndsq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
