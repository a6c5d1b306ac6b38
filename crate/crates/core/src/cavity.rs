//! Truncated-Wigner trajectories with each probe beam passing through a
//! driven single-mode cavity.
//!
//! The frame rotates at the cavity resonance, which coincides with the drive,
//! so the only detuning left is the atomic one. Input and output fields are
//! flux normalized like the free-space beams and the cavity field `c` counts
//! photons. The reflected field uses the cavity amplitude averaged over the
//! step, which keeps the vacuum level of the output at `1/(2h)` to first
//! order in `kappa h`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::phys::{cavity_coupling, PhysicalConfig};
use crate::rng::{self, NoiseSpec, Scheme, LANE_MODE1, LANE_MODE2};
use crate::tw::{par_map_ordered, save_indices, screen, RunOptions, StepNoise, Trajectory, TrajectoryEnsemble, C64};

/// Largest step as a fraction of the cavity lifetime.
pub const MAX_KAPPA_STEP: f64 = 0.05;

/// One atomic mode with its cavity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CavityModeState {
    pub alpha: C64,
    pub c: C64,
    pub b_out: C64,
    pub b_in: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityModel {
    /// `g_c^2 Omega`
    pub g1: f64,
    /// `g_c^2 Gamma`
    pub g2: f64,
    pub kappa: f64,
    /// Langevin coupling `g_c sqrt(gamma) / (Delta - i gamma/2)`.
    pub kappa_q: C64,
    pub beta_in: f64,
    pub h: f64,
    pub n_steps: usize,
    pub tau: f64,
    pub squeeze_r: f64,
    pub n_atoms: f64,
    pub noiseless: bool,
    /// First step inside the homodyne window.
    pub window_start: usize,
    vac: f64,
    lo_weight: f64,
}

impl CavityModel {
    /// Step count actually used for a requested `n_steps`: the step is capped
    /// at `MAX_KAPPA_STEP / kappa` so the cavity decay is resolved.
    pub fn resolved_steps(cfg: &PhysicalConfig, n_steps: usize) -> Result<usize> {
        let cav = cfg
            .cavity
            .as_ref()
            .ok_or_else(|| Error::Config("cavity simulation needs a cavity block".into()))?;
        let h = (cfg.interaction_time / n_steps as f64).min(MAX_KAPPA_STEP / cav.kappa);
        Ok(((cfg.interaction_time / h).ceil() as usize).max(n_steps))
    }

    pub fn new(cfg: &PhysicalConfig, n_steps: usize, noiseless: bool) -> Result<Self> {
        let cav = cfg
            .cavity
            .ok_or_else(|| Error::Config("cavity simulation needs a cavity block".into()))?;
        let gc = cavity_coupling(cfg)?;
        let couplings = cfg.couplings();
        let gamma = cfg.effective_gamma();
        let steps = Self::resolved_steps(cfg, n_steps)?;
        let tau = cfg.interaction_time;
        let h = tau / steps as f64;
        let window_start = ((cav.homodyne_start / h).ceil() as usize).min(steps - 1);
        let window = tau - window_start as f64 * h;
        Ok(Self {
            g1: gc * gc * couplings.omega_factor,
            g2: gc * gc * couplings.gamma_factor,
            kappa: cav.kappa,
            kappa_q: gc * gamma.sqrt() / C64::new(cfg.detuning, -0.5 * gamma),
            beta_in: cfg.photon_flux.sqrt(),
            h,
            n_steps: steps,
            tau,
            squeeze_r: cfg.squeeze_r,
            n_atoms: cfg.n_atoms,
            noiseless,
            window_start,
            vac: if noiseless { 0.0 } else { 0.5 },
            lo_weight: h / window.sqrt(),
        })
    }

    /// Steady intracavity photon number without atoms, `4 Phi / kappa`.
    pub fn empty_steady_state(&self) -> f64 {
        4.0 * self.beta_in * self.beta_in / self.kappa
    }

    /// Vacuum level subtracted from a single-step flux sample.
    pub fn flux_vacuum(&self) -> f64 {
        self.vac / self.h
    }

    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> CavityModeState {
        let mut s = CavityModeState {
            alpha: C64::new((0.5 * self.n_atoms).sqrt(), 0.0),
            ..Default::default()
        };
        if !self.noiseless {
            s.alpha += rng::complex_normal(rng, 0.5);
            s.c += rng::complex_normal(rng, 0.5);
        }
        s
    }

    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> StepNoise {
        if self.noiseless {
            StepNoise::default()
        } else {
            StepNoise::draw(rng, self.h, self.squeeze_r)
        }
    }

    fn rate(&self) -> C64 {
        C64::new(-self.g2, self.g1)
    }

    fn advance(&self, s: &CavityModeState, b_in: C64, q: C64, na: f64, nc: f64) -> (C64, C64) {
        let k = self.rate();
        let lc = k * na - 0.5 * self.kappa;
        let la = k * nc;
        // exact response to a drive held constant over the step
        let drive = self.kappa_q * s.alpha.conj() * q + self.kappa.sqrt() * b_in;
        let z = lc * self.h;
        let c = z.exp() * s.c + phi1(z) * drive * self.h;
        let alpha = (la * self.h).exp() * (s.alpha + self.kappa_q * s.c.conj() * q * self.h);
        (alpha, c)
    }

    /// One step of both the atomic mode and the cavity field. Returns the new
    /// state and the step's input and output field samples.
    pub fn step(&self, k: usize, s: CavityModeState, noise: StepNoise, scheme: Scheme) -> (CavityModeState, C64, C64) {
        let b_in = C64::new(self.beta_in, 0.0) + noise.w;
        let na = s.alpha.norm_sqr() - self.vac;
        let nc = s.c.norm_sqr() - self.vac;
        let (mut alpha, mut c) = self.advance(&s, b_in, noise.q, na, nc);
        if scheme == Scheme::Midpoint {
            let na_mid = 0.5 * (na + alpha.norm_sqr() - self.vac);
            let nc_mid = 0.5 * (nc + c.norm_sqr() - self.vac);
            (alpha, c) = self.advance(&s, b_in, noise.q, na_mid, nc_mid);
        }
        let b_out = self.kappa.sqrt() * 0.5 * (s.c + c) - b_in;
        let mut next = CavityModeState { alpha, c, ..s };
        if k >= self.window_start {
            next.b_out += b_out * self.lo_weight;
            next.b_in += b_in * self.lo_weight;
        }
        (next, b_in, b_out)
    }
}

/// `(e^z - 1) / z`
fn phi1(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        1.0 + z * (0.5 + z / 6.0)
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `beta_out = sqrt(kappa) c - b_in` for a single field sample.
pub fn output_field_sample(kappa: f64, c: C64, b_in: C64) -> C64 {
    kappa.sqrt() * c - b_in
}

/// Free-space trajectory data plus the cavity records at the saved points.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityTrajectory {
    pub base: Trajectory,
    pub c1: Vec<C64>,
    pub c2: Vec<C64>,
    /// Input and output photon flux of mode 1 averaged over the steps since
    /// the previous saved point, vacuum level removed.
    pub input_flux: Vec<f64>,
    pub output_flux: Vec<f64>,
}

impl CavityTrajectory {
    pub fn is_finite(&self) -> bool {
        self.base.is_finite()
            && self.c1.iter().chain(&self.c2).all(|z| z.re.is_finite() && z.im.is_finite())
            && self.input_flux.iter().chain(&self.output_flux).all(|x| x.is_finite())
    }
}

/// Ensemble means over time at the saved points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CavityTraces {
    pub t: Vec<f64>,
    pub mean_na1: Vec<f64>,
    pub mean_nc: Vec<f64>,
    pub input_flux: Vec<f64>,
    pub output_flux: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavityEnsemble {
    pub ensemble: TrajectoryEnsemble,
    pub traces: CavityTraces,
    pub steps_used: usize,
    pub empty_steady_state: f64,
}

struct ModeRun {
    alpha: Vec<C64>,
    c: Vec<C64>,
    input_flux: Vec<f64>,
    output_flux: Vec<f64>,
    last: CavityModeState,
}

fn run_mode(model: &CavityModel, spec: &NoiseSpec, traj: u64, lane: u64, saves: &[usize], record: bool) -> ModeRun {
    let mut rng = rng::stream(spec.seed, traj, lane);
    let mut s = model.initial_state(&mut rng);
    let mut run = ModeRun {
        alpha: Vec::with_capacity(saves.len()),
        c: Vec::with_capacity(saves.len()),
        input_flux: Vec::new(),
        output_flux: Vec::new(),
        last: s,
    };
    let vac = model.flux_vacuum();
    let (mut sum_in, mut sum_out, mut count) = (0.0, 0.0, 0usize);
    let mut next = 0;
    for k in 0..=model.n_steps {
        if next < saves.len() && saves[next] == k {
            run.alpha.push(s.alpha);
            run.c.push(s.c);
            if record {
                let n = count.max(1) as f64;
                run.input_flux.push(sum_in / n);
                run.output_flux.push(sum_out / n);
                (sum_in, sum_out, count) = (0.0, 0.0, 0);
            }
            next += 1;
        }
        if k == model.n_steps {
            break;
        }
        let noise = model.draw_noise(&mut rng);
        let (ns, b_in, b_out) = model.step(k, s, noise, spec.scheme);
        if record {
            sum_in += b_in.norm_sqr() - vac;
            sum_out += b_out.norm_sqr() - vac;
            count += 1;
        }
        s = ns;
    }
    if record && !run.input_flux.is_empty() && saves.len() > 1 {
        // the t = 0 point has no history; report the first window there
        run.input_flux[0] = run.input_flux[1];
        run.output_flux[0] = run.output_flux[1];
    }
    run.last = s;
    run
}

pub fn run_cavity_trajectory(model: &CavityModel, spec: &NoiseSpec, traj: u64, saves: &[usize]) -> CavityTrajectory {
    let m1 = run_mode(model, spec, traj, LANE_MODE1, saves, true);
    let m2 = run_mode(model, spec, traj, LANE_MODE2, saves, false);
    CavityTrajectory {
        base: Trajectory {
            stream: traj,
            alpha1: m1.alpha,
            alpha2: m2.alpha,
            b_mode1: m1.last.b_out,
            b_mode2: m2.last.b_out,
            b_in1: m1.last.b_in,
            b_in2: m2.last.b_in,
        },
        c1: m1.c,
        c2: m2.c,
        input_flux: m1.input_flux,
        output_flux: m1.output_flux,
    }
}

/// Integrates `spec.n_traj` cavity trajectories. `spec.n_steps` is a lower
/// bound; the step is refined to resolve `1/kappa`.
pub fn run_cavity_ensemble(cfg: &PhysicalConfig, spec: &NoiseSpec, opts: &RunOptions) -> Result<CavityEnsemble> {
    cfg.validate()?;
    spec.validate()?;
    let model = CavityModel::new(cfg, spec.n_steps, opts.noiseless)?;
    let saves = save_indices(model.n_steps, opts.n_save);
    let all = par_map_ordered(spec.n_traj, opts.workers, |i| {
        let t = run_cavity_trajectory(&model, spec, i as u64, &saves);
        t.is_finite().then_some(t)
    })?;
    let (trajs, n_diverged) = screen(all)?;

    let n = trajs.len() as f64;
    let vac = if opts.noiseless { 0.0 } else { 0.5 };
    let avg = |f: &dyn Fn(&CavityTrajectory, usize) -> f64, j: usize| trajs.iter().map(|t| f(t, j)).sum::<f64>() / n;
    let js = 0..saves.len();
    let traces = CavityTraces {
        t: saves.iter().map(|&k| k as f64 * model.h).collect(),
        mean_na1: js.clone().map(|j| avg(&|t, j| t.base.alpha1[j].norm_sqr(), j) - vac).collect(),
        mean_nc: js.clone().map(|j| avg(&|t, j| t.c1[j].norm_sqr(), j) - vac).collect(),
        input_flux: js.clone().map(|j| avg(&|t, j| t.input_flux[j], j)).collect(),
        output_flux: js.map(|j| avg(&|t, j| t.output_flux[j], j)).collect(),
    };
    let ensemble = TrajectoryEnsemble {
        trajectories: trajs.into_iter().map(|t| t.base).collect(),
        save_times: traces.t.clone(),
        n_atoms: cfg.n_atoms,
        n_total: spec.n_traj,
        n_diverged,
        noise: *spec,
    };
    Ok(CavityEnsemble {
        ensemble,
        traces,
        steps_used: model.n_steps,
        empty_steady_state: model.empty_steady_state(),
    })
}
