//! Truncated-Wigner trajectories for the free-space probe.
//!
//! Optical fields are flux normalized: `|B|^2` counts photons per second and
//! a white-noise sample on a step of length `h` has `E|w|^2 = 1/(2h)`. The
//! atomic drift is linear in the atomic amplitude over one step, so it is
//! propagated with the exact exponential. The accumulated light-shift phase
//! reaches thousands of radians per step in the interesting regimes and a
//! first-order expansion of it would not be stable.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use crate::error::{Error, Result};
use crate::estimators::Sample;
use crate::phys::PhysicalConfig;
use crate::rng::{self, NoiseSpec, Scheme, LANE_MODE1, LANE_MODE2};

pub type C64 = Complex64;

/// Knobs that do not change the physics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    /// Number of evenly spaced time points recorded per trajectory, including
    /// `t = 0` and `t = tau`.
    pub n_save: usize,
    /// Drop all vacuum noise and the matching ordering subtractions on the
    /// light. Gives the classical mean-field dynamics.
    pub noiseless: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            n_save: 17,
            noiseless: false,
        }
    }
}

/// Noise entering one mode on one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepNoise {
    /// Fluctuation of the driving light around its mean amplitude.
    pub w: C64,
    /// Langevin noise of the eliminated excited state.
    pub q: C64,
}

impl StepNoise {
    /// Samples the light noise with its amplitude quadrature anti-squeezed by
    /// `e^r` and the phase quadrature squeezed by `e^-r`.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, h: f64, squeeze_r: f64) -> Self {
        let s = (0.25 / h).sqrt();
        let (up, down) = (squeeze_r.exp(), (-squeeze_r).exp());
        let w = C64::new(up * s * rng::normal(rng), down * s * rng::normal(rng));
        let q = C64::new(s * rng::normal(rng), s * rng::normal(rng));
        Self { w, q }
    }
}

/// One atomic mode and its probe beam.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeState {
    pub alpha: C64,
    /// Homodyne mode of the transmitted light.
    pub b_out: C64,
    /// Homodyne mode of the light before the atoms.
    pub b_in: C64,
}

impl ModeState {
    pub fn is_finite(&self) -> bool {
        [self.alpha, self.b_out, self.b_in].iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Precomputed per-step constants of the free-space equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeSpaceModel {
    pub chi1: f64,
    pub chi2: f64,
    /// Coupling of the Langevin noise, `|kappa_c|^2 = 2 chi2`.
    pub kappa_c: C64,
    pub beta0: f64,
    pub h: f64,
    pub n_steps: usize,
    pub tau: f64,
    pub squeeze_r: f64,
    pub n_atoms: f64,
    pub noiseless: bool,
    light_offset: f64,
    lo_weight: f64,
}

impl FreeSpaceModel {
    pub fn new(cfg: &PhysicalConfig, n_steps: usize, noiseless: bool) -> Self {
        let c = cfg.couplings();
        let gamma = cfg.effective_gamma();
        let den = C64::new(cfg.detuning, -0.5 * gamma);
        let kappa_c = (c.g_sq * gamma / crate::phys::C_LIGHT).sqrt() / den;
        let tau = cfg.interaction_time;
        let h = tau / n_steps as f64;
        Self {
            chi1: c.chi1,
            chi2: c.chi2,
            kappa_c,
            beta0: cfg.photon_flux.sqrt(),
            h,
            n_steps,
            tau,
            squeeze_r: cfg.squeeze_r,
            n_atoms: cfg.n_atoms,
            noiseless,
            light_offset: if noiseless { 0.0 } else { 0.5 / h },
            lo_weight: h / tau.sqrt(),
        }
    }

    /// `i chi1 - chi2`
    fn rate(&self) -> C64 {
        C64::new(-self.chi2, self.chi1)
    }

    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> ModeState {
        let mut alpha = C64::new((0.5 * self.n_atoms).sqrt(), 0.0);
        if !self.noiseless {
            alpha += rng::complex_normal(rng, 0.5);
        }
        ModeState {
            alpha,
            ..Default::default()
        }
    }

    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> StepNoise {
        if self.noiseless {
            StepNoise::default()
        } else {
            StepNoise::draw(rng, self.h, self.squeeze_r)
        }
    }

    /// Advances one mode by one step and adds the step's light to both
    /// homodyne modes.
    pub fn step(&self, s: ModeState, noise: StepNoise, scheme: Scheme) -> ModeState {
        let k = self.rate();
        let b = C64::new(self.beta0, 0.0) + noise.w;
        let lh = k * (b.norm_sqr() - self.light_offset) * self.h;
        let kick = self.kappa_c * b.conj() * noise.q * self.h;
        let (alpha, n_seen, alpha_seen) = match scheme {
            Scheme::EulerMaruyama => {
                let a = lh.exp() * (s.alpha + kick);
                (a, s.alpha.norm_sqr(), s.alpha)
            }
            Scheme::Midpoint => {
                let a = lh.exp() * s.alpha + (0.5 * lh).exp() * kick;
                (a, 0.5 * (s.alpha.norm_sqr() + a.norm_sqr()), 0.5 * (s.alpha + a))
            }
        };
        let out = b * (k * (n_seen - 0.5)).exp() + self.kappa_c * alpha_seen.conj() * noise.q;
        ModeState {
            alpha,
            b_out: s.b_out + out * self.lo_weight,
            b_in: s.b_in + b * self.lo_weight,
        }
    }
}

/// Step indices at which the atomic state is recorded.
pub fn save_indices(n_steps: usize, n_save: usize) -> Vec<usize> {
    let n_save = n_save.max(2);
    let mut idx: Vec<usize> = (0..n_save)
        .map(|j| ((j as f64 * n_steps as f64 / (n_save - 1) as f64).round() as usize).min(n_steps))
        .collect();
    idx.dedup();
    idx
}

/// One stochastic realization. Atomic amplitudes are stored at the saved
/// time points only.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub stream: u64,
    pub alpha1: Vec<C64>,
    pub alpha2: Vec<C64>,
    pub b_mode1: C64,
    pub b_mode2: C64,
    pub b_in1: C64,
    pub b_in2: C64,
}

impl Trajectory {
    pub fn is_finite(&self) -> bool {
        let ok = |z: &C64| z.re.is_finite() && z.im.is_finite();
        self.alpha1.iter().chain(&self.alpha2).all(ok)
            && [self.b_mode1, self.b_mode2, self.b_in1, self.b_in2].iter().all(ok)
    }
}

/// Phase quadrature of a homodyne mode, `Y = -i (b - b^*)` up to the sign
/// convention that makes the measured light shift positive for `Jz > 0`.
pub fn phase_quadrature(b: C64) -> f64 {
    -2.0 * b.im
}

pub fn amplitude_quadrature(b: C64) -> f64 {
    2.0 * b.re
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub trajectories: Vec<Trajectory>,
    pub save_times: Vec<f64>,
    pub n_atoms: f64,
    pub n_total: usize,
    pub n_diverged: usize,
    pub noise: NoiseSpec,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn final_index(&self) -> usize {
        self.save_times.len() - 1
    }

    /// Writes one line per trajectory with the final atomic amplitudes and
    /// the homodyne modes.
    pub fn dump_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "stream,alpha1_re,alpha1_im,alpha2_re,alpha2_im,y1,y2,yin1,yin2")?;
        let k = self.final_index();
        for t in &self.trajectories {
            writeln!(
                out,
                "{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
                t.stream,
                t.alpha1[k].re,
                t.alpha1[k].im,
                t.alpha2[k].re,
                t.alpha2[k].im,
                phase_quadrature(t.b_mode1),
                phase_quadrature(t.b_mode2),
                phase_quadrature(t.b_in1),
                phase_quadrature(t.b_in2),
            )?;
        }
        Ok(())
    }
}

/// Maps `f` over `0..n` on `workers` threads, keeping index order.
pub(crate) fn par_map_ordered<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

/// Drops non-finite trajectories and enforces the 1% divergence limit.
pub(crate) fn screen<T>(all: Vec<Option<T>>) -> Result<(Vec<T>, usize)> {
    let total = all.len();
    let kept: Vec<T> = all.into_iter().flatten().collect();
    let diverged = total - kept.len();
    if diverged * 100 > total || kept.len() < 2 {
        return Err(Error::Diverged { diverged, total });
    }
    Ok((kept, diverged))
}

fn run_mode(
    model: &FreeSpaceModel,
    spec: &NoiseSpec,
    traj: u64,
    lane: u64,
    saves: &[usize],
) -> (Vec<C64>, ModeState) {
    let mut rng = rng::stream(spec.seed, traj, lane);
    let mut s = model.initial_state(&mut rng);
    let mut trace = Vec::with_capacity(saves.len());
    let mut next = saves.iter().peekable();
    for k in 0..model.n_steps {
        if next.peek() == Some(&&k) {
            trace.push(s.alpha);
            next.next();
        }
        let noise = model.draw_noise(&mut rng);
        s = model.step(s, noise, spec.scheme);
    }
    if next.peek() == Some(&&model.n_steps) {
        trace.push(s.alpha);
    }
    (trace, s)
}

/// Integrates one trajectory; both modes use independent streams.
pub fn run_trajectory(model: &FreeSpaceModel, spec: &NoiseSpec, traj: u64, saves: &[usize]) -> Trajectory {
    let (alpha1, m1) = run_mode(model, spec, traj, LANE_MODE1, saves);
    let (alpha2, m2) = run_mode(model, spec, traj, LANE_MODE2, saves);
    Trajectory {
        stream: traj,
        alpha1,
        alpha2,
        b_mode1: m1.b_out,
        b_mode2: m2.b_out,
        b_in1: m1.b_in,
        b_in2: m2.b_in,
    }
}

/// Integrates `spec.n_traj` free-space trajectories.
pub fn run_ensemble(cfg: &PhysicalConfig, spec: &NoiseSpec, opts: &RunOptions) -> Result<TrajectoryEnsemble> {
    cfg.validate()?;
    spec.validate()?;
    if cfg.cavity.is_some() {
        return Err(Error::Config("configuration has a cavity block; use the cavity simulator".into()));
    }
    let model = FreeSpaceModel::new(cfg, spec.n_steps, opts.noiseless);
    let saves = save_indices(spec.n_steps, opts.n_save);
    let all = par_map_ordered(spec.n_traj, opts.workers, |i| {
        let t = run_trajectory(&model, spec, i as u64, &saves);
        t.is_finite().then_some(t)
    })?;
    let (trajectories, n_diverged) = screen(all)?;
    Ok(TrajectoryEnsemble {
        trajectories,
        save_times: saves.iter().map(|&k| k as f64 * model.h).collect(),
        n_atoms: cfg.n_atoms,
        n_total: spec.n_traj,
        n_diverged,
        noise: *spec,
    })
}

/// Wigner samples of the single-mode model, where each light mode and its
/// atomic partner exchange the phase `chi t n` exactly. `n_ph` is the mean
/// photon number per light mode.
pub fn run_single_mode(n_atoms: f64, n_ph: f64, chi_t: f64, spec: &NoiseSpec, workers: usize) -> Result<Vec<Sample>> {
    spec.validate()?;
    if !(n_atoms >= 2.0 && n_ph >= 0.0 && chi_t > 0.0) {
        return Err(Error::Domain(format!(
            "single-mode model needs n_atoms >= 2, n_ph >= 0, chi t > 0; got {n_atoms}, {n_ph}, {chi_t}"
        )));
    }
    let pair = |traj: u64, lane: u64| {
        let mut r = rng::stream(spec.seed, traj, lane);
        let a = C64::new((0.5 * n_atoms).sqrt(), 0.0) + rng::complex_normal(&mut r, 0.5);
        let b = C64::new(n_ph.sqrt(), 0.0) + rng::complex_normal(&mut r, 0.5);
        let a_t = a * C64::from_polar(1.0, chi_t * (b.norm_sqr() - 0.5));
        let b_t = b * C64::from_polar(1.0, chi_t * (a.norm_sqr() - 0.5));
        (a_t, b_t)
    };
    let all = par_map_ordered(spec.n_traj, workers, |i| {
        let (a1, b1) = pair(i as u64, LANE_MODE1);
        let (a2, b2) = pair(i as u64, LANE_MODE2);
        let s = Sample {
            n1: a1.norm_sqr(),
            n2: a2.norm_sqr(),
            jx: (a1.conj() * a2).re,
            sb: phase_quadrature(b2) - phase_quadrature(b1),
        };
        [s.n1, s.n2, s.jx, s.sb].iter().all(|x| x.is_finite()).then_some(s)
    })?;
    Ok(screen(all)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phys::{decay_factor, AtomSpecies};
    use approx::assert_relative_eq;

    fn cfg(area: f64, flux: f64, se: bool) -> PhysicalConfig {
        let mut p = PhysicalConfig::free_space(AtomSpecies::rb87(), area, 1e11, 1e4, flux, 1e-3);
        p.spontaneous_emission = se;
        p
    }

    #[test]
    fn noiseless_lossless_phase_shift() {
        let p = cfg(1e-10, 1e15, false);
        let m = FreeSpaceModel::new(&p, 64, true);
        let mut s = m.initial_state(&mut rng::stream(1, 0, 0));
        let n0 = s.alpha.norm_sqr();
        for _ in 0..64 {
            s = m.step(s, StepNoise::default(), Scheme::EulerMaruyama);
        }
        assert_relative_eq!(s.alpha.norm_sqr(), n0, max_relative = 1e-12);
        // every output sample carries the same phase chi (N_a/2 - 1/2)
        let chi = p.couplings().chi_ns;
        let expect = chi * (0.5 * p.n_atoms - 0.5);
        let got = s.b_out.arg() - s.b_in.arg();
        assert_relative_eq!(got, expect, max_relative = 1e-9);
    }

    #[test]
    fn noiseless_decay_is_exact() {
        let p = cfg(1e-10, 2e13, true);
        for scheme in [Scheme::EulerMaruyama, Scheme::Midpoint] {
            let m = FreeSpaceModel::new(&p, 16, true);
            let mut s = m.initial_state(&mut rng::stream(1, 0, 0));
            for _ in 0..16 {
                s = m.step(s, StepNoise::default(), scheme);
            }
            let eps = decay_factor(p.couplings().lambda);
            assert!(eps < 0.5 && eps > 0.05);
            assert_relative_eq!(s.alpha.norm_sqr(), 0.5 * p.n_atoms * eps, max_relative = 1e-10);
        }
    }

    #[test]
    fn langevin_coupling_matches_absorption() {
        let m = FreeSpaceModel::new(&cfg(1e-9, 1e12, true), 16, false);
        assert_relative_eq!(m.kappa_c.norm_sqr(), 2.0 * m.chi2, max_relative = 1e-12);
    }

    #[test]
    fn save_grid() {
        assert_eq!(save_indices(256, 5), vec![0, 64, 128, 192, 256]);
        assert_eq!(save_indices(16, 40).len(), 17);
        assert_eq!(*save_indices(100, 2).last().unwrap(), 100);
    }

    #[test]
    fn initial_wigner_moment() {
        let m = FreeSpaceModel::new(&cfg(1e-10, 1e12, true), 16, false);
        let mut r = rng::stream(3, 0, 0);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = m.initial_state(&mut r).alpha.norm_sqr();
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let sd = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - (0.5 * m.n_atoms + 0.5)).abs() < 3.0 * sd, "{mean} vs {}", 0.5 * m.n_atoms + 0.5);
    }

    #[test]
    fn divergence_screen() {
        let v: Vec<Option<u8>> = (0..200).map(|i| (i != 5).then_some(0)).collect();
        let (kept, d) = screen(v).unwrap();
        assert_eq!((kept.len(), d), (199, 1));
        let v: Vec<Option<u8>> = (0..200).map(|i| (i % 50 != 0).then_some(0)).collect();
        assert!(matches!(screen(v), Err(Error::Diverged { diverged: 4, total: 200 })));
    }

    #[test]
    fn cavity_config_is_rejected() {
        let mut p = cfg(1e-8, 1e12, true);
        p.interaction_time = 1e-4;
        p.cavity = Some(crate::phys::CavityConfig::new(1e6, 0.1));
        assert!(run_ensemble(&p, &NoiseSpec::new(1, 4, 16), &RunOptions::default()).is_err());
    }

    #[test]
    fn single_mode_matches_closed_form() {
        let (na, chi_t) = (1e4, 1e-6);
        let spec = NoiseSpec::new(3, 8000, 16);
        for u in [0.01, 0.5] {
            let n_ph = u / (chi_t * chi_t);
            let s = run_single_mode(na, n_ph, chi_t, &spec, 0).unwrap();
            let m = crate::estimators::moments_from_samples(&s, na).unwrap();
            let want = crate::analytic::xi_single_mode(chi_t, n_ph, na, 1.0).unwrap();
            assert_relative_eq!(m.xi, want, max_relative = 0.06);
        }
    }
}
