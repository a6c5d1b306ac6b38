//! Physical moments from Wigner trajectory ensembles.
//!
//! Wigner averages are symmetrically ordered. Occupation moments are shifted
//! to normal order per mode: `<n> = <|a|^2> - 1/2` and
//! `<n^2> = <|a|^4> - <|a|^2>`, so `Var(n) = Var_W(|a|^2) - 1/4`. For
//! `Jz = (n1 - n2)/2` the two shifts combine to `Var_W(Jz) - 1/8`. Products of
//! distinct modes and quadratures of a homodyne mode need no shift.
//!
//! The sampled light shift follows the Wigner atom number, so the extra 1/8
//! of vacuum variance in `Jz` is also imprinted on the phase signal. With the
//! response `K = Cov_W(Jz, S_b) / Var_W(Jz)` the same shift is removed from
//! the light-mediated moments: `K/8` from the covariance and `K^2/8` from
//! `Var(S_b)`. Without this the residual `Var(S2)` is biased low by up to
//! 1/8, which dominates once the measurement resolves `Jz` below one atom.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{self, LANE_BOOTSTRAP};
use crate::tw::{phase_quadrature, TrajectoryEnsemble};

pub const DEFAULT_RESAMPLES: usize = 200;

/// Per-trajectory Wigner quantities at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub n1: f64,
    pub n2: f64,
    pub jx: f64,
    /// `Y2 - Y1`
    pub sb: f64,
}

impl Sample {
    pub fn jz(&self) -> f64 {
        0.5 * (self.n1 - self.n2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub mean_na1: f64,
    pub mean_na2: f64,
    pub mean_jx: f64,
    pub var_jz: f64,
    pub var_sb: f64,
    pub cov_jz_sb: f64,
    pub var_s2: f64,
    pub gain: f64,
    pub xi: f64,
    pub stderr_xi: f64,
    pub n_traj_used: usize,
}

impl MomentSet {
    /// Variance of the bare atomic estimator.
    pub fn var_s1(&self) -> f64 {
        self.var_jz
    }
}

/// Atomic moments at an arbitrary saved time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomicMoments {
    pub t: f64,
    pub mean_na1: f64,
    pub mean_na2: f64,
    pub mean_jx: f64,
    pub var_jz: f64,
    pub stderr_mean_na1: f64,
    pub stderr_var_jz: f64,
}

pub fn samples_at(ens: &TrajectoryEnsemble, idx: usize) -> Vec<Sample> {
    ens.trajectories
        .iter()
        .map(|t| {
            let (a1, a2) = (t.alpha1[idx], t.alpha2[idx]);
            Sample {
                n1: a1.norm_sqr(),
                n2: a2.norm_sqr(),
                jx: (a1.conj() * a2).re,
                sb: phase_quadrature(t.b_mode2) - phase_quadrature(t.b_mode1),
            }
        })
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Unbiased covariance, two-pass.
fn cov(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs.iter().copied()), mean(ys.iter().copied()));
    let s: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    s / (xs.len() - 1) as f64
}

fn var(xs: &[f64]) -> f64 {
    cov(xs, xs)
}

fn require_two(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::Estimation(format!("need at least 2 trajectories, got {n}")))
    } else {
        Ok(())
    }
}

/// Ordering-corrected `(Var(Jz), Cov(Jz, S_b), Var(S_b))`.
fn signal_moments(samples: &[Sample]) -> (f64, f64, f64) {
    let jz: Vec<f64> = samples.iter().map(Sample::jz).collect();
    let sb: Vec<f64> = samples.iter().map(|s| s.sb).collect();
    let (vw, cw, sw) = (var(&jz), cov(&jz, &sb), var(&sb));
    let k = cw / vw;
    (vw - 0.125, cw - 0.125 * k, sw - 0.125 * k * k)
}

/// Corrected variance of `Jz - g S_b` recomputed from the samples.
pub fn var_s2_with_gain(samples: &[Sample], g: f64) -> f64 {
    let (v, c, s) = signal_moments(samples);
    v - 2.0 * g * c + g * g * s
}

/// Moments of the combined signal without error bars.
pub fn moments_from_samples(samples: &[Sample], n_atoms: f64) -> Result<MomentSet> {
    require_two(samples.len())?;
    let (var_jz, cov_jz_sb, var_sb) = signal_moments(samples);
    let mut m = MomentSet {
        mean_na1: mean(samples.iter().map(|s| s.n1)) - 0.5,
        mean_na2: mean(samples.iter().map(|s| s.n2)) - 0.5,
        mean_jx: mean(samples.iter().map(|s| s.jx)),
        var_jz,
        var_sb,
        cov_jz_sb,
        var_s2: f64::NAN,
        gain: f64::NAN,
        xi: f64::NAN,
        stderr_xi: f64::NAN,
        n_traj_used: samples.len(),
    };
    let (gain, var_s2, xi) = combined_signal(&m, n_atoms)?;
    m.gain = gain;
    m.var_s2 = var_s2;
    m.xi = xi;
    Ok(m)
}

/// Optimal gain, residual variance and squeezing parameter from the raw
/// moments in `m`.
// negated comparisons also reject NaN
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn combined_signal(m: &MomentSet, n_atoms: f64) -> Result<(f64, f64, f64)> {
    if !(m.var_sb > 0.0) {
        return Err(Error::Estimation(format!("Var(S_b) must be > 0, got {}", m.var_sb)));
    }
    let threshold = 1e-9 * n_atoms;
    if !(m.mean_jx.abs() >= threshold) {
        return Err(Error::DegenerateSignal {
            mean_jx: m.mean_jx,
            threshold,
        });
    }
    let gain = m.cov_jz_sb / m.var_sb;
    let var_s2 = m.var_jz - gain * m.cov_jz_sb;
    if var_s2 < 0.0 {
        return Err(Error::Estimation(format!(
            "negative residual variance {var_s2:e}; ensemble too small"
        )));
    }
    let xi = n_atoms.sqrt() * var_s2.sqrt() / m.mean_jx.abs();
    Ok((gain, var_s2, xi))
}

/// Ordering-corrected moments at the final time with a bootstrap error on xi.
pub fn corrected_moments(ens: &TrajectoryEnsemble) -> Result<MomentSet> {
    corrected_moments_with(ens, DEFAULT_RESAMPLES)
}

pub fn corrected_moments_with(ens: &TrajectoryEnsemble, n_resamples: usize) -> Result<MomentSet> {
    let samples = samples_at(ens, ens.final_index());
    let mut m = moments_from_samples(&samples, ens.n_atoms)?;
    m.stderr_xi = bootstrap_samples(&samples, ens.n_atoms, n_resamples, ens.noise.seed)?;
    Ok(m)
}

/// Atomic moments at saved index `idx`.
pub fn atomic_moments(ens: &TrajectoryEnsemble, idx: usize) -> Result<AtomicMoments> {
    require_two(ens.len())?;
    let samples = samples_at(ens, idx);
    let n = samples.len() as f64;
    let n1: Vec<f64> = samples.iter().map(|s| s.n1).collect();
    let jz: Vec<f64> = samples.iter().map(Sample::jz).collect();
    let var_w = var(&jz);
    // fourth moment for the standard error of a sample variance
    let mz = mean(jz.iter().copied());
    let m4 = mean(jz.iter().map(|x| (x - mz).powi(4)));
    Ok(AtomicMoments {
        t: ens.save_times[idx],
        mean_na1: mean(n1.iter().copied()) - 0.5,
        mean_na2: mean(samples.iter().map(|s| s.n2)) - 0.5,
        mean_jx: mean(samples.iter().map(|s| s.jx)),
        var_jz: var_w - 0.125,
        stderr_mean_na1: (var(&n1) / n).sqrt(),
        stderr_var_jz: ((m4 - var_w * var_w * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt(),
    })
}

/// Nonparametric bootstrap of xi over trajectories. Replicates whose
/// estimator is undefined are skipped; the error is the standard deviation
/// of the remaining replicates.
pub fn bootstrap_stderr(ens: &TrajectoryEnsemble, n_resamples: usize, seed: u64) -> Result<f64> {
    bootstrap_samples(&samples_at(ens, ens.final_index()), ens.n_atoms, n_resamples, seed)
}

pub fn bootstrap_samples(samples: &[Sample], n_atoms: f64, n_resamples: usize, seed: u64) -> Result<f64> {
    require_two(samples.len())?;
    if n_resamples < 100 {
        return Err(Error::Estimation(format!("n_resamples must be >= 100, got {n_resamples}")));
    }
    let mut rng = rng::stream(seed, 0, LANE_BOOTSTRAP);
    let n = samples.len();
    let mut buf = Vec::with_capacity(n);
    let mut xis = Vec::with_capacity(n_resamples);
    for _ in 0..n_resamples {
        buf.clear();
        buf.extend((0..n).map(|_| samples[rng.random_range(0..n)]));
        if let Ok(m) = moments_from_samples(&buf, n_atoms) {
            xis.push(m.xi);
        }
    }
    if xis.len() < 2 {
        return Err(Error::Estimation("bootstrap produced no valid replicates".into()));
    }
    Ok(var(&xis).sqrt())
}

/// Empirical quadrature variances of the homodyne modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureStats {
    pub var_y1: f64,
    pub var_y2: f64,
    pub mean_y1: f64,
    pub var_yin1: f64,
    pub var_xin1: f64,
    pub var_x1: f64,
}

pub fn quadrature_stats(ens: &TrajectoryEnsemble) -> Result<QuadratureStats> {
    require_two(ens.len())?;
    let col = |f: &dyn Fn(&crate::tw::Trajectory) -> f64| ens.trajectories.iter().map(f).collect::<Vec<f64>>();
    let y1 = col(&|t| phase_quadrature(t.b_mode1));
    Ok(QuadratureStats {
        var_y1: var(&y1),
        var_y2: var(&col(&|t| phase_quadrature(t.b_mode2))),
        mean_y1: mean(y1.iter().copied()),
        var_yin1: var(&col(&|t| phase_quadrature(t.b_in1))),
        var_xin1: var(&col(&|t| crate::tw::amplitude_quadrature(t.b_in1))),
        var_x1: var(&col(&|t| crate::tw::amplitude_quadrature(t.b_mode1))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::complex_normal;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn single_mode_second_moment() {
        // coherent amplitude |m|^2 = N/2: <n^2> = N/2 + N^2/4
        let big_n: f64 = 40.0;
        let m = Complex64::new((0.5 * big_n).sqrt(), 0.0);
        let mut r = rng::stream(11, 0, 0);
        let k = 2_000_000;
        let (mut s2, mut s4) = (0.0, 0.0);
        for _ in 0..k {
            let a = m + complex_normal(&mut r, 0.5);
            let x = a.norm_sqr();
            s2 += x;
            s4 += x * x;
        }
        let n2 = s4 / k as f64 - s2 / k as f64;
        assert_relative_eq!(n2, 0.5 * big_n + 0.25 * big_n * big_n, max_relative = 2e-3);
    }

    fn synthetic(n: usize, seed: u64) -> Vec<Sample> {
        let mut r = rng::stream(seed, 0, 0);
        (0..n)
            .map(|_| {
                let a = rng::normal(&mut r);
                let b = rng::normal(&mut r);
                let n1 = 50.0 + 3.0 * a;
                let n2 = 50.0 - 3.0 * a + 0.5 * b;
                Sample {
                    n1,
                    n2,
                    jx: 40.0,
                    sb: 2.0 * a + rng::normal(&mut r),
                }
            })
            .collect()
    }

    #[test]
    fn residual_identity_and_gain_optimality() {
        let s = synthetic(5000, 2);
        let m = moments_from_samples(&s, 100.0).unwrap();
        assert_relative_eq!(m.var_s2, m.var_jz - m.cov_jz_sb * m.cov_jz_sb / m.var_sb, max_relative = 1e-12);
        assert!(m.var_s2 <= m.var_jz);
        let at = var_s2_with_gain(&s, m.gain);
        assert_relative_eq!(at, m.var_s2, max_relative = 1e-9);
        // the corrected residual is the raw one minus the vacuum share (1 - K g)^2 / 8
        let jz: Vec<f64> = s.iter().map(Sample::jz).collect();
        let sb: Vec<f64> = s.iter().map(|x| x.sb).collect();
        let k = cov(&jz, &sb) / var(&jz);
        let raw: Vec<f64> = s.iter().map(|x| x.jz() - m.gain * x.sb).collect();
        assert_relative_eq!(var(&raw) - 0.125 * (1.0 - k * m.gain).powi(2), at, max_relative = 1e-9);
        assert!(var_s2_with_gain(&s, 1.1 * m.gain) > at);
        assert!(var_s2_with_gain(&s, 0.9 * m.gain) > at);
        // the phase error is xi / sqrt(N_a)
        let dtheta = m.var_s2.sqrt() / m.mean_jx.abs();
        assert_relative_eq!(dtheta * 100f64.sqrt(), m.xi, max_relative = 1e-14);
    }

    #[test]
    fn zero_covariance_reduces_to_atomic_estimator() {
        let m0 = MomentSet {
            mean_na1: 0.0,
            mean_na2: 0.0,
            mean_jx: 50.0,
            var_jz: 25.0,
            var_sb: 2.0,
            cov_jz_sb: 0.0,
            var_s2: 0.0,
            gain: 0.0,
            xi: 0.0,
            stderr_xi: 0.0,
            n_traj_used: 10,
        };
        let (g, v, xi) = combined_signal(&m0, 100.0).unwrap();
        assert_eq!(g, 0.0);
        assert_eq!(v, 25.0);
        assert_relative_eq!(xi, 10.0 * 5.0 / 50.0);
        let bad = MomentSet { mean_jx: 1e-12, ..m0 };
        assert!(matches!(combined_signal(&bad, 100.0), Err(Error::DegenerateSignal { .. })));
        let bad = MomentSet { var_sb: 0.0, ..m0 };
        assert!(combined_signal(&bad, 100.0).is_err());
    }

    #[test]
    fn too_few_trajectories() {
        assert!(moments_from_samples(&synthetic(1, 1), 100.0).is_err());
    }

    #[test]
    fn bootstrap_duplicated_and_stable() {
        let s = synthetic(2000, 5);
        let e1 = bootstrap_samples(&s, 100.0, 200, 9).unwrap();
        let doubled: Vec<Sample> = s.iter().chain(&s).copied().collect();
        let e2 = bootstrap_samples(&doubled, 100.0, 200, 9).unwrap();
        assert!((e2 / e1 - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.15, "{}", e2 / e1);
        let e3 = bootstrap_samples(&s, 100.0, 2000, 9).unwrap();
        assert!((e3 / e1 - 1.0).abs() < 0.2);
        assert!(bootstrap_samples(&s, 100.0, 50, 9).is_err());
    }

    #[test]
    fn bootstrap_scales_with_sample_size() {
        let errs: Vec<f64> = [500, 2000, 8000]
            .iter()
            .map(|&n| bootstrap_samples(&synthetic(n, n as u64), 100.0, 200, 1).unwrap())
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1] / 2.0 - 1.0).abs() < 0.25, "{errs:?}");
        }
    }
}
