//! Reproducible noise streams for the stochastic simulators.
//!
//! Every trajectory draws from its own ChaCha8 stream. The 64-bit master seed
//! picks the key and the stream id is `(trajectory << 2) | lane`, so
//! trajectories and lanes never share a keystream and the numbers a trajectory
//! sees do not depend on how work is split across threads.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stream lanes within one trajectory.
pub const LANE_MODE1: u64 = 0;
pub const LANE_MODE2: u64 = 1;
pub const LANE_BOOTSTRAP: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exponential Euler: the linear drift is propagated exactly over a step
    /// and the noise is added at the left point.
    #[default]
    EulerMaruyama,
    /// Noise injected at the step midpoint with predictor-averaged intensities.
    Midpoint,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::EulerMaruyama => "euler-maruyama",
            Scheme::Midpoint => "midpoint",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler-maruyama" => Ok(Scheme::EulerMaruyama),
            "midpoint" => Ok(Scheme::Midpoint),
            other => Err(Error::Config(format!(
                "unknown scheme `{other}` (expected euler-maruyama or midpoint)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub seed: u64,
    pub n_traj: usize,
    pub n_steps: usize,
    pub scheme: Scheme,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            n_traj: 1000,
            n_steps: 256,
            scheme: Scheme::EulerMaruyama,
        }
    }
}

impl NoiseSpec {
    pub fn new(seed: u64, n_traj: usize, n_steps: usize) -> Self {
        Self {
            seed,
            n_traj,
            n_steps,
            scheme: Scheme::EulerMaruyama,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_traj < 2 {
            return Err(Error::Config(format!("n_traj must be >= 2, got {}", self.n_traj)));
        }
        if self.n_steps < 16 {
            return Err(Error::Config(format!("n_steps must be >= 16, got {}", self.n_steps)));
        }
        if self.n_traj as u64 >= 1 << 62 {
            return Err(Error::Config("n_traj too large for the stream layout".into()));
        }
        Ok(())
    }
}

/// Stream id for `lane` of trajectory `traj`.
pub fn stream_id(traj: u64, lane: u64) -> u64 {
    debug_assert!(lane < 4);
    (traj << 2) | lane
}

pub fn stream(seed: u64, traj: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(traj, lane));
    rng
}

#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Gaussian with `E|z|^2 = var`, split evenly over the quadratures.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    Complex64::new(s * normal(rng), s * normal(rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_distinct_and_repeatable() {
        let a: Vec<f64> = (0..8).map({
            let mut r = stream(7, 3, LANE_MODE1);
            move |_| normal(&mut r)
        }).collect();
        let b: Vec<f64> = (0..8).map({
            let mut r = stream(7, 3, LANE_MODE1);
            move |_| normal(&mut r)
        }).collect();
        assert_eq!(a, b);
        let mut other = stream(7, 3, LANE_MODE2);
        assert_ne!(a[0], normal(&mut other));
        let mut next = stream(7, 4, LANE_MODE1);
        assert_ne!(a[0], normal(&mut next));
        let mut reseeded = stream(8, 3, LANE_MODE1);
        assert_ne!(a[0], normal(&mut reseeded));
    }

    #[test]
    fn stream_ids_do_not_collide() {
        let mut seen = std::collections::HashSet::new();
        for t in 0..1000 {
            for lane in 0..4 {
                assert!(seen.insert(stream_id(t, lane)));
            }
        }
    }

    #[test]
    fn complex_normal_variance() {
        let mut r = stream(1, 0, 0);
        let n = 200_000;
        let (mut re2, mut im2) = (0.0, 0.0);
        for _ in 0..n {
            let z = complex_normal(&mut r, 0.5);
            re2 += z.re * z.re;
            im2 += z.im * z.im;
        }
        assert!((re2 / n as f64 - 0.25).abs() < 0.005);
        assert!((im2 / n as f64 - 0.25).abs() < 0.005);
    }

    #[test]
    fn scheme_round_trip() {
        for s in [Scheme::EulerMaruyama, Scheme::Midpoint] {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert!("rk4".parse::<Scheme>().is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(NoiseSpec::default().validate().is_ok());
        assert!(NoiseSpec::new(1, 1, 256).validate().is_err());
        assert!(NoiseSpec::new(1, 10, 8).validate().is_err());
    }
}
