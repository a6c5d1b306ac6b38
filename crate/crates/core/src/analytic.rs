//! Closed-form squeezing predictions.
//!
//! These are the small-angle, mean-intensity-loss approximations of the QND
//! scheme. They serve both as fast models for sweeps and the optimizer and as
//! oracles for the stochastic simulators.

use std::f64::consts::LN_10;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::phys::{decay_factor, mean_decay_factor, DerivedCouplings, PhysicalConfig};

/// Largest exponent accepted before an overflow error is raised.
pub const MAX_EXPONENT: f64 = 700.0;

/// Moments of the combined signal predicted by the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticPrediction {
    pub xi: f64,
    pub var_s2: f64,
    pub var_jz: f64,
    pub var_sb: f64,
    pub cov_jz_sb: f64,
    pub mean_jx: f64,
    pub mean_na1: f64,
    pub gain: f64,
    pub eps_tau: f64,
}

fn checked_exp(x: f64, what: &str) -> Result<f64> {
    if x > MAX_EXPONENT {
        Err(Error::Overflow(format!("{what}: exponent {x:e} exceeds {MAX_EXPONENT}")))
    } else {
        Ok(x.exp())
    }
}

/// Single-mode model: `xi = exp(u) / sqrt(1 + 2 u N_a)` with
/// `u = chi_sm^2 N_ph t^2`.
pub fn xi_single_mode(chi_sm: f64, n_ph: f64, n_atoms: f64, t: f64) -> Result<f64> {
    let u = chi_sm * chi_sm * n_ph * t * t;
    Ok(checked_exp(u, "single-mode xi")? / (1.0 + 2.0 * u * n_atoms).sqrt())
}

/// Free-space prediction without spontaneous emission.
pub fn xi_no_spont(chi_ns: f64, n_ph: f64, n_atoms: f64) -> Result<AnalyticPrediction> {
    let nu = chi_ns * chi_ns * n_ph;
    let growth = checked_exp(nu, "no-emission xi")?;
    let var_jz = 0.25 * n_atoms;
    let var_sb = 2.0 + 4.0 * nu * n_atoms;
    let cov = chi_ns * n_atoms * n_ph.sqrt();
    // remaining fraction of Var(Jz) after subtracting the optical inference
    let residual = 0.5 / (nu * n_atoms + 0.5);
    Ok(AnalyticPrediction {
        xi: growth * residual.sqrt(),
        var_s2: var_jz * residual,
        var_jz,
        var_sb,
        cov_jz_sb: cov,
        mean_jx: 0.5 * n_atoms / growth,
        mean_na1: 0.5 * n_atoms,
        gain: cov / var_sb,
        eps_tau: 1.0,
    })
}

/// Free-space prediction with spontaneous emission and an optionally
/// phase-squeezed probe (`squeeze_r = 0` is coherent light).
pub fn xi_spont(
    couplings: &DerivedCouplings,
    n_ph: f64,
    n_atoms: f64,
    squeeze_r: f64,
) -> Result<AnalyticPrediction> {
    let lambda = couplings.chi2 * n_ph;
    let eps_bar = mean_decay_factor(lambda);
    // eps_bar >= eps keeps the numerator free of cancellation
    let excess = eps_bar - decay_factor(lambda);
    spont_prediction(couplings, n_ph, n_atoms, squeeze_r, eps_bar, excess)
}

/// Like [`xi_spont`] but with the probe phase noise averaged over the exact
/// survival statistics of each atom instead of the mean surviving fraction.
///
/// An atom that scatters at time `T` contributes `min(T, tau)^2` to the
/// phase variance, so `eps_bar` is replaced by
/// `m2 = E[min(T, tau)^2] / tau^2 = 2 (1 - e^-x (1 + x)) / x^2`, `x = 2 lambda`.
/// Since `m2 <= eps_bar` this never predicts less squeezing than [`xi_spont`].
/// The two agree to first order in `lambda`.
pub fn xi_spont_exact_loss(
    couplings: &DerivedCouplings,
    n_ph: f64,
    n_atoms: f64,
    squeeze_r: f64,
) -> Result<AnalyticPrediction> {
    let x = 2.0 * couplings.chi2 * n_ph;
    let (m2, excess) = if x < 1e-3 {
        let m2 = 1.0 - x * (2.0 / 3.0 - x * (0.25 - x * (1.0 / 15.0 - x / 72.0)));
        (m2, x * (1.0 / 3.0 - x * (0.25 - x * (0.1 - x / 36.0))))
    } else {
        let m2 = 2.0 * one_minus_exp_times_linear(x) / (x * x);
        (m2, m2 - (-x).exp())
    };
    spont_prediction(couplings, n_ph, n_atoms, squeeze_r, m2, excess)
}

/// Shared body of the emission models. `phase_weight` multiplies the atomic
/// phase noise in `Var(S_b)`; `excess = phase_weight - eps` is passed
/// separately so callers can avoid cancellation.
fn spont_prediction(
    couplings: &DerivedCouplings,
    n_ph: f64,
    n_atoms: f64,
    squeeze_r: f64,
    phase_weight: f64,
    excess: f64,
) -> Result<AnalyticPrediction> {
    let (chi1, chi2) = (couplings.chi1, couplings.chi2);
    let eps = decay_factor(chi2 * n_ph);
    let vac = (-2.0 * squeeze_r).exp();
    let p = chi1 * chi1 * n_ph * n_atoms;

    let var_jz = 0.25 * n_atoms * eps;
    let var_sb = 2.0 * vac + 4.0 * p * phase_weight;
    let cov = chi1 * n_ph.sqrt() * n_atoms * eps;
    let residual = (p * excess + 0.5 * vac) / (p * phase_weight + 0.5 * vac);
    let growth = checked_exp((chi1 * chi1 + chi2) * n_ph, "xi with emission")?;
    let jx_exponent = (chi1 * chi1 + 2.0 * chi2) * n_ph;
    Ok(AnalyticPrediction {
        xi: growth * residual.sqrt(),
        var_s2: var_jz * residual,
        var_jz,
        var_sb,
        cov_jz_sb: cov,
        mean_jx: 0.5 * n_atoms * (-jx_exponent).exp(),
        mean_na1: 0.5 * n_atoms * eps,
        gain: cov / var_sb,
        eps_tau: eps,
    })
}

/// Free-space prediction for a validated configuration. Without spontaneous
/// emission the couplings carry `chi2 = 0` and this reduces to
/// [`xi_no_spont`] with squeezed light allowed.
pub fn predict(cfg: &PhysicalConfig) -> Result<AnalyticPrediction> {
    if cfg.cavity.is_some() {
        return Err(Error::Config("no closed form for the cavity configuration".into()));
    }
    let c = cfg.couplings();
    xi_spont(&c, c.n_photons, cfg.n_atoms, cfg.squeeze_r)
}

/// `1 - exp(-x) (1 + x)` without cancellation at small `x`.
fn one_minus_exp_times_linear(x: f64) -> f64 {
    if x < 1e-3 {
        // x^2/2 - x^3/3 + x^4/8 - x^5/30
        x * x * (0.5 - x * (1.0 / 3.0 - x * (0.125 - x / 30.0)))
    } else {
        -(-x).exp_m1() - x * (-x).exp()
    }
}

/// Squeezing parameter in the dimensionless groups `mu`, `lambda`, `zeta`.
pub fn xi_dimensionless(mu: f64, lambda: f64, zeta: f64) -> Result<f64> {
    xi_dimensionless_squeezed(mu, lambda, zeta, 0.0)
}

/// [`xi_dimensionless`] for a probe whose phase quadrature variance is
/// `exp(-2 r)`.
pub fn xi_dimensionless_squeezed(mu: f64, lambda: f64, zeta: f64, squeeze_r: f64) -> Result<f64> {
    let vac = (-2.0 * squeeze_r).exp();
    let lost = -(-2.0 * lambda).exp_m1();
    let num = vac + zeta * one_minus_exp_times_linear(2.0 * lambda);
    let den = vac + zeta * lost;
    Ok(checked_exp(lambda * (1.0 + mu), "dimensionless xi")? * (num / den).sqrt())
}

/// Large-`zeta` limit of [`xi_dimensionless`] at `mu = 0`.
pub fn xi_dimensionless_saturated(lambda: f64) -> f64 {
    let x = 2.0 * lambda;
    lambda.exp() * (one_minus_exp_times_linear(x) / -(-x).exp_m1()).sqrt()
}

/// Gain minimizing `Var(Jz - G S_b)`.
pub fn optimal_gain(cov: f64, var_sb: f64) -> Result<f64> {
    if var_sb > 0.0 {
        Ok(cov / var_sb)
    } else {
        Err(Error::Domain(format!("Var(S_b) must be > 0, got {var_sb}")))
    }
}

/// `Var(Jz) - Cov^2 / Var(S_b)`, the variance left at the optimal gain.
pub fn residual_variance(var_jz: f64, cov: f64, var_sb: f64) -> Result<f64> {
    let g = optimal_gain(cov, var_sb)?;
    Ok(var_jz - g * cov)
}

/// Optical squeezing in dB relative to the coherent state, negative for
/// reduced phase noise.
pub fn squeezing_db(r: f64) -> f64 {
    -10.0 / LN_10 * r
}

/// Noise reduction in dB, `|squeezing_db(r)|`.
pub fn improvement_db(r: f64) -> f64 {
    squeezing_db(r).abs()
}

/// Squeezing factor yielding the given improvement in dB.
pub fn squeeze_r_from_db(improvement: f64) -> f64 {
    improvement.abs() * LN_10 / 10.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use crate::phys::{AtomSpecies, DerivedCouplings, PhysicalConfig};

    #[test]
    fn single_mode_values() {
        assert_eq!(xi_single_mode(1e-3, 0.0, 1e6, 1.0).unwrap(), 1.0);
        // u = 1/2 at N_ph = 1/(2 chi^2 t^2)
        let chi = 2e-4;
        let t = 3.0;
        let nph = 1.0 / (2.0 * chi * chi * t * t);
        let xi = xi_single_mode(chi, nph, 1e6, t).unwrap();
        assert_relative_eq!(xi, (std::f64::consts::E / (1e6 + 1.0)).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(xi, 1.648_720_446_340_111e-3, max_relative = 1e-12);
        // u = 0.1, N_a = 100: 0.24116806609264260
        let xi = xi_single_mode(1.0, 0.1, 100.0, 1.0).unwrap();
        assert_relative_eq!(xi, 0.241_168_066_092_642_6, max_relative = 1e-13);
    }

    #[test]
    fn no_spont_identity_case() {
        let p = xi_no_spont(1e-7, 0.0, 1e6).unwrap();
        assert_eq!(p.xi, 1.0);
        assert_eq!(p.var_sb, 2.0);
        assert_eq!(p.cov_jz_sb, 0.0);
        assert_eq!(p.gain, 0.0);
        assert_eq!(p.mean_jx, 5e5);
    }

    #[test]
    fn no_spont_values() {
        let chi = 1e-6;
        let p = xi_no_spont(chi, 0.5 / (chi * chi), 1e6).unwrap();
        assert_relative_eq!(p.xi * p.xi, std::f64::consts::E / (1e6 + 1.0), max_relative = 1e-12);
        // nu = 0.2, N_a = 1e4: 0.019309659724362051
        let p = xi_no_spont(chi, 0.2 / (chi * chi), 1e4).unwrap();
        assert_relative_eq!(p.xi, 0.019_309_659_724_362_05, max_relative = 1e-12);
    }

    #[test]
    fn no_spont_gain_reproduces_residual() {
        let chi = 2.767_639_684_306_221e-7;
        let p = xi_no_spont(chi, 0.5 / (chi * chi), 1e6).unwrap();
        let g = optimal_gain(p.cov_jz_sb, p.var_sb).unwrap();
        let v = residual_variance(p.var_jz, p.cov_jz_sb, p.var_sb).unwrap();
        assert_relative_eq!(g, p.gain, max_relative = 1e-15);
        // subtraction loses ~6 digits at nu N_a = 5e5
        assert_relative_eq!(v, p.var_s2, max_relative = 1e-9);
        let xi = (1e6f64).sqrt() * p.var_s2.sqrt() / p.mean_jx;
        assert_relative_eq!(xi, p.xi, max_relative = 1e-12);
    }

    #[test]
    fn gain_arithmetic() {
        assert_eq!(optimal_gain(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(optimal_gain(1.0, 2.0).unwrap(), 0.5);
        assert_eq!(residual_variance(1.0, 1.0, 2.0).unwrap(), 0.5);
        assert!(optimal_gain(1.0, 0.0).is_err());
        assert!(optimal_gain(1.0, -1.0).is_err());
    }

    #[test]
    fn decay_values() {
        // lambda = 0.25
        assert_relative_eq!(decay_factor(0.25), 0.606_530_659_712_633_4, max_relative = 1e-14);
        assert_relative_eq!(mean_decay_factor(0.25), 0.786_938_680_574_733_2, max_relative = 1e-14);
    }

    #[test]
    fn db_conversions() {
        assert_eq!(squeezing_db(0.0), 0.0);
        assert_relative_eq!(squeezing_db(LN_10), -10.0, max_relative = 1e-15);
        assert_relative_eq!(improvement_db(LN_10), 10.0, max_relative = 1e-15);
        assert_relative_eq!(squeezing_db(0.5), -2.171_472_409_516_259, max_relative = 1e-14);
        assert_relative_eq!(squeeze_r_from_db(10.0), LN_10, max_relative = 1e-15);
    }

    fn rb_couplings(area: f64, n_atoms: f64) -> DerivedCouplings {
        PhysicalConfig::free_space(AtomSpecies::rb87(), area, 1e11, n_atoms, 0.0, 1.0).couplings()
    }

    #[test]
    fn large_area_never_squeezes() {
        let c = rb_couplings(1e-6, 1e6);
        // up to lambda ~ 17
        for k in 0..190 {
            let nph = 10f64.powf(6.0 + 0.05 * k as f64);
            let p = xi_spont(&c, nph, 1e6, 0.0).unwrap();
            assert!(p.xi >= 1.0, "xi = {} at N_ph = {nph:e}", p.xi);
        }
    }

    #[test]
    fn dimensionless_matches_dimensional() {
        let mu = 1e-3;
        let zeta = 1e3;
        let lambda = 0.3;
        let xi_d = xi_dimensionless(mu, lambda, zeta).unwrap();
        // chi2 chosen freely; chi1 = sqrt(mu chi2), N_ph = lambda/chi2, N_a = zeta/mu
        let chi2 = 1e-9;
        let c = DerivedCouplings {
            chi1: (mu * chi2).sqrt(),
            chi2,
            ..DerivedCouplings::from_parts(1.0, 1.0, 1.0, 1.0, 0.0)
        };
        let p = xi_spont(&c, lambda / chi2, zeta / mu, 0.0).unwrap();
        assert_relative_eq!(xi_d, p.xi, max_relative = 1e-6);
        assert_eq!(xi_dimensionless(mu, 0.0, zeta).unwrap(), 1.0);
    }

    #[test]
    fn dimensionless_saturates() {
        for &lambda in &[0.01, 0.3, 1.5] {
            let big = xi_dimensionless(0.0, lambda, 1e15).unwrap();
            assert_relative_eq!(big, xi_dimensionless_saturated(lambda), max_relative = 1e-6);
        }
        // explicit form e^l (1 - 2 l e^{-2l} / (1 - e^{-2l}))^{1/2} at lambda = 0.3
        let l: f64 = 0.3;
        let e2 = (-2.0 * l).exp();
        let direct = l.exp() * (1.0 - 2.0 * l * e2 / (1.0 - e2)).sqrt();
        assert_relative_eq!(xi_dimensionless_saturated(l), direct, max_relative = 1e-12);
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(xi_no_spont(1.0, 800.0, 10.0), Err(Error::Overflow(_))));
        assert!(xi_dimensionless(0.0, 701.0, 1.0).is_err());
    }

    #[test]
    fn no_spont_minimum_on_dense_grid() {
        // argmin over nu of exp(2 nu)/(1 + 2 nu N_a) sits at (N_a - 1)/(2 N_a)
        let na = 50.0;
        let chi = 1e-3;
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for k in 1..=100_000 {
            let nu = k as f64 * 1e-5;
            let xi = xi_no_spont(chi, nu / (chi * chi), na).unwrap().xi;
            if xi < best {
                best = xi;
                arg = nu;
            }
        }
        assert!((arg - (na - 1.0) / (2.0 * na)).abs() <= 1e-5);
    }

    #[test]
    fn exact_loss_hand_values() {
        // zeta = 14.5, lambda = 0.177 at A = 1e-10, N_a = 1e4
        let c = rb_couplings(1e-10, 1e4);
        let nph = 0.177 / c.chi2;
        let mean_intensity = xi_spont(&c, nph, 1e4, 0.0).unwrap();
        let exact = xi_spont_exact_loss(&c, nph, 1e4, 0.0).unwrap();
        assert!(exact.xi < mean_intensity.xi);
        assert!((exact.xi / mean_intensity.xi - 1.0).abs() < 0.08, "{} {}", exact.xi, mean_intensity.xi);
        assert_eq!(exact.var_jz, mean_intensity.var_jz);
        assert_eq!(exact.cov_jz_sb, mean_intensity.cov_jz_sb);
        // series and closed branches meet
        let x = 1e-3;
        let closed = 2.0 * one_minus_exp_times_linear(x) / (x * x) - (-x).exp();
        let series = x * (1.0 / 3.0 - x * (0.25 - x * (0.1 - x / 36.0)));
        assert_relative_eq!(closed, series, max_relative = 1e-9);
    }

    proptest! {
        #[test]
        fn exact_loss_bounds(log_area in -12.0f64..-8.0, log_lambda in -8.0f64..1.0, na in 10.0f64..1e7) {
            let c = rb_couplings(10f64.powf(log_area), na);
            let nph = 10f64.powf(log_lambda) / c.chi2;
            let mean_intensity = xi_spont(&c, nph, na, 0.0).unwrap();
            let exact = xi_spont_exact_loss(&c, nph, na, 0.0).unwrap();
            prop_assert!(exact.xi <= mean_intensity.xi * (1.0 + 1e-12));
            prop_assert!(exact.var_s2 >= 0.0 && exact.var_s2 <= exact.var_jz);
            let lossless = DerivedCouplings::from_parts(c.chi1 * crate::phys::C_LIGHT * 1e3, 1e3, 0.0, na, nph);
            let a = xi_spont(&lossless, nph, na, 0.0).unwrap().xi;
            let b = xi_spont_exact_loss(&lossless, nph, na, 0.0).unwrap().xi;
            prop_assert!((a / b - 1.0).abs() < 1e-12);
        }

        #[test]
        fn reduction_chain(chi in 1e-8f64..1e-4, log_nu in -6.0f64..1.5, na in 2.0f64..1e7) {
            let nph = 10f64.powf(log_nu) / (chi * chi);
            let ns = xi_no_spont(chi, nph, na).unwrap();
            let lossless = DerivedCouplings::from_parts(chi * 1e3 * crate::phys::C_LIGHT, 1e3, 0.0, na, nph);
            let se = xi_spont(&lossless, nph, na, 0.0).unwrap();
            prop_assert!((se.xi / ns.xi - 1.0).abs() < 1e-10);
            prop_assert!((se.var_sb / ns.var_sb - 1.0).abs() < 1e-10);
            let t = 2.0;
            let sm = xi_single_mode(chi / t, nph, na, t).unwrap();
            prop_assert!((sm / ns.xi - 1.0).abs() < 1e-10);
        }

        #[test]
        fn residual_below_atomic_variance(log_area in -12.0f64..-6.0, log_nph in 4.0f64..16.0, r in 0.0f64..3.0) {
            let c = rb_couplings(10f64.powf(log_area), 1e6);
            let nph = 10f64.powf(log_nph);
            prop_assume!(c.chi2 * nph < 50.0);
            let p = xi_spont(&c, nph, 1e6, r).unwrap();
            prop_assert!(p.var_s2 >= 0.0);
            prop_assert!(p.var_s2 <= p.var_jz);
            let v = p.var_jz - p.cov_jz_sb * p.cov_jz_sb / p.var_sb;
            prop_assert!((v - p.var_s2).abs() <= 1e-9 * p.var_jz);
        }

        #[test]
        fn depends_only_on_photon_number(k in 0.01f64..100.0, log_flux in 10.0f64..16.0) {
            let base = PhysicalConfig::free_space(AtomSpecies::rb87(), 1e-9, 1e11, 1e6, 10f64.powf(log_flux), 1e-3);
            let mut scaled = base.clone();
            scaled.photon_flux *= k;
            scaled.interaction_time /= k;
            let a = xi_spont(&base.couplings(), base.n_photons(), 1e6, 0.0).unwrap().xi;
            let b = xi_spont(&scaled.couplings(), scaled.n_photons(), 1e6, 0.0).unwrap().xi;
            prop_assert!((a / b - 1.0).abs() < 1e-12);
        }
    }
}
