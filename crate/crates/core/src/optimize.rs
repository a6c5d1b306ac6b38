//! Minimization of the analytic squeezing parameter over the probe strength.

use serde::Serialize;

use crate::analytic::{xi_dimensionless_squeezed, xi_spont};
use crate::error::{Error, Result};
use crate::phys::{area_for_zeta, AtomSpecies, DerivedCouplings};

pub const LAMBDA_MIN: f64 = 1e-6;
pub const LAMBDA_MAX: f64 = 20.0;
const PRESCAN_POINTS: usize = 33;
const DENSE_POINTS: usize = 100_000;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub xi_min: f64,
    pub arg_lambda: f64,
    /// Optimal photon number per beam; `NaN` when no dimensional context was given.
    pub arg_nph: f64,
    pub zeta: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// Set when the coarse scan was not unimodal and a dense grid was used.
    pub fallback: bool,
}

/// Golden-section search of `f` on `[a, b]` until the bracket is narrower than
/// `tol`. Returns `(x_min, f(x_min), iterations)`.
pub fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut it = 0;
    while (b - a).abs() > tol && it < 500 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        it += 1;
    }
    let x = 0.5 * (a + b);
    let fx = f(x)?;
    let (x, fx) = [(c, fc), (d, fd), (x, fx)]
        .into_iter()
        .fold((x, fx), |best, p| if p.1 < best.1 { p } else { best });
    Ok((x, fx, it))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (la, lb) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
}

/// `(x_min, f_min, bracket, iterations, fallback)`
type LogMinimum = (f64, f64, (f64, f64), usize, bool);

/// Minimizes a function of `x > 0` on `[lo, hi]` by a log-spaced pre-scan and
/// golden-section refinement in `ln x`.
fn minimize_log<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<LogMinimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let xs: Vec<f64> = log_grid(lo, hi, PRESCAN_POINTS).collect();
    let ys = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let k = (0..ys.len()).fold(0, |k, i| if ys[i] < ys[k] { i } else { k });

    // unimodal: non-increasing up to k then non-decreasing
    let unimodal = ys[..=k].windows(2).all(|w| w[1] <= w[0]) && ys[k..].windows(2).all(|w| w[1] >= w[0]);
    if !unimodal {
        let (mut bx, mut by) = (xs[k], ys[k]);
        for x in log_grid(lo, hi, DENSE_POINTS) {
            let y = f(x)?;
            if y < by {
                bx = x;
                by = y;
            }
        }
        return Ok((bx, by, (lo, hi), DENSE_POINTS, true));
    }

    let a = xs[k.saturating_sub(1)];
    let b = xs[(k + 1).min(xs.len() - 1)];
    // relative tolerance in ln x equals an absolute one in x near the minimum
    let ltol = (tol / b).max(1e-12);
    let (lx, y, it) = golden_section(|l| f(l.exp()), a.ln(), b.ln(), ltol)?;
    let (x, y) = if ys[k] < y { (xs[k], ys[k]) } else { (lx.exp(), y) };
    Ok((x, y, (a, b), it, false))
}

/// Upper search bound, lowered where `exp(lambda (1 + mu))` would overflow.
fn lambda_ceiling(mu: f64) -> f64 {
    LAMBDA_MAX.min(600.0 / (1.0 + mu))
}

/// Minimum of the dimensionless squeezing parameter over `lambda` in
/// [`LAMBDA_MIN`, `LAMBDA_MAX`].
pub fn minimize_xi_over_lambda(mu: f64, zeta: f64) -> Result<OptimizationResult> {
    minimize_xi_over_lambda_squeezed(mu, zeta, 0.0)
}

pub fn minimize_xi_over_lambda_squeezed(mu: f64, zeta: f64, squeeze_r: f64) -> Result<OptimizationResult> {
    if !(mu >= 0.0 && zeta >= 0.0) {
        return Err(Error::Domain(format!("mu and zeta must be >= 0, got mu={mu} zeta={zeta}")));
    }
    if zeta == 0.0 {
        return Ok(OptimizationResult {
            xi_min: 1.0,
            arg_lambda: 0.0,
            arg_nph: f64::NAN,
            zeta,
            bracket: (0.0, 0.0),
            iterations: 0,
            fallback: false,
        });
    }
    let f = |l: f64| xi_dimensionless_squeezed(mu, l, zeta, squeeze_r);
    let (x, y, bracket, iterations, fallback) = minimize_log(f, LAMBDA_MIN, lambda_ceiling(mu), 1e-6)?;
    Ok(OptimizationResult {
        xi_min: y,
        arg_lambda: x,
        arg_nph: f64::NAN,
        zeta,
        bracket,
        iterations,
        fallback,
    })
}

/// Minimum of the dimensional free-space prediction over the photon number.
/// Works without spontaneous emission too, where `lambda` is identically zero.
pub fn minimize_xi_over_photons(couplings: &DerivedCouplings, squeeze_r: f64) -> Result<OptimizationResult> {
    let na = couplings.n_atoms;
    // photon scale where the measurement strength chi1^2 N_ph N_a is of order one
    let lo = 1e-4 / (couplings.chi1 * couplings.chi1 * na);
    let mut hi = 1e2 / (couplings.chi1 * couplings.chi1);
    if couplings.chi2 > 0.0 {
        hi = hi.min(LAMBDA_MAX / couplings.chi2);
    }
    if !(lo.is_finite() && hi > lo) {
        return Err(Error::Domain("no usable photon-number range for this coupling".into()));
    }
    let f = |n: f64| Ok(xi_spont(couplings, n, na, squeeze_r)?.xi);
    let (x, y, bracket, iterations, fallback) = minimize_log(f, lo, hi, 1e-9 * hi)?;
    Ok(OptimizationResult {
        xi_min: y,
        arg_lambda: couplings.chi2 * x,
        arg_nph: x,
        zeta: couplings.zeta,
        bracket,
        iterations,
        fallback,
    })
}

/// One point of the optimal-squeezing curve against the optical depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaPoint {
    pub zeta: f64,
    pub area: f64,
    pub result: OptimizationResult,
}

/// `xi_min` against `zeta` at fixed atom number, mapping each `zeta` back to
/// the probe area through the far-detuned `mu`. `chi2_at` converts an area
/// into the absorption coupling used to report the photon number.
pub fn min_xi_vs_zeta_curve(
    species: &AtomSpecies,
    n_atoms: f64,
    zetas: &[f64],
    squeeze_r: f64,
    chi2_at: impl Fn(f64) -> f64,
) -> Result<Vec<ZetaPoint>> {
    zetas
        .iter()
        .map(|&zeta| {
            let area = if zeta > 0.0 { area_for_zeta(species, zeta, n_atoms) } else { f64::INFINITY };
            let mu = zeta / n_atoms;
            let mut result = minimize_xi_over_lambda_squeezed(mu, zeta, squeeze_r)?;
            if zeta > 0.0 {
                result.arg_nph = result.arg_lambda / chi2_at(area);
            }
            Ok(ZetaPoint { zeta, area, result })
        })
        .collect()
}
