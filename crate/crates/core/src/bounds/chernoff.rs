//! Multiplicative Chernoff bounds for sums of independent Bernoulli
//! variables, in both directions: expected value to observed value (δ, δ̂)
//! and observed value to expected value (Δ, Δ̂).
//!
//! Every residual is written through `bd0` so that the small-deviation
//! regime, where `(1+δ)ln(1+δ) - δ` nearly cancels, keeps full precision.

use crate::error::{Error, Result};
use crate::roots::{bisect, Bracketed, TailSolution};
use crate::special::bd0_diff;

/// Largest root the bracket expansion will look for.
const GAP_CAP: f64 = 1e300;

fn check_eps(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain("failure probability must lie in (0, 1)"));
    }
    Ok(-libm::log(eps))
}

fn solve(f: impl FnMut(f64) -> f64, cap: f64) -> TailSolution {
    match bisect(f, cap) {
        Bracketed::Root(sol) => sol,
        Bracketed::NoSignChange { residual_at_cap } => TailSolution {
            value: cap,
            converged: false,
            iterations: 0,
            residual: residual_at_cap,
            clamped: true,
        },
    }
}

/// `(1+t) ln(1+t) - t`, switching to a cancellation-free form for large `t`.
fn upper_rate(t: f64) -> f64 {
    if t > 1.0 {
        (1.0 + t) * libm::log1p(t) - t
    } else {
        bd0_diff(1.0 + t, 1.0, t)
    }
}

/// `t - ln(1+t)` for `t ≥ 0`.
fn lower_rate(t: f64) -> f64 {
    if t > 1.0 {
        t - libm::log1p(t)
    } else {
        bd0_diff(1.0, 1.0 + t, -t)
    }
}

/// Residual `μ[δ - (1+δ)ln(1+δ)] - ln ε`.
pub fn chernoff_upper_residual(mu: f64, eps: f64, delta: f64) -> f64 {
    -mu * upper_rate(delta) - libm::log(eps)
}

/// Residual `μ[δ̂ + (1-δ̂)ln(1-δ̂)] + ln ε`.
pub fn chernoff_lower_residual(mu: f64, eps: f64, delta: f64) -> f64 {
    mu * bd0_diff(1.0 - delta, 1.0, -delta) + libm::log(eps)
}

/// Root δ of `μ[δ - (1+δ)ln(1+δ)] - ln ε = 0`, so that
/// `Pr[X ≥ (1+δ)μ] < ε` for a Bernoulli sum with mean `μ`.
pub fn chernoff_delta_upper(mu: f64, eps: f64) -> Result<TailSolution> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Domain("Chernoff mean must be positive"));
    }
    check_eps(eps)?;
    Ok(solve(|d| chernoff_upper_residual(mu, eps, d), GAP_CAP))
}

/// Root δ̂ in `(0, 1]` of `μ[δ̂ + (1-δ̂)ln(1-δ̂)] + ln ε = 0`, so that
/// `Pr[X ≤ (1-δ̂)μ] < ε`. Returns `δ̂ = 1` when the mean is too small for
/// any nontrivial lower bound.
pub fn chernoff_delta_lower(mu: f64, eps: f64) -> Result<TailSolution> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Domain("Chernoff mean must be positive"));
    }
    let ln_inv = check_eps(eps)?;
    let f = |d: f64| chernoff_lower_residual(mu, eps, d);
    if mu <= ln_inv {
        return Ok(TailSolution::boundary(1.0, f(1.0)));
    }
    Ok(match bisect(f, 1.0) {
        Bracketed::Root(sol) => sol,
        Bracketed::NoSignChange { residual_at_cap } => TailSolution::boundary(1.0, residual_at_cap),
    })
}

/// Residual `Δ - (x+Δ)ln((x+Δ)/x) - ln ε` of the lower expected-value bound.
pub fn expected_lower_residual(x: f64, eps: f64, gap: f64) -> f64 {
    if x == 0.0 {
        return -libm::log(eps);
    }
    -x * upper_rate(gap / x) - libm::log(eps)
}

/// Residual `Δ̂ + x ln(x/(x+Δ̂)) + ln ε` of the upper expected-value bound.
pub fn expected_upper_residual(x: f64, eps: f64, gap: f64) -> f64 {
    if x == 0.0 {
        return gap + libm::log(eps);
    }
    x * lower_rate(gap / x) + libm::log(eps)
}

fn check_count(x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain("observed count must be a finite nonnegative number"));
    }
    Ok(())
}

/// Gap Δ with `μ ≥ x - Δ` except with probability ε.
pub fn expected_lower_gap(x: f64, eps: f64) -> Result<TailSolution> {
    check_count(x)?;
    check_eps(eps)?;
    if x == 0.0 {
        return Ok(TailSolution::boundary(0.0, 0.0));
    }
    Ok(solve(|g| expected_lower_residual(x, eps, g), GAP_CAP))
}

/// Gap Δ̂ with `μ ≤ x + Δ̂` except with probability ε.
pub fn expected_upper_gap(x: f64, eps: f64) -> Result<TailSolution> {
    check_count(x)?;
    let ln_inv = check_eps(eps)?;
    if x == 0.0 {
        return Ok(TailSolution {
            value: ln_inv,
            converged: true,
            iterations: 0,
            residual: 0.0,
            clamped: false,
        });
    }
    Ok(solve(|g| expected_upper_residual(x, eps, g), GAP_CAP))
}

/// Lower bound `max(0, x - Δ)` on the expectation of a Bernoulli sum
/// observed at `x`.
///
/// ```
/// use tfqkd_core::bounds::expected_lower;
/// assert_eq!(expected_lower(59.0, 1e-10).unwrap(), 0.0);
/// assert!(expected_lower(60.0, 1e-10).unwrap() > 0.0);
/// ```
pub fn expected_lower(x: f64, eps: f64) -> Result<f64> {
    let gap = expected_lower_gap(x, eps)?;
    Ok((x - gap.value).max(0.0))
}

/// Upper bound `x + Δ̂` on the expectation of a Bernoulli sum observed at `x`.
pub fn expected_upper(x: f64, eps: f64) -> Result<f64> {
    Ok(x + expected_upper_gap(x, eps)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::RESIDUAL_TOL;

    #[test]
    fn upper_delta_vanishes_as_eps_goes_to_one() {
        let d = chernoff_delta_upper(100.0, 1.0 - 1e-12).unwrap();
        assert!(d.value < 1e-6, "{}", d.value);
        let d = chernoff_delta_upper(100.0, 0.5).unwrap();
        assert!(d.value < 0.2);
    }

    #[test]
    fn upper_delta_shrinks_with_mean() {
        let small = chernoff_delta_upper(10.0, 1e-3).unwrap().value;
        let large = chernoff_delta_upper(100.0, 1e-3).unwrap().value;
        assert!(small > large);
    }

    #[test]
    fn lower_delta_boundary_at_ln_inverse_eps() {
        let mu = -libm::log(1e-10);
        let d = chernoff_delta_lower(mu, 1e-10).unwrap();
        assert_eq!(d.value, 1.0);
        assert!(libm::fabs(d.residual) < 1e-12);
    }

    #[test]
    fn lower_delta_large_mean() {
        let d = chernoff_delta_lower(1e6, 1e-10).unwrap();
        assert!(d.converged && d.value < 0.01);
    }

    #[test]
    fn residuals_are_tight() {
        for &mu in &[1e-3, 1.0, 37.0, 1e4, 1e9] {
            let d = chernoff_delta_upper(mu, 1e-10).unwrap();
            assert!(d.converged, "mu={mu} {d:?}");
            assert!(libm::fabs(d.residual) <= RESIDUAL_TOL);
        }
        for &x in &[1e-6, 0.5, 60.0, 1e4, 1e12] {
            let lo = expected_lower_gap(x, 1e-10).unwrap();
            let hi = expected_upper_gap(x, 1e-10).unwrap();
            assert!(lo.converged && hi.converged, "x={x}");
            assert!(libm::fabs(lo.residual) <= RESIDUAL_TOL);
            assert!(libm::fabs(hi.residual) <= RESIDUAL_TOL);
        }
    }

    #[test]
    fn expected_bounds_at_zero() {
        assert_eq!(expected_lower(0.0, 0.3).unwrap(), 0.0);
        let up = expected_upper(0.0, 1e-10).unwrap();
        assert!(libm::fabs(up - 23.025_850_929_940_457) < 1e-12);
    }

    #[test]
    fn lower_threshold_at_sixty() {
        for x in 0..=59 {
            assert_eq!(expected_lower(f64::from(x), 1e-10).unwrap(), 0.0, "x={x}");
        }
        assert!(expected_lower(60.0, 1e-10).unwrap() > 0.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(chernoff_delta_upper(0.0, 0.1).is_err());
        assert!(chernoff_delta_lower(1.0, 0.0).is_err());
        assert!(expected_upper(-1.0, 0.1).is_err());
    }
}
