//! Tail bounds for random sampling without replacement.
//!
//! A string of `n + k` bits is split by drawing `k` of them at random. Given
//! the fraction `λ_k` of ones seen in the sample, the functions here bound
//! the fraction `λ_n` of ones left in the remaining `n` bits.

use core::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::roots::{bisect, Bracketed, TailSolution};
use crate::special::{binary_entropy, ln_hypergeom_weight};

fn check_inputs(n: f64, k: f64, lambda_k: f64, eps: f64) -> Result<()> {
    if !(n >= 1.0) || !n.is_finite() {
        return Err(Error::Domain("remaining length n must be >= 1"));
    }
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::Domain("sample length k must be >= 1"));
    }
    if !(0.0..=1.0).contains(&lambda_k) {
        return Err(Error::Domain("observed fraction must lie in [0, 1]"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain("failure probability must lie in (0, 1)"));
    }
    Ok(())
}

/// Residual of the upper-tail equation
/// `ln C(k, kλ) + ln C(n, nλ + nγ) - ln C(n+k, (n+k)λ + nγ) - ln ε`.
pub fn sampling_upper_residual(n: f64, k: f64, lambda_k: f64, eps: f64, gamma: f64) -> f64 {
    ln_hypergeom_weight(k, k * lambda_k, n, n * (lambda_k + gamma)) - libm::log(eps)
}

/// Residual of the lower-tail equation
/// `ln C(k, kλ) + ln C(n, nλ - nγ̂) - ln C(n+k, (n+k)λ - nγ̂) - ln ε`.
pub fn sampling_lower_residual(n: f64, k: f64, lambda_k: f64, eps: f64, gamma: f64) -> f64 {
    ln_hypergeom_weight(k, k * lambda_k, n, n * (lambda_k - gamma)) - libm::log(eps)
}

/// Upper deviation γ with `Pr[λ_n ≥ λ_k + γ] ≤ ε`.
///
/// The root is capped at `1 - λ_k`: if the equation has no root below the
/// cap, the returned bound is the trivial `λ_n ≤ 1`.
pub fn sampling_gamma_upper(n: f64, k: f64, lambda_k: f64, eps: f64) -> Result<TailSolution> {
    check_inputs(n, k, lambda_k, eps)?;
    let cap = 1.0 - lambda_k;
    let f = |g: f64| sampling_upper_residual(n, k, lambda_k, eps, g);
    if cap <= 0.0 {
        return Ok(TailSolution::boundary(0.0, f(0.0)));
    }
    let at_zero = f(0.0);
    if at_zero <= 0.0 {
        return Ok(TailSolution::boundary(0.0, at_zero));
    }
    Ok(match bisect(f, cap) {
        Bracketed::Root(sol) => sol,
        Bracketed::NoSignChange { residual_at_cap } => TailSolution::boundary(cap, residual_at_cap),
    })
}

/// Lower deviation γ̂ with `Pr[λ_n ≤ λ_k - γ̂] ≤ ε`.
///
/// `None` means the equation has no root in `(0, λ_k]`; the lower bound on
/// `λ_n` is then zero.
pub fn sampling_gamma_lower(
    n: f64,
    k: f64,
    lambda_k: f64,
    eps: f64,
) -> Result<Option<TailSolution>> {
    check_inputs(n, k, lambda_k, eps)?;
    if lambda_k <= 0.0 {
        return Ok(None);
    }
    let f = |g: f64| sampling_lower_residual(n, k, lambda_k, eps, g);
    let at_zero = f(0.0);
    if at_zero <= 0.0 {
        return Ok(Some(TailSolution::boundary(0.0, at_zero)));
    }
    Ok(match bisect(f, lambda_k) {
        Bracketed::Root(sol) => Some(sol),
        Bracketed::NoSignChange { .. } => None,
    })
}

/// Lower bound `max(0, λ_k - γ̂)` on the remaining fraction.
pub fn remaining_fraction_lower(n: f64, k: f64, lambda_k: f64, eps: f64) -> Result<f64> {
    Ok(match sampling_gamma_lower(n, k, lambda_k, eps)? {
        Some(sol) => (lambda_k - sol.value).max(0.0),
        None => 0.0,
    })
}

fn entropy_log_term(a: f64, b: f64, c: f64, d: f64) -> f64 {
    // log2((a+b) / (a b c (1-c) d^2)), assembled in logs to avoid overflow
    (libm::log(a + b) - libm::log(a) - libm::log(b) - libm::log(c) - libm::log1p(-c)
        - 2.0 * libm::log(d))
        / LN_2
}

/// Baseline root of the Shannon-entropy form of the hypergeometric bound:
/// `h(c + aγ/(a+b)) - b/(a+b) h(c) - a/(a+b) h(c+γ) - log2(...)/(2(a+b)) = 0`
/// with `a = n`, `b = k`, `c = λ_k`, `d = ε`.
pub fn baseline_sampling_fung(n: f64, k: f64, lambda_k: f64, eps: f64) -> Result<TailSolution> {
    check_inputs(n, k, lambda_k, eps)?;
    if lambda_k <= 0.0 || lambda_k >= 1.0 {
        return Err(Error::Domain("entropy baseline requires 0 < λ_k < 1"));
    }
    let (a, b, c) = (n, k, lambda_k);
    let w_a = a / (a + b);
    let w_b = b / (a + b);
    let offset = entropy_log_term(a, b, c, eps) / (2.0 * (a + b));
    let h_c = binary_entropy(c)?;
    let f = |g: f64| {
        let mixed = binary_entropy((c + w_a * g).min(1.0)).unwrap_or(0.0);
        let moved = binary_entropy((c + g).min(1.0)).unwrap_or(0.0);
        mixed - w_b * h_c - w_a * moved - offset
    };
    let cap = 1.0 - c;
    let at_zero = f(0.0);
    if at_zero >= 0.0 {
        return Ok(TailSolution::boundary(0.0, at_zero));
    }
    Ok(match bisect(f, cap) {
        Bracketed::Root(sol) => sol,
        Bracketed::NoSignChange { residual_at_cap } => TailSolution::boundary(cap, residual_at_cap),
    })
}

/// Closed-form approximation of the entropy baseline,
/// `sqrt((a+b) c (1-c) / (a b ln 2) * log2((a+b)/(a b c (1-c) d^2)))`.
///
/// Fails with a domain error when the logarithm is not positive or when the
/// result leaves the feasible range `[0, 1 - c]`, which happens for short
/// strings where the expansion behind the formula does not hold.
pub fn baseline_sampling_analytic(n: f64, k: f64, lambda_k: f64, eps: f64) -> Result<f64> {
    check_inputs(n, k, lambda_k, eps)?;
    if lambda_k <= 0.0 || lambda_k >= 1.0 {
        return Err(Error::Domain("analytic baseline requires 0 < λ_k < 1"));
    }
    let (a, b, c) = (n, k, lambda_k);
    let log_term = entropy_log_term(a, b, c, eps);
    if !(log_term > 0.0) {
        return Err(Error::Domain("analytic baseline log argument is not above one"));
    }
    let gamma = libm::sqrt((a + b) * c * (1.0 - c) / (a * b * LN_2) * log_term);
    if gamma > 1.0 - c {
        return Err(Error::Domain("analytic baseline outside its range of validity"));
    }
    Ok(gamma)
}
