//! Earlier observed-to-expected bounds kept for comparison: a
//! central-limit (Gaussian) interval and a case-split Chernoff variant.

use crate::bounds::chernoff::{expected_lower, expected_upper};
use crate::error::{Error, Result};
use crate::roots::{bisect, Bracketed};
use crate::special::erfc;

/// Closed interval `[lower, upper]` bounding an expected value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    /// True when `other` lies inside `self`.
    pub fn contains(&self, other: &Interval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }
}

/// Interval from the tight Chernoff variant, `[max(0, x-Δ), x+Δ̂]`.
pub fn expected_interval(x: f64, eps: f64) -> Result<Interval> {
    Ok(Interval {
        lower: expected_lower(x, eps)?,
        upper: expected_upper(x, eps)?,
    })
}

/// Number of standard deviations `β` with one-sided Gaussian tail
/// `erfc(β/√2)/2 = tail_eps`.
pub fn gaussian_beta(tail_eps: f64) -> Result<f64> {
    if !(tail_eps > 0.0 && tail_eps < 0.5) {
        return Err(Error::Domain("Gaussian tail probability must lie in (0, 1/2)"));
    }
    let target = libm::log(tail_eps);
    let f = |b: f64| libm::log(0.5 * erfc(b / core::f64::consts::SQRT_2)) - target;
    match bisect(f, 40.0) {
        Bracketed::Root(sol) => Ok(sol.value),
        Bracketed::NoSignChange { .. } => Err(Error::Domain("Gaussian tail probability too small")),
    }
}

/// Gaussian interval `x ∓ β√x`, with the failure probability `eps` split
/// evenly between the two tails. The lower end is clamped at zero.
pub fn baseline_gaussian(x: f64, eps: f64) -> Result<Interval> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain("observed count must be a finite nonnegative number"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain("failure probability must lie in (0, 1)"));
    }
    let spread = gaussian_beta(0.5 * eps)? * libm::sqrt(x);
    Ok(Interval {
        lower: (x - spread).max(0.0),
        upper: x + spread,
    })
}

/// Case thresholds of the Chernoff-variant baseline when all of its failure
/// probabilities equal a single `ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurtyThresholds {
    /// Smallest count using the data-dependent upper deviation.
    pub upper_switch: f64,
    /// Smallest count using the `ln ε^{-3/2}` lower deviation.
    pub lower_main: f64,
    /// Smallest count with a nonzero lower bound.
    pub lower_fallback: f64,
}

/// Smallest nonnegative integer `x` with `x - sqrt(2 c x)` above `rhs`
/// (`≥` when `inclusive`, `>` otherwise).
fn first_count_above(c: f64, rhs: f64, inclusive: bool) -> f64 {
    let pass = |x: f64| {
        let lhs = x - libm::sqrt(2.0 * c * x);
        if inclusive {
            lhs >= rhs
        } else {
            lhs > rhs
        }
    };
    // x - sqrt(2cx) = rhs is a quadratic in sqrt(x)
    let s = 0.5 * (libm::sqrt(2.0 * c) + libm::sqrt(2.0 * c + 4.0 * rhs));
    let mut x = libm::floor(s * s).max(0.0);
    while x > 0.0 && pass(x - 1.0) {
        x -= 1.0;
    }
    while !pass(x) {
        x += 1.0;
    }
    x
}

impl CurtyThresholds {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Domain("failure probability must lie in (0, 1)"));
        }
        let ln_inv = -libm::log(eps);
        let e = core::f64::consts::E;
        let r = 2.0 / (2.0 * e - 1.0);
        Ok(CurtyThresholds {
            upper_switch: first_count_above(
                1.5 * ln_inv,
                32.0 / 9.0 * libm::log(2.0 / eps),
                true,
            ),
            lower_main: first_count_above(1.5 * ln_inv, 3.0 * ln_inv, false),
            lower_fallback: first_count_above(2.0 * ln_inv, r * r * ln_inv, false),
        })
    }
}

/// Chernoff-variant baseline interval with all failure probabilities equal
/// to `eps`.
///
/// ```
/// let iv = tfqkd_core::bounds::baseline_curty(0.0, 1e-10).unwrap();
/// assert!((iv.upper - 196.264).abs() < 1e-2);
/// ```
pub fn baseline_curty(x: f64, eps: f64) -> Result<Interval> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain("observed count must be a finite nonnegative number"));
    }
    let t = CurtyThresholds::new(eps)?;
    let ln_inv = -libm::log(eps);
    let lower = if x >= t.lower_main {
        x - libm::sqrt(2.0 * x * 1.5 * ln_inv)
    } else if x >= t.lower_fallback {
        x - libm::sqrt(2.0 * x * 2.0 * ln_inv)
    } else {
        0.0
    };
    let up_log = libm::log(16.0) + 4.0 * ln_inv;
    let upper = if x >= t.upper_switch {
        x + libm::sqrt(2.0 * x * up_log)
    } else {
        x + libm::sqrt(2.0 * t.upper_switch * up_log)
    };
    Ok(Interval {
        lower: lower.max(0.0),
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sided_beta() {
        let b = gaussian_beta(1e-10).unwrap();
        assert!(libm::fabs(b - 6.3613) < 5e-5, "{b}");
    }

    #[test]
    fn gaussian_lower_threshold() {
        for x in 0..=41 {
            assert_eq!(baseline_gaussian(f64::from(x), 1e-10).unwrap().lower, 0.0);
        }
        assert!(baseline_gaussian(42.0, 1e-10).unwrap().lower > 0.0);
        assert_eq!(
            baseline_gaussian(0.0, 0.2).unwrap(),
            Interval { lower: 0.0, upper: 0.0 }
        );
    }

    #[test]
    fn curty_thresholds_at_standard_eps() {
        let t = CurtyThresholds::new(1e-10).unwrap();
        assert_eq!(t.upper_switch, 203.0);
        assert_eq!(t.lower_main, 181.0);
        assert_eq!(t.lower_fallback, 102.0);
    }

    #[test]
    fn curty_cases() {
        let ln_inv = -libm::log(1e-10);
        let at = baseline_curty(203.0, 1e-10).unwrap();
        let want = 203.0 - libm::sqrt(2.0 * 203.0 * 1.5 * ln_inv);
        assert!(libm::fabs(at.lower - want) < 1e-12);
        assert_eq!(baseline_curty(101.0, 1e-10).unwrap().lower, 0.0);
        assert!(baseline_curty(102.0, 1e-10).unwrap().lower > 0.0);
        assert!(libm::fabs(baseline_curty(0.0, 1e-10).unwrap().upper - 196.264) < 1e-2);
    }

    #[test]
    fn contains_is_inclusive() {
        let a = Interval { lower: 0.0, upper: 2.0 };
        assert!(a.contains(&a));
        assert!(!Interval { lower: 0.5, upper: 2.0 }.contains(&a));
    }
}
