//! Bracketed bisection for the monotone root equations behind every bound.

/// Absolute residual at which a root is accepted.
pub const RESIDUAL_TOL: f64 = 1e-12;
/// Iteration cap for the bisection phase.
pub const MAX_ITERATIONS: u32 = 200;

/// Root of one of the tail-bound equations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailSolution {
    /// The root (γ, γ̂, δ, δ̂, Δ or Δ̂).
    pub value: f64,
    /// Residual within [`RESIDUAL_TOL`], or the bracket shrank to
    /// neighbouring floats.
    pub converged: bool,
    pub iterations: u32,
    /// Equation residual at `value`.
    pub residual: f64,
    /// `value` sits on a domain boundary (zero or the cap) because the
    /// equation has no interior root; `residual` is then the boundary value.
    pub clamped: bool,
}

impl TailSolution {
    pub(crate) fn boundary(value: f64, residual: f64) -> Self {
        TailSolution {
            value,
            converged: true,
            iterations: 0,
            residual,
            clamped: true,
        }
    }
}

/// Outcome of a bracketed search on `[0, cap]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Bracketed {
    Root(TailSolution),
    /// `f` keeps the sign it has at zero all the way to the cap.
    NoSignChange { residual_at_cap: f64 },
}

/// Finds the root of a function that changes sign exactly once on
/// `(0, cap]`, starting from the bracket `[1e-15, 1]` and doubling the upper
/// end until the sign flips or the cap is reached.
///
/// The caller handles the value at zero; this routine assumes `f(0)` and
/// `f(cap)` are meant to differ in sign.
///
/// A root also counts as converged when the bracket collapses onto
/// neighbouring floats. For counts around 1e11 and up the residual cannot
/// resolve below about 1e-11, so the residual test alone would never pass
/// even though the root is pinned to machine precision.
pub(crate) fn bisect<F: FnMut(f64) -> f64>(mut f: F, cap: f64) -> Bracketed {
    let mut lo = 1e-15_f64.min(cap);
    let f_lo = f(lo);
    let sign_lo = f_lo > 0.0;
    if f_lo == 0.0 {
        return Bracketed::Root(TailSolution {
            value: lo,
            converged: true,
            iterations: 0,
            residual: 0.0,
            clamped: false,
        });
    }

    let mut hi = 1.0_f64.min(cap);
    let mut f_hi = f(hi);
    let mut iterations = 0u32;
    while (f_hi > 0.0) == sign_lo && f_hi != 0.0 {
        if hi >= cap {
            return Bracketed::NoSignChange { residual_at_cap: f_hi };
        }
        lo = hi;
        hi = (2.0 * hi).min(cap);
        f_hi = f(hi);
        iterations += 1;
    }

    let mut best = (hi, f_hi);
    let mut collapsed = false;
    if f_hi == 0.0 {
        return Bracketed::Root(TailSolution {
            value: hi,
            converged: true,
            iterations,
            residual: 0.0,
            clamped: false,
        });
    }
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            collapsed = true;
            break;
        }
        let f_mid = f(mid);
        iterations += 1;
        if libm::fabs(f_mid) < libm::fabs(best.1) {
            best = (mid, f_mid);
        }
        if libm::fabs(f_mid) <= RESIDUAL_TOL {
            break;
        }
        if (f_mid > 0.0) == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Bracketed::Root(TailSolution {
        value: best.0,
        converged: collapsed || libm::fabs(best.1) <= RESIDUAL_TOL,
        iterations,
        residual: best.1,
        clamped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        match bisect(|x| 2.0 - x * x, 10.0) {
            Bracketed::Root(s) => {
                assert!(s.converged);
                assert!(libm::fabs(s.value - core::f64::consts::SQRT_2) < 1e-12);
                assert!(libm::fabs(s.residual) <= RESIDUAL_TOL);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn expands_bracket() {
        match bisect(|x| 1000.0 - x, 1e6) {
            Bracketed::Root(s) => assert!(libm::fabs(s.value - 1000.0) < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reports_missing_sign_change() {
        assert_eq!(
            bisect(|x| 5.0 - x, 2.0),
            Bracketed::NoSignChange { residual_at_cap: 3.0 }
        );
    }
}
