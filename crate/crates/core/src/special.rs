//! Special functions used throughout the bounds and channel code.
//!
//! Everything here works on continuous arguments: binomial coefficients are
//! extended through `lnΓ`, and the saddle-point helpers (`stirlerr`, `bd0`)
//! follow Loader's formulation of the binomial density so that log-ratios of
//! huge binomial coefficients keep their absolute accuracy.

use core::f64::consts::{FRAC_2_SQRT_PI, LN_2, PI};

use crate::error::{Error, Result};

/// `ln(sqrt(2π))`.
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of the gamma function for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Natural log of the binomial coefficient `C(i, j)` extended to real `j`.
///
/// ```
/// let v = tfqkd_core::special::ln_binomial(4.0, 2.0).unwrap();
/// assert!((v - 6f64.ln()).abs() < 1e-12);
/// ```
pub fn ln_binomial(i: f64, j: f64) -> Result<f64> {
    if !(i >= 0.0) || !(j >= 0.0) || j > i || !i.is_finite() {
        return Err(Error::Domain("ln_binomial requires 0 <= j <= i"));
    }
    if j == 0.0 || j == i {
        return Ok(0.0);
    }
    Ok(ln_gamma(i + 1.0) - ln_gamma(j + 1.0) - ln_gamma(i - j + 1.0))
}

/// Error of Stirling's approximation:
/// `stirlerr(n) = lnΓ(n+1) - (n+1/2) ln n + n - ln sqrt(2π)`.
pub fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n <= 0.0 {
        return LN_SQRT_2PI;
    }
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * libm::log(n) + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        return (S0 - S1 / nn) / n;
    }
    if n > 80.0 {
        return (S0 - (S1 - S2 / nn) / nn) / n;
    }
    if n > 35.0 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// Deviance term `bd0(x, m) = x ln(x/m) + m - x`, accurate when `x ≈ m`.
///
/// Both arguments must be nonnegative and `m > 0`; `bd0(0, m) = m`.
pub fn bd0(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        return m;
    }
    bd0_diff(x, m, x - m)
}

/// `bd0(x, m)` with the difference `x - m` supplied exactly, for callers
/// that know it to more precision than `x - m` would give.
pub fn bd0_diff(x: f64, m: f64, diff: f64) -> f64 {
    if x == 0.0 {
        return m;
    }
    if libm::fabs(diff) < 0.1 * (x + m) {
        let v = diff / (x + m);
        let mut s = diff * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        let mut j = 1u32;
        loop {
            ej *= v2;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
            j += 1;
            if j > 1000 {
                return s;
            }
        }
    }
    x * libm::log(x / m) + m - x
}

/// Log of the binomial density at a real-valued success count `x`,
/// `ln[C(n, x) p^x q^(n-x)]`, with `q = 1 - p` passed explicitly.
pub fn ln_binomial_density(x: f64, n: f64, p: f64, q: f64) -> f64 {
    if x < 0.0 || x > n {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if x == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    if x == 0.0 {
        if n == 0.0 {
            return 0.0;
        }
        return if p < 0.1 {
            -bd0(n, n * q) - n * p
        } else {
            n * libm::log(q)
        };
    }
    if x == n {
        return if q < 0.1 {
            -bd0(n, n * p) - n * q
        } else {
            n * libm::log(p)
        };
    }
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q);
    let lf = libm::log(2.0 * PI) + libm::log(x) + libm::log1p(-x / n);
    lc - 0.5 * lf
}

/// Log of the hypergeometric weight
/// `C(k, j) C(n, a) / C(n + k, j + a)` for real-valued counts.
///
/// This is the probability that a random `k`-subset of a string of length
/// `n + k` holding `j + a` ones contains exactly `j` of them. Evaluated through
/// binomial densities at `p = (j + a)/(n + k)` so that the large `lnΓ` terms
/// cancel analytically rather than numerically.
pub fn ln_hypergeom_weight(k: f64, j: f64, n: f64, a: f64) -> f64 {
    if j < 0.0 || j > k || a < 0.0 || a > n {
        return f64::NEG_INFINITY;
    }
    let total = n + k;
    let ones = j + a;
    if ones <= 0.0 || ones >= total {
        return 0.0;
    }
    let p = ones / total;
    let q = (total - ones) / total;
    ln_binomial_density(j, k, p, q) + ln_binomial_density(a, n, p, q)
        - ln_binomial_density(ones, total, p, q)
}

/// Complementary error function, self-contained: power series for `|x| < 2`
/// and a Lentz continued fraction beyond.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        return 1.0 - erf_series(x);
    }
    if x > 27.3 {
        return 0.0;
    }
    libm::exp(-x * x) * erfc_continued_fraction(x) / libm::sqrt(PI)
}

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/sqrt(pi) * sum_n (-1)^n x^(2n+1) / (n! (2n+1))
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= -x2 / f64::from(n);
        let add = term / f64::from(2 * n + 1);
        sum += add;
        if libm::fabs(add) <= 1e-17 * libm::fabs(sum) || n > 200 {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// `K(x)` with `erfc(x) = exp(-x^2) K(x) / sqrt(pi)`,
/// `K = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`.
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500u32 {
        let a = 0.5 * f64::from(n);
        d = x + a * d;
        if d == 0.0 {
            d = TINY;
        }
        c = x + a / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if libm::fabs(delta - 1.0) < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Modified Bessel function of the first kind, order zero, by its power
/// series `sum_k (x^2/4)^k / (k!)^2`, stopped once a term drops below
/// `1e-16` of the running sum.
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0u32;
    loop {
        k += 1;
        let kf = f64::from(k);
        term *= q / (kf * kf);
        sum += term;
        if term <= 1e-16 * sum || k > 10_000 {
            return sum;
        }
    }
}

/// `I₀(x) - 1`, summed without forming `I₀(x)` first.
pub fn bessel_i0_minus_one(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = q;
    let mut sum = q;
    let mut k = 1u32;
    while term > 1e-17 * sum && k < 10_000 {
        k += 1;
        let kf = f64::from(k);
        term *= q / (kf * kf);
        sum += term;
    }
    sum
}

/// Poisson weight `e^{-a} a^n / n!`.
pub fn poisson(n: u32, a: f64) -> f64 {
    if a <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let nf = f64::from(n);
    libm::exp(-a + nf * libm::log(a) - ln_gamma(nf + 1.0))
}

/// Binary Shannon entropy in bits, `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain("binary entropy argument outside [0, 1]"));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-(x * libm::log(x) + (1.0 - x) * libm::log1p(-x)) / LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        libm::fabs(a - b) <= rel * libm::fabs(b).max(1e-300)
    }

    /// `lnΓ(x + m)` by summing `ln(x + i)` down to a known `lnΓ(x)`.
    fn ln_gamma_by_recurrence(base: f64, ln_gamma_base: f64, steps: u32) -> f64 {
        (0..steps).fold(ln_gamma_base, |acc, i| acc + libm::log(base + f64::from(i)))
    }

    #[test]
    fn ln_binomial_small_integers() {
        assert!(close(ln_binomial(4.0, 2.0).unwrap(), libm::log(6.0), 1e-14));
        assert_eq!(ln_binomial(17.0, 0.0).unwrap(), 0.0);
        assert_eq!(ln_binomial(0.0, 0.0).unwrap(), 0.0);
        assert!(close(ln_binomial(52.0, 5.0).unwrap(), libm::log(2_598_960.0), 1e-13));
    }

    #[test]
    fn ln_binomial_half_integer_matches_recurrence() {
        // lnΓ(1001) = sum ln i; lnΓ(138.5) and lnΓ(863.5) from Γ(1.5) = sqrt(pi)/2.
        let ln_g15 = libm::log(libm::sqrt(PI) / 2.0);
        let ln_fact_1000 = ln_gamma_by_recurrence(1.0, 0.0, 1000);
        let ln_g_138_5 = ln_gamma_by_recurrence(1.5, ln_g15, 137);
        let ln_g_863_5 = ln_gamma_by_recurrence(1.5, ln_g15, 862);
        let expected = ln_fact_1000 - ln_g_138_5 - ln_g_863_5;
        let got = ln_binomial(1000.0, 137.5).unwrap();
        assert!(close(got, expected, 1e-10), "{got} vs {expected}");
    }

    #[test]
    fn ln_binomial_rejects_out_of_range() {
        assert!(ln_binomial(3.0, -0.5).is_err());
        assert!(ln_binomial(3.0, 3.5).is_err());
        assert!(ln_binomial(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn hypergeom_weight_matches_lgamma_route() {
        for &(k, j, n, a) in &[
            (10.0, 3.0, 12.0, 5.0),
            (1000.0, 137.5, 2000.0, 400.25),
            (1e5, 1.5e4, 3e5, 4.6e4),
            (50.0, 0.0, 70.0, 3.0),
            (50.0, 50.0, 70.0, 0.0),
        ] {
            let direct = ln_binomial(k, j).unwrap() + ln_binomial(n, a).unwrap()
                - ln_binomial(n + k, j + a).unwrap();
            let loader = ln_hypergeom_weight(k, j, n, a);
            assert!(
                libm::fabs(direct - loader) < 1e-8 * libm::fabs(direct).max(1.0),
                "({k},{j},{n},{a}): {direct} vs {loader}"
            );
        }
    }

    #[test]
    fn hypergeom_weight_exact_split() {
        // C(10,5) C(10,5) / C(20,10)
        let expected = libm::log(252.0 * 252.0 / 184_756.0);
        assert!(close(ln_hypergeom_weight(10.0, 5.0, 10.0, 5.0), expected, 1e-13));
    }

    #[test]
    fn bd0_agrees_with_definition_away_from_diagonal() {
        for &(x, m) in &[(3.0, 7.0), (10.0, 1.0), (0.5, 4.0), (1.2, 1.0), (1.0, 1.05)] {
            let direct = x * libm::log(x / m) + m - x;
            assert!(libm::fabs(bd0(x, m) - direct) < 1e-13 * direct.max(1e-3));
        }
        assert_eq!(bd0(0.0, 2.5), 2.5);
    }

    #[test]
    fn stirlerr_matches_lgamma() {
        for &n in &[16.0, 40.0, 100.0, 600.0, 1e4] {
            let direct = ln_gamma(n + 1.0) - (n + 0.5) * libm::log(n) + n - LN_SQRT_2PI;
            assert!(libm::fabs(stirlerr(n) - direct) < 1e-11, "n={n}");
        }
    }

    #[test]
    fn erfc_against_libm() {
        for i in 0..=120 {
            let x = -2.0 + 0.1 * f64::from(i);
            let ours = erfc(x);
            let reference = libm::erfc(x);
            assert!(close(ours, reference, 1e-13), "x={x}: {ours} vs {reference}");
        }
        assert!(close(0.5 * erfc(6.3613 / core::f64::consts::SQRT_2), 1e-10, 1e-3));
    }

    #[test]
    fn bessel_i0_values() {
        assert_eq!(bessel_i0(0.0), 1.0);
        // I0(1) = 1.2660658777520082
        assert!(close(bessel_i0(1.0), 1.266_065_877_752_008_2, 1e-15));
        // I0(10) = 2815.716628466254
        assert!(close(bessel_i0(10.0), 2_815.716_628_466_254, 1e-14));
    }

    #[test]
    fn poisson_weights_sum_to_one() {
        let total: f64 = (0..80).map(|n| poisson(n, 7.5)).sum();
        assert!(close(total, 1.0, 1e-13));
        assert_eq!(poisson(0, 0.0), 1.0);
        assert_eq!(poisson(3, 0.0), 0.0);
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        let h = binary_entropy(0.02).unwrap();
        assert!(libm::fabs(h - 0.141_440_542_541_340_8) < 1e-12, "{h}");
        assert!(binary_entropy(1.01).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }
}
