use proptest::prelude::*;
use tfqkd_core::bounds::{
    baseline_curty, baseline_gaussian, chernoff_delta_lower, chernoff_delta_upper,
    chernoff_lower_residual, chernoff_upper_residual, expected_lower, expected_upper,
    expected_upper_gap, gaussian_beta,
};
use tfqkd_core::oracle::check_chernoff;

/// Binomial(m, p) probability mass function in log space, by lgamma-free
/// summation of logs.
fn binomial_pmf(m: usize, p: f64) -> Vec<f64> {
    let mut lf = vec![0.0; m + 1];
    for i in 1..=m {
        lf[i] = lf[i - 1] + (i as f64).ln();
    }
    (0..=m)
        .map(|i| (lf[m] - lf[i] - lf[m - i] + i as f64 * p.ln() + (m - i) as f64 * (-p).ln_1p()).exp())
        .collect()
}

/// Poisson CDF `Pr[X ≤ x]` by recursion in log space.
fn poisson_cdf(x: usize, mean: f64) -> f64 {
    let mut ln_term = -mean;
    let mut terms = vec![ln_term];
    for i in 1..=x {
        ln_term += mean.ln() - (i as f64).ln();
        terms.push(ln_term);
    }
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top.exp() * terms.iter().map(|t| (t - top).exp()).sum::<f64>()
}

#[test]
fn upper_delta_against_binomial_1000() {
    let d = chernoff_delta_upper(100.0, 1e-10).unwrap().value;
    let pmf = binomial_pmf(1000, 0.1);
    let tail: f64 = pmf.iter().enumerate().filter(|(i, _)| *i as f64 > (1.0 + d) * 100.0).map(|(_, p)| p).sum();
    assert!(tail < 1e-10, "{tail}");
    let dl = chernoff_delta_lower(100.0, 1e-10).unwrap().value;
    let tail: f64 = pmf.iter().enumerate().filter(|(i, _)| (*i as f64) < (1.0 - dl) * 100.0).map(|(_, p)| p).sum();
    assert!(tail < 1e-10, "{tail}");
}

#[test]
fn deltas_valid_on_grid() {
    for &mu in &[1.0, 10.0, 100.0, 1e3] {
        for &eps in &[1e-2, 1e-6, 1e-10] {
            let c = check_chernoff(mu, eps, 10_000).unwrap();
            assert!(c.passed(), "{c:?}");
        }
    }
}

#[test]
fn delta_shapes() {
    assert!(chernoff_delta_upper(10.0, 1e-3).unwrap().value > chernoff_delta_upper(100.0, 1e-3).unwrap().value);
    assert!(chernoff_delta_upper(100.0, 1.0 - 1e-12).unwrap().value < 1e-4);
    assert_eq!(chernoff_delta_lower(1e10f64.ln(), 1e-10).unwrap().value, 1.0);
    assert!(chernoff_delta_lower(23.0259, 1e-10).unwrap().value > 0.99);
    assert!(chernoff_delta_lower(1e6, 1e-10).unwrap().value < 0.01);
    let d = chernoff_delta_upper(1e9, 1e-10).unwrap();
    assert!(chernoff_upper_residual(1e9, 1e-10, d.value).abs() <= 1e-12);
    let d = chernoff_delta_lower(1e9, 1e-10).unwrap();
    assert!(chernoff_lower_residual(1e9, 1e-10, d.value).abs() <= 1e-12);
}

#[test]
fn pinned_values() {
    assert!((expected_upper(0.0, 1e-10).unwrap() - 23.0259).abs() < 1e-3);
    assert!((baseline_curty(0.0, 1e-10).unwrap().upper - 196.264).abs() < 1e-2);
    assert!((gaussian_beta(1e-10).unwrap() - 6.3613).abs() < 1e-3);
    assert_eq!(baseline_gaussian(0.0, 1e-10).unwrap().upper, 0.0);
    let at203 = baseline_curty(203.0, 1e-10).unwrap().lower;
    let want = 203.0 - (2.0 * 203.0 * 1.5 * 1e10f64.ln()).sqrt();
    assert!((at203 - want).abs() < 1e-9);
}

#[test]
fn first_positive_lower_bounds() {
    let first = |f: &dyn Fn(f64) -> f64| (0..1000).find(|&x| f(x as f64) > 0.0).unwrap();
    assert_eq!(first(&|x| expected_lower(x, 1e-10).unwrap()), 60);
    assert_eq!(first(&|x| baseline_gaussian(x, 1e-10).unwrap().lower), 42);
    assert_eq!(first(&|x| baseline_curty(x, 1e-10).unwrap().lower), 102);
}

#[test]
fn upper_at_hundred_is_close_to_gaussian() {
    let gap = expected_upper(100.0, 1e-10).unwrap() - 100.0;
    let gauss = baseline_gaussian(100.0, 1e-10).unwrap().upper - 100.0;
    assert!(gap >= gauss && gap <= 2.0 * gauss, "{gap} vs {gauss}");
}

#[test]
fn bounds_at_thousand_hold_for_poisson() {
    let eps = 1e-3;
    let hi = expected_upper(1000.0, eps).unwrap();
    assert!(poisson_cdf(1000, hi) <= eps);
    let lo = expected_lower(1000.0, eps).unwrap();
    assert!(1.0 - poisson_cdf(999, lo) <= eps);
    // the bounds are not absurdly loose either
    assert!(poisson_cdf(1000, 0.5 * (hi + 1000.0)) > eps);
}

#[test]
fn interval_nesting() {
    for x in 0..=10_000 {
        let x = x as f64;
        let g = baseline_gaussian(x, 1e-10).unwrap();
        let l = tfqkd_core::bounds::expected_interval(x, 1e-10).unwrap();
        let c = baseline_curty(x, 1e-10).unwrap();
        assert!(l.contains(&g), "x={x}");
        assert!(c.contains(&l), "x={x}");
    }
}

proptest! {
    #[test]
    fn inversion_brackets_observation(x in 0.0f64..1e8, e in 1.0f64..15.0) {
        let eps = 10f64.powf(-e);
        prop_assert!(expected_lower(x, eps).unwrap() <= x);
        prop_assert!(expected_upper(x, eps).unwrap() >= x);
    }

    #[test]
    fn upper_gap_grows_with_x(x in 0.0f64..1e7, dx in 0.0f64..1e4) {
        let a = expected_upper_gap(x, 1e-10).unwrap().value;
        let b = expected_upper_gap(x + dx, 1e-10).unwrap().value;
        prop_assert!(b >= a * (1.0 - 1e-12));
    }
}
