use proptest::prelude::*;
use tfqkd_core::channel::{decoy_gain, plob_bound, z_basis_observables, SystemConfig};
use tfqkd_core::special::bessel_i0;

/// I₀(x) = (1/π) ∫₀^π e^{x cos θ} dθ by composite Simpson's rule, scaled by
/// e^{-x} to keep the integrand bounded.
fn i0_quadrature(x: f64) -> f64 {
    let steps = 20_000;
    let h = std::f64::consts::PI / steps as f64;
    let f = |t: f64| (x * (t.cos() - 1.0)).exp();
    let mut s = f(0.0) + f(std::f64::consts::PI);
    for i in 1..steps {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0 / std::f64::consts::PI
}

#[test]
fn i0_matches_integral() {
    for i in 0..=100 {
        let x = 0.5 * i as f64;
        let scaled = bessel_i0(x) * (-x).exp();
        let q = i0_quadrature(x);
        assert!((scaled - q).abs() <= 1e-12 * q.max(1e-300), "x={x}: {scaled} vs {q}");
    }
}

#[test]
fn plob_decreases() {
    let mut last = f64::INFINITY;
    for d in 1..=200 {
        let v = plob_bound(&SystemConfig { distance: 5.0 * d as f64, ..SystemConfig::default() });
        assert!(v < last);
        last = v;
    }
}

proptest! {
    #[test]
    fn gain_symmetric_and_monotone(
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        da in 0.0f64..1.0,
        eta in 1e-9f64..0.85,
        pd in 0.0f64..1e-3,
    ) {
        let q = decoy_gain(a, b, eta, pd);
        prop_assert!((0.0..=1.0).contains(&q));
        prop_assert_eq!(q, decoy_gain(b, a, eta, pd));
        // single-click gains fall off once double clicks dominate, so
        // monotonicity is only claimed for intensities up to one
        let a2 = (a + da).min(1.0);
        prop_assert!(decoy_gain(a2, b, eta, pd) >= q * (1.0 - 1e-12));
    }

    #[test]
    fn z_basis_in_range(mu in 0.0f64..2.0, d in 0.0f64..1200.0, pd in 0.0f64..1e-3) {
        let cfg = SystemConfig { distance: d, dark_rate: pd, ..SystemConfig::default() };
        let eta = tfqkd_core::channel::arm_efficiency(&cfg);
        let z = z_basis_observables(mu, eta, &cfg);
        prop_assert!((0.0..=1.0).contains(&z.q_z));
        if let Some(e) = z.e_z {
            prop_assert!((0.0..=1.0).contains(&e));
        }
    }
}
