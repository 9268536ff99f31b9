//! Symmetric fiber channel with the relay at the midpoint and threshold
//! detectors. Expected values stand in for observed ones.

use core::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::special::bessel_i0_minus_one;

/// Physical setup shared by Alice and Bob.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemConfig {
    /// Fiber attenuation in dB/km.
    pub fiber_loss: f64,
    /// Alice-to-Bob distance in km.
    pub distance: f64,
    pub det_efficiency: f64,
    /// Dark-count probability per pulse per detector.
    pub dark_rate: f64,
    /// Misalignment error probability `e_d`.
    pub misalignment: f64,
    /// Error-correction inefficiency `ζ ≥ 1`.
    pub ec_efficiency: f64,
    /// Total number of pulses `N`.
    pub total_pulses: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            fiber_loss: 0.16,
            distance: 0.0,
            det_efficiency: 0.85,
            dark_rate: 1e-11,
            misalignment: 0.02,
            ec_efficiency: 1.1,
            total_pulses: 1e13,
        }
    }
}

fn probability(v: f64, field: &'static str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(field))
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fiber_loss > 0.0) || !self.fiber_loss.is_finite() {
            return Err(Error::InvalidParameter("fiber_loss"));
        }
        if !(self.distance >= 0.0) || !self.distance.is_finite() {
            return Err(Error::InvalidParameter("distance"));
        }
        probability(self.det_efficiency, "det_efficiency")?;
        probability(self.dark_rate, "dark_rate")?;
        probability(self.misalignment, "misalignment")?;
        if !(self.ec_efficiency >= 1.0) || !self.ec_efficiency.is_finite() {
            return Err(Error::InvalidParameter("ec_efficiency"));
        }
        if !(self.total_pulses >= 1.0) || !self.total_pulses.is_finite() {
            return Err(Error::InvalidParameter("total_pulses"));
        }
        Ok(())
    }
}

/// Overall efficiency between one user and the relay, detector included:
/// `η = η_d 10^(-α L / 20)`.
pub fn arm_efficiency(cfg: &SystemConfig) -> f64 {
    cfg.det_efficiency * libm::pow(10.0, -cfg.fiber_loss * cfg.distance / 20.0)
}

/// Z-basis gain and error rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZBasisObservables {
    pub q_z: f64,
    /// `None` when nothing clicks.
    pub e_z: Option<f64>,
    pub q_z_correct: f64,
    pub q_z_error: f64,
}

/// Gains for signal intensity `mu` on both sides:
/// `Q_Z = (1-p_d)[1 - (1-2p_d)e^{-2μη}]`,
/// `Q^E = p_d(1-p_d)e^{-2μη}`, `Q^C = (1-p_d)[1 - (1-p_d)e^{-2μη}]` and
/// `E_Z = [e_d Q^C + (1-e_d) Q^E] / Q_Z`.
pub fn z_basis_observables(mu: f64, eta: f64, cfg: &SystemConfig) -> ZBasisObservables {
    let pd = cfg.dark_rate;
    let ed = cfg.misalignment;
    let decay = libm::exp(-2.0 * mu * eta);
    let lost = -libm::expm1(-2.0 * mu * eta);
    let q_z = (1.0 - pd) * (lost + 2.0 * pd * decay);
    let q_z_error = pd * (1.0 - pd) * decay;
    let q_z_correct = (1.0 - pd) * (lost + pd * decay);
    let e_z = if q_z > 0.0 {
        Some(((ed * q_z_correct + (1.0 - ed) * q_z_error) / q_z).clamp(0.0, 1.0))
    } else {
        None
    };
    ZBasisObservables {
        q_z: q_z.clamp(0.0, 1.0),
        e_z,
        q_z_correct,
        q_z_error,
    }
}

/// Gain when Alice sends a phase-randomized coherent state of intensity `a`
/// and Bob one of intensity `b`:
/// `2(1-p_d)e^{-(a+b)η/2} I₀(√(ab)η) - 2(1-p_d)²e^{-(a+b)η}`.
pub fn decoy_gain(a: f64, b: f64, eta: f64, dark_rate: f64) -> f64 {
    let keep = 1.0 - dark_rate;
    let s = (a + b) * eta;
    // factored as 2(1-p_d)e^{-s}[e^{s/2}I₀ - (1-p_d)] to avoid cancellation
    let bracket = libm::expm1(0.5 * s)
        + libm::exp(0.5 * s) * bessel_i0_minus_one(libm::sqrt(a * b) * eta)
        + dark_rate;
    (2.0 * keep * libm::exp(-s) * bracket).clamp(0.0, 1.0)
}

/// Repeaterless capacity `-log₂(1 - η_AB)` of the bare fiber,
/// `η_AB = 10^(-α L / 10)`. Infinite at zero distance.
pub fn plob_bound(cfg: &SystemConfig) -> f64 {
    let t = libm::pow(10.0, -cfg.fiber_loss * cfg.distance / 10.0);
    -libm::log1p(-t) / LN_2
}

/// X-basis gain and error rate for Protocol 1, modeled with the Z-basis
/// formulas at the same intensity.
pub fn x_basis_observables_p1(mu: f64, eta: f64, cfg: &SystemConfig) -> (f64, Option<f64>) {
    let z = z_basis_observables(mu, eta, cfg);
    (z.q_z, z.e_z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(distance: f64) -> SystemConfig {
        SystemConfig {
            distance,
            ..SystemConfig::default()
        }
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        libm::fabs(a - b) <= rel * libm::fabs(b)
    }

    #[test]
    fn arm_efficiency_values() {
        assert_eq!(arm_efficiency(&cfg(0.0)), 0.85);
        assert!(close(arm_efficiency(&cfg(125.0)), 0.085, 1e-14));
        assert!(close(arm_efficiency(&cfg(1000.0)), 0.85e-8, 1e-12));
    }

    #[test]
    fn z_basis_limits() {
        let dark_free = SystemConfig {
            dark_rate: 0.0,
            ..cfg(100.0)
        };
        let z = z_basis_observables(0.0, 0.5, &dark_free);
        assert_eq!(z.q_z, 0.0);
        assert_eq!(z.e_z, None);
        let z = z_basis_observables(0.1, 0.01, &dark_free);
        assert!(close(z.e_z.unwrap(), 0.02, 1e-14));
        let z = z_basis_observables(1e4, 1.0, &dark_free);
        assert_eq!(z.q_z, 1.0);
        let z = z_basis_observables(0.3, 1e-3, &cfg(10.0));
        assert!(libm::fabs(z.q_z - z.q_z_correct - z.q_z_error) < 1e-12);
    }

    #[test]
    fn decoy_gain_reductions() {
        assert_eq!(decoy_gain(0.0, 0.0, 0.3, 0.0), 0.0);
        let pd = 1e-3;
        assert!(close(decoy_gain(0.0, 0.0, 0.3, pd), 2.0 * pd * (1.0 - pd), 1e-10));
        let (nu, eta) = (0.4, 0.02);
        let want = 2.0 * (1.0 - pd) * libm::exp(-nu * eta / 2.0)
            - 2.0 * (1.0 - pd) * (1.0 - pd) * libm::exp(-nu * eta);
        assert!(close(decoy_gain(nu, 0.0, eta, pd), want, 1e-12));
        assert_eq!(decoy_gain(0.3, 0.1, eta, pd), decoy_gain(0.1, 0.3, eta, pd));
    }

    #[test]
    fn decoy_gain_matches_direct_form() {
        for &(a, b, eta) in &[(0.3, 0.1, 0.2), (0.5, 0.5, 0.8), (0.02, 0.4, 1e-3)] {
            let pd = 1e-6;
            let direct = 2.0 * (1.0 - pd) * libm::exp(-(a + b) * eta / 2.0)
                * crate::special::bessel_i0(libm::sqrt(a * b) * eta)
                - 2.0 * (1.0 - pd) * (1.0 - pd) * libm::exp(-(a + b) * eta);
            assert!(close(decoy_gain(a, b, eta, pd), direct, 1e-9));
        }
    }

    #[test]
    fn plob_values() {
        let half = SystemConfig {
            fiber_loss: 10.0 * libm::log10(2.0),
            ..cfg(1.0)
        };
        assert!(close(plob_bound(&half), 1.0, 1e-12));
        assert!(close(plob_bound(&cfg(500.0)), 1e-8 / LN_2, 1e-7));
        assert!(plob_bound(&cfg(0.0)).is_infinite());
    }

    #[test]
    fn protocol_one_x_basis_matches_z() {
        let c = cfg(300.0);
        let eta = arm_efficiency(&c);
        let z = z_basis_observables(0.2, eta, &c);
        assert_eq!(x_basis_observables_p1(0.2, eta, &c), (z.q_z, z.e_z));
    }

    #[test]
    fn validation_names_field() {
        let bad = SystemConfig {
            ec_efficiency: 0.9,
            ..SystemConfig::default()
        };
        assert_eq!(bad.validate(), Err(Error::InvalidParameter("ec_efficiency")));
        assert!(SystemConfig::default().validate().is_ok());
    }
}
