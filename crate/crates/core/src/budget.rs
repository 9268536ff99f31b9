//! Secrecy budget and the bookkeeping that ties it to the number of tail
//! bounds actually applied.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Cat-state X basis; phase errors observed directly.
    P1,
    /// Phase-randomized coherent states with three-intensity decoys.
    P2,
}

impl Protocol {
    /// Number of equal parts `ε_sec` is split into.
    pub fn budget_parts(self) -> f64 {
        match self {
            Protocol::P1 => 4.0,
            Protocol::P2 => 31.0,
        }
    }

    /// Tail-bound invocations the budget pays for.
    pub fn expected_usage(self) -> BoundUsage {
        match self {
            Protocol::P1 => BoundUsage {
                sampling: 1,
                chernoff: 0,
                inverse_chernoff: 0,
            },
            Protocol::P2 => BoundUsage {
                sampling: 2,
                chernoff: 9,
                inverse_chernoff: 17,
            },
        }
    }
}

/// Secrecy and correctness parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecurityBudget {
    pub eps_sec: f64,
    pub eps_cor: f64,
    pub protocol: Protocol,
}

impl SecurityBudget {
    pub fn new(eps_sec: f64, eps_cor: f64, protocol: Protocol) -> Result<Self> {
        let b = SecurityBudget {
            eps_sec,
            eps_cor,
            protocol,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_sec > 0.0 && self.eps_sec < 1.0) {
            return Err(Error::InvalidParameter("eps_sec"));
        }
        if !(self.eps_cor > 0.0 && self.eps_cor < 1.0) {
            return Err(Error::InvalidParameter("eps_cor"));
        }
        Ok(())
    }

    /// Failure probability given to each estimate: `ε = υ = ε₁ (= ε₂ = ε₃)`.
    pub fn part(&self) -> f64 {
        self.eps_sec / self.protocol.budget_parts()
    }

    /// Sum of the allocated parts, `2ε + υ + ε₁` or
    /// `2ε + υ + 2ε₁ + 9ε₂ + 17ε₃`.
    pub fn composed(&self) -> f64 {
        let e = self.part();
        let u = self.protocol.expected_usage();
        3.0 * e + f64::from(u.sampling + u.chernoff + u.inverse_chernoff) * e
    }

    /// Finite-size penalty in bits, `log₂(2/ε_cor) + 2 log₂(c/ε_sec)` with
    /// `c = 2` for Protocol 1 and `31/2` for Protocol 2.
    pub fn penalty_bits(&self) -> f64 {
        let c = match self.protocol {
            Protocol::P1 => 2.0,
            Protocol::P2 => 15.5,
        };
        libm::log2(2.0 / self.eps_cor) + 2.0 * libm::log2(c / self.eps_sec)
    }
}

impl Default for SecurityBudget {
    fn default() -> Self {
        SecurityBudget {
            eps_sec: 1e-10,
            eps_cor: 1e-15,
            protocol: Protocol::P2,
        }
    }
}

/// Count of sampling, Chernoff and inverse-Chernoff bounds applied during
/// one evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BoundUsage {
    pub sampling: u32,
    pub chernoff: u32,
    pub inverse_chernoff: u32,
}

impl BoundUsage {
    /// Fails unless the usage matches what the protocol's budget pays for.
    pub fn check(&self, protocol: Protocol) -> Result<()> {
        if *self == protocol.expected_usage() {
            Ok(())
        } else {
            Err(Error::BudgetMismatch {
                sampling: self.sampling,
                chernoff: self.chernoff,
                inverse_chernoff: self.inverse_chernoff,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgets_close() {
        for p in [Protocol::P1, Protocol::P2] {
            let b = SecurityBudget::new(1e-10, 1e-15, p).unwrap();
            assert!(libm::fabs(b.composed() - 1e-10) < 1e-24);
        }
    }

    #[test]
    fn penalties() {
        let p1 = SecurityBudget::new(1e-10, 1e-15, Protocol::P1).unwrap();
        let p2 = SecurityBudget { protocol: Protocol::P2, ..p1 };
        assert!(libm::fabs(p1.penalty_bits() - 119.267_483_321_057_7) < 1e-9);
        let extra = p2.penalty_bits() - p1.penalty_bits();
        assert!(libm::fabs(extra - 2.0 * libm::log2(31.0 / 4.0)) < 1e-9);
    }

    #[test]
    fn mismatch_is_reported() {
        let u = BoundUsage { sampling: 2, chernoff: 9, inverse_chernoff: 18 };
        assert!(matches!(u.check(Protocol::P2), Err(Error::BudgetMismatch { inverse_chernoff: 18, .. })));
        assert!(Protocol::P2.expected_usage().check(Protocol::P2).is_ok());
    }

    #[test]
    fn rejects_bad_eps() {
        assert_eq!(
            SecurityBudget::new(0.0, 1e-15, Protocol::P1),
            Err(Error::InvalidParameter("eps_sec"))
        );
    }
}
