//! Three-intensity decoy-state estimation of photon-number yields.
//!
//! Gain arrays are indexed `[a][b]` with `a` Alice's and `b` Bob's
//! intensity, in the order `[ν, ω, 0]`.

use crate::bounds::{chernoff_delta_upper, expected_lower, expected_upper};
use crate::budget::BoundUsage;
use crate::error::{Error, Result};
use crate::special::poisson;

/// Relative rounding margin added to every decoy numerator, in units of the
/// summed term magnitudes.
const ROUNDING_SLACK: f64 = 64.0 * f64::EPSILON;

pub const NU: usize = 0;
pub const OMEGA: usize = 1;
pub const VAC: usize = 2;

/// Per-pair array over the three intensities.
pub type PairTable = [[f64; 3]; 3];

/// Photon-number pairs whose yields are estimated; every other pair in the
/// phase-error bound has `n + m ≥ 5` and is bounded by one.
pub const ESTIMATED_PAIRS: [(u32, u32); 9] = [
    (0, 0),
    (1, 1),
    (0, 2),
    (2, 0),
    (0, 4),
    (4, 0),
    (1, 3),
    (3, 1),
    (2, 2),
];

/// Decoy intensities and their selection probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoySettings {
    pub nu: f64,
    pub omega: f64,
    pub p_nu: f64,
    pub p_omega: f64,
    pub p_vac: f64,
}

impl DecoySettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParameter("omega"));
        }
        if !(self.nu > self.omega) || !self.nu.is_finite() {
            return Err(Error::InvalidParameter("nu"));
        }
        for (p, name) in [
            (self.p_nu, "p_nu"),
            (self.p_omega, "p_omega"),
            (self.p_vac, "p_vac"),
        ] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidParameter(name));
            }
        }
        if libm::fabs(self.p_nu + self.p_omega + self.p_vac - 1.0) > 1e-12 {
            return Err(Error::InvalidParameter("p_vac"));
        }
        Ok(())
    }

    pub fn intensities(&self) -> [f64; 3] {
        [self.nu, self.omega, 0.0]
    }

    pub fn probabilities(&self) -> [f64; 3] {
        [self.p_nu, self.p_omega, self.p_vac]
    }

    /// `Σ_{a,b} p_a p_b P_n^a P_m^b`, the fraction of X-basis rounds in which
    /// Alice sends `n` photons and Bob `m`.
    pub fn photon_weight(&self, n: u32, m: u32) -> f64 {
        let s = self.intensities();
        let p = self.probabilities();
        let mut w = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                w += p[a] * p[b] * poisson(n, s[a]) * poisson(m, s[b]);
            }
        }
        w
    }
}

/// Lower and upper bounds on the expected gains `Q*_{a,b}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainIntervals {
    pub lower: PairTable,
    pub upper: PairTable,
}

/// Converts observed counts `k_{a,b}` into expected-gain intervals.
///
/// All nine upper bounds are estimated. Of the lower bounds only the eight
/// that the yield formulas consume are estimated; `Q̲*_{ν,ν}` is left at
/// the trivial value 0. Each estimate is one inverse-Chernoff bound and is
/// recorded in `usage`.
pub fn gain_intervals_from_counts(
    counts: &PairTable,
    n_x: f64,
    settings: &DecoySettings,
    eps3: f64,
    usage: &mut BoundUsage,
) -> Result<GainIntervals> {
    let p = settings.probabilities();
    let mut lower = [[0.0; 3]; 3];
    let mut upper = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let k = counts[a][b];
            if !(k >= 0.0) {
                return Err(Error::Domain("decoy counts must be nonnegative"));
            }
            let rounds = n_x * p[a] * p[b];
            if !(rounds > 0.0) {
                return Err(Error::Domain("no X-basis rounds for an intensity pair"));
            }
            upper[a][b] = (expected_upper(k, eps3)? / rounds).clamp(0.0, 1.0);
            usage.inverse_chernoff += 1;
            if (a, b) != (NU, NU) {
                lower[a][b] = (expected_lower(k, eps3)? / rounds).clamp(0.0, 1.0);
                usage.inverse_chernoff += 1;
            }
        }
    }
    Ok(GainIntervals { lower, upper })
}

/// Upper bounds on yields for the nine estimated photon-number pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YieldBounds {
    /// Values in the order of [`ESTIMATED_PAIRS`].
    pub values: [f64; 9],
    /// Marks bounds whose decoy numerator came out negative and was
    /// clamped to zero.
    pub clamped_negative: [bool; 9],
    /// Bound used for every pair that is not estimated; one in practice.
    pub tail: f64,
}

impl YieldBounds {
    /// Bound on `Y_{n,m}`; [`tail`](Self::tail) for any pair that is not
    /// estimated.
    pub fn get(&self, n: u32, m: u32) -> f64 {
        ESTIMATED_PAIRS
            .iter()
            .position(|&pair| pair == (n, m))
            .map_or(self.tail, |i| self.values[i])
    }

    /// The same bound for every pair, estimated or not.
    pub fn uniform(value: f64) -> Self {
        YieldBounds {
            values: [value; 9],
            clamped_negative: [false; 9],
            tail: value,
        }
    }
}

/// Expected-yield upper bounds from the decoy gain intervals, each clamped
/// to `[0, 1]`.
pub fn yield_upper_bounds(g: &GainIntervals, settings: &DecoySettings) -> Result<YieldBounds> {
    settings.validate()?;
    let (n, w) = (settings.nu, settings.omega);
    let u = |a: usize, b: usize| g.upper[a][b];
    let l = |a: usize, b: usize| g.lower[a][b];
    let (en, ew) = (libm::exp(n), libm::exp(w));
    let (e2w, enw, e2n) = (libm::exp(2.0 * w), libm::exp(n + w), libm::exp(2.0 * n));

    // each numerator as signed terms; the magnitude sum sizes the rounding margin
    let two_photon = |side_nu: f64, side_omega: f64| {
        [w * en * side_nu, -n * ew * side_omega, (n - w) * u(VAC, VAC)]
    };
    let pad = |a: [f64; 3]| [a[0], a[1], a[2], 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let terms: [([f64; 9], f64); 9] = [
        (pad([u(VAC, VAC), 0.0, 0.0]), 1.0),
        (pad([e2w * u(OMEGA, OMEGA), -ew * (l(OMEGA, VAC) + l(VAC, OMEGA)), u(VAC, VAC)]), w * w),
        (pad(two_photon(u(VAC, NU), l(VAC, OMEGA))), n * w * (n - w) / 2.0),
        (pad(two_photon(u(NU, VAC), l(OMEGA, VAC))), n * w * (n - w) / 2.0),
        (pad(two_photon(u(VAC, NU), l(VAC, OMEGA))), n * w * (n * n * n - w * w * w) / 24.0),
        (pad(two_photon(u(NU, VAC), l(OMEGA, VAC))), n * w * (n * n * n - w * w * w) / 24.0),
        (
            [
                w * enw * u(OMEGA, NU),
                (n - w) * ew * u(OMEGA, VAC),
                n * ew * u(VAC, OMEGA),
                -w * en * l(VAC, NU),
                -n * e2w * l(OMEGA, OMEGA),
                -(n - w) * l(VAC, VAC),
                0.0,
                0.0,
                0.0,
            ],
            n * w * w * (n * n - w * w) / 6.0,
        ),
        (
            [
                w * enw * u(NU, OMEGA),
                n * ew * u(OMEGA, VAC),
                (n - w) * ew * u(VAC, OMEGA),
                -w * en * l(NU, VAC),
                -n * e2w * l(OMEGA, OMEGA),
                -(n - w) * l(VAC, VAC),
                0.0,
                0.0,
                0.0,
            ],
            n * w * w * (n * n - w * w) / 6.0,
        ),
        // the normalization divides the whole difference
        (
            [
                w * w * e2n * u(NU, NU),
                n * n * e2w * u(OMEGA, OMEGA),
                w * (n - w) * en * (u(NU, VAC) + u(VAC, NU)),
                (n - w) * (n - w) * u(VAC, VAC),
                -n * w * enw * l(NU, OMEGA),
                -n * w * enw * l(OMEGA, NU),
                -n * (n - w) * ew * l(OMEGA, VAC),
                -n * (n - w) * ew * l(VAC, OMEGA),
                0.0,
            ],
            n * n * w * w * (n - w) * (n - w) / 4.0,
        ),
    ];
    let raw = terms.map(|(t, norm)| {
        let sum: f64 = t.iter().sum();
        let magnitude: f64 = t.iter().map(|x| x.abs()).sum();
        (sum + ROUNDING_SLACK * magnitude) / norm
    });
    let mut out = YieldBounds::uniform(1.0);
    for (i, &v) in raw.iter().enumerate() {
        out.clamped_negative[i] = v < 0.0;
        out.values[i] = if v.is_nan() { 1.0 } else { v.clamp(0.0, 1.0) };
    }
    Ok(out)
}

/// Upper bound on the observed yield `Ȳ_{n,m}` given an upper bound on the
/// expected yield, via the upper Chernoff tail with failure probability
/// `eps2`. Records one Chernoff use in `usage`.
pub fn observed_yield_upper(
    y_star: f64,
    n_x: f64,
    settings: &DecoySettings,
    n: u32,
    m: u32,
    eps2: f64,
    usage: &mut BoundUsage,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&y_star) {
        return Err(Error::Domain("expected yield must lie in [0, 1]"));
    }
    let rounds = n_x * settings.photon_weight(n, m);
    if !(rounds > 0.0) {
        return Err(Error::Domain("no X-basis rounds for the photon-number pair"));
    }
    let s_star = y_star * rounds;
    usage.chernoff += 1;
    let s_bar = if s_star > 0.0 {
        (1.0 + chernoff_delta_upper(s_star, eps2)?.value) * s_star
    } else {
        // limit of (1+δ)μ as μ → 0
        if !(eps2 > 0.0 && eps2 < 1.0) {
            return Err(Error::Domain("failure probability must lie in (0, 1)"));
        }
        -libm::log(eps2)
    };
    Ok((s_bar / rounds).min(1.0))
}

/// Expected counts `k_{a,b} = N_X p_a p_b Q_{a,b}`.
pub fn expected_counts(gains: &PairTable, n_x: f64, settings: &DecoySettings) -> PairTable {
    let p = settings.probabilities();
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = n_x * p[a] * p[b] * gains[a][b];
        }
    }
    k
}

/// Estimated observed-yield bounds from expected counts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoyEstimate {
    pub gains: GainIntervals,
    pub expected_yields: YieldBounds,
    pub observed_yields: YieldBounds,
}

/// Full decoy pipeline: counts to gain intervals (inverse Chernoff), gain
/// intervals to expected yields, expected yields to observed yields
/// (Chernoff).
pub fn estimate_yields(
    counts: &PairTable,
    n_x: f64,
    settings: &DecoySettings,
    eps2: f64,
    eps3: f64,
    usage: &mut BoundUsage,
) -> Result<DecoyEstimate> {
    let gains = gain_intervals_from_counts(counts, n_x, settings, eps3, usage)?;
    let expected_yields = yield_upper_bounds(&gains, settings)?;
    let mut observed_yields = expected_yields;
    for (i, &(n, m)) in ESTIMATED_PAIRS.iter().enumerate() {
        observed_yields.values[i] =
            observed_yield_upper(expected_yields.values[i], n_x, settings, n, m, eps2, usage)?;
    }
    Ok(DecoyEstimate {
        gains,
        expected_yields,
        observed_yields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> DecoySettings {
        DecoySettings {
            nu: 0.3,
            omega: 0.05,
            p_nu: 0.2,
            p_omega: 0.3,
            p_vac: 0.5,
        }
    }

    #[test]
    fn zero_counts_give_trivial_interval() {
        let s = settings();
        let mut usage = BoundUsage::default();
        let g = gain_intervals_from_counts(&[[0.0; 3]; 3], 1e12, &s, 1e-10, &mut usage).unwrap();
        assert_eq!(usage.inverse_chernoff, 17);
        let rounds = 1e12 * s.p_omega * s.p_vac;
        assert_eq!(g.lower[OMEGA][VAC], 0.0);
        let want = 23.025_850_929_940_457 / rounds;
        assert!(libm::fabs(g.upper[OMEGA][VAC] - want) < 1e-12 * want);
    }

    #[test]
    fn interval_contains_generating_gain() {
        let s = settings();
        let q = 1e6 / (1e12 * s.p_nu * s.p_vac);
        let mut counts = [[0.0; 3]; 3];
        counts[NU][VAC] = 1e6;
        let mut usage = BoundUsage::default();
        let g = gain_intervals_from_counts(&counts, 1e12, &s, 1e-10, &mut usage).unwrap();
        assert!(g.lower[NU][VAC] < q && q < g.upper[NU][VAC]);
    }

    #[test]
    fn vacuum_only_channel() {
        let s = settings();
        let g = GainIntervals {
            lower: [[1e-6; 3]; 3],
            upper: [[1e-6; 3]; 3],
        };
        let y = yield_upper_bounds(&g, &s).unwrap();
        assert!((y.get(0, 0) - 1e-6).abs() < 1e-18);
        assert_eq!(y.get(3, 3), 1.0);
    }

    #[test]
    fn degenerate_intensities_rejected() {
        let s = DecoySettings {
            omega: 0.3,
            ..settings()
        };
        let g = GainIntervals {
            lower: [[0.0; 3]; 3],
            upper: [[0.0; 3]; 3],
        };
        assert_eq!(yield_upper_bounds(&g, &s), Err(Error::InvalidParameter("nu")));
    }

    #[test]
    fn observed_yield_limits() {
        let s = settings();
        let mut usage = BoundUsage::default();
        assert_eq!(observed_yield_upper(1.0, 1e10, &s, 1, 1, 1e-10, &mut usage).unwrap(), 1.0);
        let y = observed_yield_upper(1e-3, 1e16, &s, 1, 1, 1e-10, &mut usage).unwrap();
        assert!(y > 1e-3 && y < 1.0001e-3);
        let zero = observed_yield_upper(0.0, 1e10, &s, 0, 0, 1e-10, &mut usage).unwrap();
        let want = 23.025_850_929_940_457 / (1e10 * s.photon_weight(0, 0));
        assert!(libm::fabs(zero - want) < 1e-12 * want);
        assert_eq!(usage.chernoff, 3);
    }
}
