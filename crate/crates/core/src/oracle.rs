//! Brute-force reference computations for validating the tail bounds:
//! exact hypergeometric and binomial tails, a seeded Monte-Carlo estimator
//! for non-identical Bernoulli sums, and exhaustive validation sweeps.

use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{
    chernoff_delta_lower, chernoff_delta_upper, sampling_gamma_lower, sampling_gamma_upper,
};
use crate::error::{Error, Result};
use crate::special::{ln_binomial_density, ln_hypergeom_weight};

/// Largest `n + k` accepted by [`hypergeom_tail_exact`].
pub const MAX_HYPERGEOM_SIZE: u64 = 10_000;
/// Largest trial count accepted by [`binomial_tail_exact`].
pub const MAX_BINOMIAL_TRIALS: u64 = 1_000_000;
/// Two-sided 99% normal quantile used for Wilson intervals.
const Z_99: f64 = 2.575_829_303_548_901;
/// Slack when comparing a lattice fraction with a solved bound, so that a
/// bound computed to solver precision is not declared violated by rounding.
const COMPARE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Upper,
    Lower,
}

/// A string of `n + k` bits holding `total_ones` ones, of which a random
/// `k`-subset is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HypergeomScenario {
    pub n: u64,
    pub k: u64,
    pub total_ones: u64,
}

impl HypergeomScenario {
    pub fn new(n: u64, k: u64, total_ones: u64) -> Result<Self> {
        if total_ones > n + k {
            return Err(Error::Domain("total_ones exceeds n + k"));
        }
        Ok(HypergeomScenario { n, k, total_ones })
    }

    /// Sample one-counts with nonzero probability.
    pub fn support(&self) -> core::ops::RangeInclusive<u64> {
        self.total_ones.saturating_sub(self.n)..=self.total_ones.min(self.k)
    }

    /// Log-probability that the sample holds exactly `j` ones.
    pub fn ln_pmf(&self, j: u64) -> f64 {
        if !self.support().contains(&j) {
            return f64::NEG_INFINITY;
        }
        ln_hypergeom_weight(
            self.k as f64,
            j as f64,
            self.n as f64,
            (self.total_ones - j) as f64,
        )
    }
}

/// `ln Σ exp(terms)` with max-shift normalization.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|&t| libm::exp(t - max)).sum();
    max + libm::log(sum)
}

/// Exact probability of `λ_n ≥ λ_k + γ` (upper) or `λ_n ≤ λ_k - γ`
/// (lower), summed over the sample one-count.
///
/// ```
/// use tfqkd_core::oracle::{hypergeom_tail_exact, Direction, HypergeomScenario};
/// let s = HypergeomScenario::new(1, 1, 1).unwrap();
/// assert!((hypergeom_tail_exact(&s, 1.0, Direction::Upper).unwrap() - 0.5).abs() < 1e-15);
/// ```
pub fn hypergeom_tail_exact(
    scenario: &HypergeomScenario,
    gamma: f64,
    direction: Direction,
) -> Result<f64> {
    let HypergeomScenario { n, k, total_ones } = *scenario;
    if n == 0 || k == 0 {
        return Err(Error::Domain("hypergeometric scenario needs n, k >= 1"));
    }
    if n + k > MAX_HYPERGEOM_SIZE {
        return Err(Error::TooLarge("n + k above the exact-summation limit"));
    }
    let terms: Vec<f64> = scenario
        .support()
        .filter(|&j| {
            let lambda_k = j as f64 / k as f64;
            let lambda_n = (total_ones - j) as f64 / n as f64;
            match direction {
                Direction::Upper => lambda_n >= lambda_k + gamma,
                Direction::Lower => lambda_n <= lambda_k - gamma,
            }
        })
        .map(|j| scenario.ln_pmf(j))
        .collect();
    Ok(libm::exp(log_sum_exp(&terms)).min(1.0))
}

/// Exact `Pr[X ≥ threshold]` (upper) or `Pr[X ≤ threshold]` (lower) for
/// `X ~ Binomial(m, p)`. With no trials there is no tail event and the
/// result is 0.
pub fn binomial_tail_exact(m: u64, p: f64, threshold: f64, direction: Direction) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain("success probability must lie in [0, 1]"));
    }
    if m > MAX_BINOMIAL_TRIALS {
        return Err(Error::TooLarge("binomial trial count above the exact-summation limit"));
    }
    if m == 0 {
        return Ok(0.0);
    }
    let (lo, hi) = match direction {
        Direction::Upper => (libm::ceil(threshold).max(0.0), m as f64),
        Direction::Lower => (0.0, libm::floor(threshold).min(m as f64)),
    };
    if lo > hi {
        return Ok(0.0);
    }
    let (lo, hi) = (lo as u64, hi as u64);
    let mf = m as f64;
    let terms: Vec<f64> = (lo..=hi)
        .map(|x| ln_binomial_density(x as f64, mf, p, 1.0 - p))
        .collect();
    Ok(libm::exp(log_sum_exp(&terms)).min(1.0))
}

/// Monte-Carlo tail estimate with its 99% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub hits: u64,
    pub samples: u64,
    pub seed: u64,
}

/// Wilson score interval at 99% confidence.
pub fn wilson_interval(hits: u64, samples: u64) -> (f64, f64) {
    let n = samples as f64;
    let p = hits as f64 / n;
    let z2 = Z_99 * Z_99;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z_99 * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Estimates `Pr[X ≥ threshold]` (upper) or `Pr[X ≤ threshold]` (lower)
/// for a sum of independent Bernoulli trials with the given probabilities.
pub fn mc_bernoulli_tail(
    probs: &[f64],
    threshold: f64,
    direction: Direction,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if samples < 10_000 {
        return Err(Error::Domain("Monte-Carlo estimates need at least 1e4 samples"));
    }
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Domain("trial probabilities must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..samples {
        let x = probs.iter().filter(|&&p| uniform(&mut rng) < p).count() as f64;
        let hit = match direction {
            Direction::Upper => x >= threshold,
            Direction::Lower => x <= threshold,
        };
        hits += u64::from(hit);
    }
    let (ci_low, ci_high) = wilson_interval(hits, samples);
    Ok(McEstimate {
        estimate: hits as f64 / samples as f64,
        ci_low,
        ci_high,
        hits,
        samples,
        seed,
    })
}

/// Worst-case failure probability of one sampling bound at one
/// observation, maximized over every total one-count consistent with it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingCheck {
    pub n: u64,
    pub k: u64,
    pub ones_observed: u64,
    pub eps: f64,
    pub direction: Direction,
    /// Deviation used (γ or γ̂, after scaling); zero for a vacuous lower bound.
    pub gamma: f64,
    pub worst_total_ones: u64,
    pub worst_probability: f64,
}

impl SamplingCheck {
    pub fn passed(&self) -> bool {
        self.worst_probability <= self.eps
    }
}

/// Checks the sampling bound at every observation `j = 0..=k`.
///
/// For each `j`, the bound is violated when the remaining fraction lies
/// strictly beyond `λ_k ± γ`; the probability of observing `j` together
/// with a violation is maximized over the unknown total one-count.
/// `gamma_scale` multiplies the solved deviation; values below one make a
/// deliberately broken bound for negative controls.
pub fn check_sampling_bound(
    n: u64,
    k: u64,
    eps: f64,
    direction: Direction,
    gamma_scale: f64,
) -> Result<Vec<SamplingCheck>> {
    if n == 0 || k == 0 {
        return Err(Error::Domain("sampling check needs n, k >= 1"));
    }
    if n + k > MAX_HYPERGEOM_SIZE {
        return Err(Error::TooLarge("n + k above the exact-summation limit"));
    }
    let (nf, kf) = (n as f64, k as f64);
    let mut out = Vec::with_capacity(k as usize + 1);
    for j in 0..=k {
        let lambda_k = j as f64 / kf;
        let bound = match direction {
            Direction::Upper => {
                let g = sampling_gamma_upper(nf, kf, lambda_k, eps)?.value * gamma_scale;
                Some((g, lambda_k + g))
            }
            Direction::Lower => sampling_gamma_lower(nf, kf, lambda_k, eps)?.map(|s| {
                let g = s.value * gamma_scale;
                (g, lambda_k - g)
            }),
        };
        let mut check = SamplingCheck {
            n,
            k,
            ones_observed: j,
            eps,
            direction,
            gamma: bound.map_or(0.0, |b| b.0),
            worst_total_ones: j,
            worst_probability: 0.0,
        };
        // a missing lower root means the bound is λ_n ≥ 0, never violated
        if let Some((_, edge)) = bound {
            for total in j..=j + n {
                let lambda_n = (total - j) as f64 / nf;
                let violated = match direction {
                    Direction::Upper => lambda_n > edge + COMPARE_SLACK,
                    Direction::Lower => lambda_n < edge - COMPARE_SLACK,
                };
                if !violated {
                    continue;
                }
                let p = libm::exp(HypergeomScenario { n, k, total_ones: total }.ln_pmf(j));
                if p > check.worst_probability {
                    check.worst_probability = p;
                    check.worst_total_ones = total;
                }
            }
        }
        out.push(check);
    }
    Ok(out)
}

/// Exact tail masses beyond the solved Chernoff deviations for
/// `X ~ Binomial(m, μ/m)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChernoffCheck {
    pub mu: f64,
    pub eps: f64,
    pub trials: u64,
    pub delta_upper: f64,
    pub delta_lower: f64,
    /// `Pr[X > (1+δ)μ]`.
    pub upper_tail: f64,
    /// `Pr[X < (1-δ̂)μ]`.
    pub lower_tail: f64,
}

impl ChernoffCheck {
    pub fn passed(&self) -> bool {
        self.upper_tail < self.eps && self.lower_tail < self.eps
    }
}

/// Validates δ and δ̂ at mean `mu` against an exact binomial with `trials`
/// independent identical trials.
pub fn check_chernoff(mu: f64, eps: f64, trials: u64) -> Result<ChernoffCheck> {
    let m = trials as f64;
    if !(mu > 0.0 && mu <= m) {
        return Err(Error::Domain("Chernoff check needs 0 < mu <= trials"));
    }
    let p = mu / m;
    let du = chernoff_delta_upper(mu, eps)?.value;
    let dl = chernoff_delta_lower(mu, eps)?.value;
    let upper_edge = libm::floor((1.0 + du) * mu * (1.0 + COMPARE_SLACK)) + 1.0;
    let lower_edge = libm::ceil((1.0 - dl) * mu * (1.0 - COMPARE_SLACK)) - 1.0;
    Ok(ChernoffCheck {
        mu,
        eps,
        trials,
        delta_upper: du,
        delta_lower: dl,
        upper_tail: binomial_tail_exact(trials, p, upper_edge, Direction::Upper)?,
        lower_tail: if lower_edge < 0.0 {
            0.0
        } else {
            binomial_tail_exact(trials, p, lower_edge, Direction::Lower)?
        },
    })
}
