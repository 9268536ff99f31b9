//! Maximizes the key rate over the free protocol parameters with a
//! restarted Nelder–Mead search in normalized coordinates.
//!
//! Coordinates live in the unit cube. μ and ν are log-scaled, ω is a
//! log-scaled fraction of `[ω_min, ν)`, and the decoy probabilities come
//! from two logits against a fixed vacuum logit of zero.
//!
//! The search is split into [`screen_starts`], [`local_search`] and
//! [`reduce`] so that callers can run the local searches in parallel and
//! still get the same answer as [`optimize`].

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::budget::{Protocol, SecurityBudget};
use crate::channel::SystemConfig;
use crate::engine::{evaluate, AbortReason, EngineOptions, KeyRateResult, ProtocolParams};
use crate::error::{Error, Result};

/// Search box for the free parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParameterSpace {
    pub mu: (f64, f64),
    pub p_z: (f64, f64),
    pub nu: (f64, f64),
    /// Smallest weak-decoy intensity; ω ranges over `[omega_min, ν)`.
    pub omega_min: f64,
    /// Decoy logits range over `[-logit_range, logit_range]`.
    pub logit_range: f64,
}

impl Default for ParameterSpace {
    fn default() -> Self {
        ParameterSpace {
            mu: (1e-4, 1.0),
            p_z: (0.01, 0.99),
            nu: (1e-4, 1.0),
            omega_min: 1e-5,
            logit_range: 6.0,
        }
    }
}

/// Keeps ω strictly below ν.
const OMEGA_SPAN: f64 = 0.999;

fn log_interp(lo: f64, hi: f64, t: f64) -> f64 {
    libm::exp(libm::log(lo) + t * (libm::log(hi) - libm::log(lo)))
}

fn log_fraction(lo: f64, hi: f64, v: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    ((libm::log(v) - libm::log(lo)) / (libm::log(hi) - libm::log(lo))).clamp(0.0, 1.0)
}

impl ParameterSpace {
    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo > 0.0 && hi >= lo && hi.is_finite();
        if !ok(self.mu) {
            return Err(Error::InvalidParameter("mu"));
        }
        if !ok(self.p_z) || self.p_z.1 >= 1.0 {
            return Err(Error::InvalidParameter("p_z"));
        }
        if !ok(self.nu) {
            return Err(Error::InvalidParameter("nu"));
        }
        if !(self.omega_min > 0.0 && self.omega_min < self.nu.0) {
            return Err(Error::InvalidParameter("omega_min"));
        }
        if !(self.logit_range > 0.0) || !self.logit_range.is_finite() {
            return Err(Error::InvalidParameter("logit_range"));
        }
        Ok(())
    }

    /// Number of free coordinates.
    pub fn dimension(protocol: Protocol) -> usize {
        match protocol {
            Protocol::P1 => 2,
            Protocol::P2 => 6,
        }
    }

    /// Maps unit-cube coordinates to parameters. Protocol 1 coordinates
    /// leave the decoy fields at their defaults.
    pub fn decode(&self, x: &[f64]) -> ProtocolParams {
        let c = |i: usize| x.get(i).copied().unwrap_or(0.5).clamp(0.0, 1.0);
        let mut p = ProtocolParams {
            mu: log_interp(self.mu.0, self.mu.1, c(0)),
            p_z: self.p_z.0 + c(1) * (self.p_z.1 - self.p_z.0),
            ..ProtocolParams::default()
        };
        if x.len() >= 6 {
            p.nu = log_interp(self.nu.0, self.nu.1, c(2));
            p.omega = log_interp(self.omega_min, p.nu, OMEGA_SPAN * c(3));
            let l1 = self.logit_range * (2.0 * c(4) - 1.0);
            let l2 = self.logit_range * (2.0 * c(5) - 1.0);
            let (e1, e2) = (libm::exp(l1), libm::exp(l2));
            let z = 1.0 + e1 + e2;
            p.p_nu = e1 / z;
            p.p_omega = e2 / z;
        }
        p
    }

    /// Inverse of [`decode`](Self::decode), clamping into the box.
    pub fn encode(&self, p: &ProtocolParams, protocol: Protocol) -> Vec<f64> {
        let mut x = vec![
            log_fraction(self.mu.0, self.mu.1, p.mu),
            ((p.p_z - self.p_z.0) / (self.p_z.1 - self.p_z.0)).clamp(0.0, 1.0),
        ];
        if protocol == Protocol::P2 {
            let nu = p.nu.clamp(self.nu.0, self.nu.1);
            x.push(log_fraction(self.nu.0, self.nu.1, nu));
            x.push((log_fraction(self.omega_min, nu, p.omega) / OMEGA_SPAN).clamp(0.0, 1.0));
            let p_vac = (1.0 - p.p_nu - p.p_omega).max(1e-300);
            for q in [p.p_nu, p.p_omega] {
                let logit = libm::log(q.max(1e-300) / p_vac);
                x.push((0.5 * (logit / self.logit_range + 1.0)).clamp(0.0, 1.0));
            }
        }
        x
    }
}

/// Settings of the restarted search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerSettings {
    /// Random points scored before the local searches.
    pub screen_points: usize,
    /// Local searches started from the best screened points.
    pub restarts: usize,
    /// Stop when the simplex diameter falls below this.
    pub tolerance: f64,
    /// Evaluation cap per local search.
    pub max_evaluations: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            screen_points: 256,
            restarts: 16,
            tolerance: 1e-6,
            max_evaluations: 2000,
        }
    }
}

/// Everything an objective evaluation needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Problem {
    pub cfg: SystemConfig,
    pub protocol: Protocol,
    pub budget: SecurityBudget,
    pub space: ParameterSpace,
    pub options: EngineOptions,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        self.budget.validate()?;
        self.space.validate()
    }

    pub fn dimension(&self) -> usize {
        ParameterSpace::dimension(self.protocol)
    }

    /// Search objective at unit-cube coordinates. Equal to the key rate
    /// where it is positive. Elsewhere it is negative and rises toward zero
    /// as the point gets closer to yielding key, so that a search started
    /// in an abort region still has a direction to move in.
    pub fn score(&self, x: &[f64]) -> f64 {
        match self.evaluate_at(x) {
            Ok(r) if r.rate > 0.0 => r.rate,
            Ok(r) => infeasibility_score(&r),
            Err(_) => -1.0,
        }
    }

    pub fn evaluate_at(&self, x: &[f64]) -> Result<KeyRateResult> {
        let params = self.space.decode(x);
        evaluate(self.protocol, &self.cfg, &params, &self.budget, &self.options)
    }
}

fn infeasibility_score(r: &KeyRateResult) -> f64 {
    let d = &r.diagnostics;
    match r.abort_reason {
        Some(AbortReason::NonPositiveKey) => {
            -libm::atan(-d.ell_raw / d.n.max(1.0)).max(0.0) / core::f64::consts::PI
        }
        Some(AbortReason::PhaseErrorTooHigh) => {
            let phi = d.e_x + d.gamma;
            -0.5 - 0.25 * if phi.is_finite() { phi.min(1.0) } else { 1.0 }
        }
        _ => -1.0,
    }
}

/// Outcome of one local search.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalResult {
    pub coords: Vec<f64>,
    /// Best [`Problem::score`] reached.
    pub score: f64,
    pub evaluations: usize,
}

fn unit_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Scores `screen_points` seeded random points and returns the best
/// `restarts` of them (ties to the earlier point), followed by the warm
/// start if one is given.
pub fn screen_starts(
    problem: &Problem,
    settings: &OptimizerSettings,
    seed: u64,
    warm: Option<&ProtocolParams>,
) -> Vec<Vec<f64>> {
    let d = problem.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scored: Vec<(f64, usize, Vec<f64>)> = (0..settings.screen_points.max(1))
        .map(|i| {
            let x: Vec<f64> = (0..d).map(|_| unit_uniform(&mut rng)).collect();
            (problem.score(&x), i, x)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut starts: Vec<Vec<f64>> = scored
        .into_iter()
        .take(settings.restarts.max(1))
        .map(|s| s.2)
        .collect();
    if let Some(w) = warm {
        starts.push(problem.space.encode(w, problem.protocol));
    }
    starts
}

fn project(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .map(|(x, _)| {
            x.iter()
                .zip(best)
                .map(|(a, b)| libm::fabs(a - b))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Nelder–Mead maximization of [`Problem::score`] from `start`, with
/// reflection, expansion, contraction and shrink coefficients
/// (1, 2, 0.5, 0.5), kept inside the unit cube by projection.
pub fn local_search(problem: &Problem, settings: &OptimizerSettings, start: &[f64]) -> LocalResult {
    let d = start.len();
    let evaluations = core::cell::Cell::new(0usize);
    let f = |x: &[f64]| {
        evaluations.set(evaluations.get() + 1);
        -problem.score(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let mut x0 = start.to_vec();
    project(&mut x0);
    let f0 = f(&x0);
    simplex.push((x0.clone(), f0));
    for i in 0..d {
        let mut x = x0.clone();
        x[i] = if x[i] + 0.1 <= 1.0 { x[i] + 0.1 } else { x[i] - 0.1 };
        let fx = f(&x);
        simplex.push((x, fx));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&simplex) < settings.tolerance || evaluations.get() >= settings.max_evaluations {
            break;
        }
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / d as f64;
            }
        }
        let worst = simplex[d].clone();
        let along = |t: f64| {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            project(&mut p);
            p
        };
        let xr = along(1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = f(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    for (v, b) in x.iter_mut().zip(&best) {
                        *v = b + 0.5 * (*v - b);
                    }
                    *fx = f(x);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (coords, value) = simplex.swap_remove(0);
    LocalResult {
        coords,
        score: -value,
        evaluations: evaluations.get(),
    }
}

/// Best parameters found and the evaluation at them.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeResult {
    pub params: ProtocolParams,
    pub coords: Vec<f64>,
    pub result: KeyRateResult,
    pub evaluations: usize,
    /// No evaluated point gave a positive key.
    pub all_zero: bool,
}

/// Picks the best local result (ties to the lowest index) and re-evaluates
/// it.
pub fn reduce(problem: &Problem, results: &[LocalResult]) -> Result<OptimizeResult> {
    let best = results
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.score.total_cmp(&b.score).then(j.cmp(i)))
        .map(|(_, r)| r)
        .ok_or(Error::Domain("no local searches to reduce"))?;
    let params = problem.space.decode(&best.coords);
    let result = problem.evaluate_at(&best.coords)?;
    Ok(OptimizeResult {
        params,
        coords: best.coords.clone(),
        all_zero: !(result.rate > 0.0),
        result,
        evaluations: results.iter().map(|r| r.evaluations).sum(),
    })
}

/// Maximizes the key rate at one configuration, running the restarts one
/// after another. Deterministic in `seed`.
pub fn optimize(
    problem: &Problem,
    settings: &OptimizerSettings,
    seed: u64,
    warm: Option<&ProtocolParams>,
) -> Result<OptimizeResult> {
    problem.validate()?;
    let starts = screen_starts(problem, settings, seed, warm);
    let results: Vec<LocalResult> = starts
        .iter()
        .map(|s| local_search(problem, settings, s))
        .collect();
    let mut out = reduce(problem, &results)?;
    out.evaluations += settings.screen_points;
    Ok(out)
}

/// Seed for the `index`-th point of a sweep, decorrelated by splitmix64.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(index as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Axis varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    /// Distance in km.
    Distance,
    /// Total pulse count N.
    Pulses,
}

impl SweepAxis {
    pub fn apply(self, cfg: &SystemConfig, value: f64) -> SystemConfig {
        match self {
            SweepAxis::Distance => SystemConfig {
                distance: value,
                ..*cfg
            },
            SweepAxis::Pulses => SystemConfig {
                total_pulses: value,
                ..*cfg
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub optimum: OptimizeResult,
}

/// Optimizes at each grid value in order, warm-starting every point from
/// the previous optimum.
pub fn sweep(
    problem: &Problem,
    axis: SweepAxis,
    grid: &[f64],
    settings: &OptimizerSettings,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::Domain("sweep grid is empty"));
    }
    let mut out: Vec<SweepPoint> = Vec::with_capacity(grid.len());
    for (i, &v) in grid.iter().enumerate() {
        let p = Problem {
            cfg: axis.apply(&problem.cfg, v),
            ..*problem
        };
        let warm = out.last().map(|s| s.optimum.params);
        let optimum = optimize(&p, settings, point_seed(seed, i), warm.as_ref())?;
        out.push(SweepPoint {
            axis_value: v,
            optimum,
        });
    }
    Ok(out)
}
