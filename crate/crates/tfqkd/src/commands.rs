//! The `rate`, `sweep` and `compare-bounds` subcommands as library calls.

use anyhow::{anyhow, Result};
use tfqkd_core::bounds::{
    baseline_curty, baseline_gaussian, baseline_sampling_analytic, baseline_sampling_fung,
    expected_interval, sampling_gamma_lower, sampling_gamma_upper,
};
use tfqkd_core::budget::Protocol;
use tfqkd_core::channel::{plob_bound, SystemConfig};
use tfqkd_core::engine::{evaluate, KeyRateResult, ProtocolParams};
use tfqkd_core::optimizer::{Problem, SweepAxis};

use crate::config::RunConfig;
use crate::parallel;
use crate::table::{num, opt, sci, Table};

/// One evaluated or optimized operating point.
#[derive(Clone, Debug, PartialEq)]
pub struct RatePoint {
    pub protocol: Protocol,
    pub system: SystemConfig,
    pub params: ProtocolParams,
    pub result: KeyRateResult,
    /// Objective evaluations spent; zero for a fixed-parameter run.
    pub evaluations: usize,
}

fn problem(cfg: &RunConfig) -> Problem {
    Problem {
        cfg: cfg.system(),
        protocol: cfg.protocol(),
        budget: cfg.budget(),
        space: cfg.space(),
        options: cfg.engine(),
    }
}

/// Evaluates the fixed parameters if the config has them, otherwise
/// optimizes.
pub fn rate(cfg: &RunConfig) -> Result<RatePoint> {
    cfg.validate()?;
    let pr = problem(cfg);
    if let Some(p) = cfg.params {
        let params = ProtocolParams::from(p);
        let result = evaluate(pr.protocol, &pr.cfg, &params, &pr.budget, &pr.options)?;
        return Ok(RatePoint {
            protocol: pr.protocol,
            system: pr.cfg,
            params,
            result,
            evaluations: 0,
        });
    }
    let settings = cfg.optimizer();
    let best = parallel::with_threads(cfg.threads, || parallel::optimize(&pr, &settings, cfg.seed, None))??;
    Ok(RatePoint {
        protocol: pr.protocol,
        system: pr.cfg,
        params: best.params,
        result: best.result,
        evaluations: best.evaluations,
    })
}

/// Runs the configured sweep once per misalignment value.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<RatePoint>> {
    cfg.validate()?;
    let s = cfg.sweep.as_ref().ok_or_else(|| anyhow!("config has no [sweep] section"))?;
    let grid = s.grid()?;
    let series = if s.misalignment.is_empty() {
        vec![cfg.system.misalignment]
    } else {
        s.misalignment.clone()
    };
    let settings = cfg.optimizer();
    let mut out = Vec::new();
    for (i, &ed) in series.iter().enumerate() {
        let mut pr = problem(cfg);
        pr.cfg.misalignment = ed;
        let seed = cfg.seed.wrapping_add(i as u64);
        let pts = parallel::with_threads(cfg.threads, || {
            parallel::sweep(&pr, s.axis.into(), &grid, &settings, seed)
        })??;
        for p in pts {
            out.push(RatePoint {
                protocol: pr.protocol,
                system: SweepAxis::from(s.axis).apply(&pr.cfg, p.axis_value),
                params: p.optimum.params,
                result: p.optimum.result,
                evaluations: p.optimum.evaluations,
            });
        }
    }
    Ok(out)
}

pub const RATE_HEADER: [&str; 21] = [
    "distance_km",
    "total_pulses",
    "misalignment",
    "rate_per_pulse",
    "ell_bits",
    "plob_per_pulse",
    "phi_z",
    "e_x_upper",
    "aborted",
    "abort_reason",
    "mu",
    "p_z",
    "nu",
    "omega",
    "p_nu",
    "p_omega",
    "n_bits",
    "k_bits",
    "e_z",
    "leak_ec_bits",
    "evaluations",
];

pub fn rate_table(points: &[RatePoint]) -> Table {
    let mut t = Table::new(&RATE_HEADER);
    for p in points {
        let r = &p.result;
        let d = &r.diagnostics;
        let decoy = |v: f64| if p.protocol == Protocol::P2 { num(v) } else { String::new() };
        let finite = |v: f64| if v.is_finite() { num(v) } else { String::new() };
        t.push(vec![
            num(p.system.distance),
            num(p.system.total_pulses),
            num(p.system.misalignment),
            sci(r.rate),
            num(r.ell),
            sci(plob_bound(&p.system)),
            finite(r.phi_z),
            opt(r.e_x_upper.or((p.protocol == Protocol::P1).then_some(d.e_x)), num),
            r.aborted.to_string(),
            r.abort_reason.map(|a| format!("{a:?}")).unwrap_or_default(),
            num(p.params.mu),
            num(p.params.p_z),
            decoy(p.params.nu),
            decoy(p.params.omega),
            decoy(p.params.p_nu),
            decoy(p.params.p_omega),
            num(d.n),
            num(d.k),
            num(d.e_z),
            num(r.leak_ec),
            p.evaluations.to_string(),
        ]);
    }
    t
}

/// Human-readable summary of one point.
pub fn describe(p: &RatePoint) -> String {
    let r = &p.result;
    let mut s = format!(
        "{:?} at {} km, N = {:e}\n  ell = {} bits, rate = {:e} per pulse (PLOB {:e})\n",
        p.protocol,
        p.system.distance,
        p.system.total_pulses,
        r.ell,
        r.rate,
        plob_bound(&p.system)
    );
    match r.abort_reason {
        Some(reason) => s += &format!("  aborted: {reason:?}\n"),
        None => s += &format!("  phi_z = {}, leak_ec = {} bits\n", r.phi_z, r.leak_ec),
    }
    s += &format!("  params: {:?}\n", p.params);
    let d = &r.diagnostics;
    s += &format!(
        "  n = {}, k = {}, E_Z = {}, E_X = {}, gamma = {}, bounds used = {}/{}/{}",
        d.n, d.k, d.e_z, d.e_x, d.gamma, d.usage.sampling, d.usage.chernoff, d.usage.inverse_chernoff
    );
    s
}

/// Interval table, gap table and sampling-deviation table, in that order.
pub fn compare_bounds(cfg: &RunConfig) -> Result<[(&'static str, Table); 3]> {
    cfg.validate()?;
    let b = cfg.bounds;
    let mut intervals = Table::new(&[
        "x_counts",
        "chernoff_lower",
        "chernoff_upper",
        "gaussian_lower",
        "gaussian_upper",
        "curty_lower",
        "curty_upper",
    ]);
    let mut gaps = Table::new(&[
        "x_counts",
        "chernoff_upper_gap",
        "chernoff_lower_gap",
        "gaussian_upper_gap",
        "gaussian_lower_gap",
        "curty_upper_gap",
        "curty_lower_gap",
    ]);
    for x in 0..=b.x_max {
        let x = f64::from(x);
        let l = expected_interval(x, b.eps)?;
        let g = baseline_gaussian(x, b.eps)?;
        let c = baseline_curty(x, b.eps)?;
        intervals.push(vec![
            num(x),
            num(l.lower),
            num(l.upper),
            num(g.lower),
            num(g.upper),
            num(c.lower),
            num(c.upper),
        ]);
        gaps.push(vec![
            num(x),
            num(l.upper - x),
            num(x - l.lower),
            num(g.upper - x),
            num(x - g.lower),
            num(c.upper - x),
            num(x - c.lower),
        ]);
    }
    let mut sampling = Table::new(&[
        "k_bits",
        "gamma_exact",
        "gamma_fung",
        "gamma_analytic",
        "gamma_lower",
    ]);
    for i in 0..b.k_points {
        let k = if b.k_points == 1 {
            b.k_min
        } else {
            let t = i as f64 / (b.k_points - 1) as f64;
            (b.k_min.ln() + t * (b.k_max.ln() - b.k_min.ln())).exp().round()
        };
        let exact = sampling_gamma_upper(b.n, k, b.lambda, b.eps)?;
        let fung = baseline_sampling_fung(b.n, k, b.lambda, b.eps)?;
        let analytic = baseline_sampling_analytic(b.n, k, b.lambda, b.eps).ok();
        let lower = sampling_gamma_lower(b.n, k, b.lambda, b.eps)?.map(|s| s.value);
        sampling.push(vec![num(k), num(exact.value), num(fung.value), opt(analytic, num), opt(lower, num)]);
    }
    Ok([("intervals.csv", intervals), ("gaps.csv", gaps), ("sampling.csv", sampling)])
}
