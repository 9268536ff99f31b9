//! Thread-parallel versions of the core search. Local searches run on the
//! rayon pool and are reduced in start order, so the answers match the
//! sequential core functions exactly.

use rayon::prelude::*;
use tfqkd_core::engine::ProtocolParams;
use tfqkd_core::optimizer::{
    local_search, point_seed, reduce, screen_starts, LocalResult, OptimizeResult,
    OptimizerSettings, Problem, SweepAxis, SweepPoint,
};
use tfqkd_core::Result;

pub fn optimize(
    problem: &Problem,
    settings: &OptimizerSettings,
    seed: u64,
    warm: Option<&ProtocolParams>,
) -> Result<OptimizeResult> {
    problem.validate()?;
    let starts = screen_starts(problem, settings, seed, warm);
    let results: Vec<LocalResult> = starts
        .par_iter()
        .map(|s| local_search(problem, settings, s))
        .collect();
    let mut out = reduce(problem, &results)?;
    out.evaluations += settings.screen_points;
    Ok(out)
}

/// Same contract as the core sweep: points in grid order, each warm-started
/// from the previous optimum.
pub fn sweep(
    problem: &Problem,
    axis: SweepAxis,
    grid: &[f64],
    settings: &OptimizerSettings,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(tfqkd_core::Error::Domain("sweep grid is empty"));
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

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    match threads {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f)),
        None => Ok(f()),
    }
}
