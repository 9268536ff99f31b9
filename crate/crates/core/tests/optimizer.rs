use tfqkd_core::budget::{Protocol, SecurityBudget};
use tfqkd_core::channel::SystemConfig;
use tfqkd_core::engine::EngineOptions;
use tfqkd_core::optimizer::{
    local_search, optimize, reduce, screen_starts, sweep, OptimizerSettings, ParameterSpace,
    Problem, SweepAxis,
};

fn problem(protocol: Protocol, distance: f64) -> Problem {
    Problem {
        cfg: SystemConfig { distance, ..SystemConfig::default() },
        protocol,
        budget: SecurityBudget { protocol, ..SecurityBudget::default() },
        space: ParameterSpace::default(),
        options: EngineOptions::default(),
    }
}

fn quick() -> OptimizerSettings {
    OptimizerSettings { screen_points: 64, restarts: 4, ..OptimizerSettings::default() }
}

#[test]
fn optimum_beats_every_start() {
    for p in [Protocol::P1, Protocol::P2] {
        let pr = problem(p, 300.0);
        let starts = screen_starts(&pr, &quick(), 3, None);
        let best = optimize(&pr, &quick(), 3, None).unwrap();
        assert!(best.result.rate > 0.0);
        for s in &starts {
            assert!(best.result.rate >= pr.score(s));
        }
    }
}

#[test]
fn split_pipeline_matches_optimize() {
    let pr = problem(Protocol::P2, 400.0);
    let starts = screen_starts(&pr, &quick(), 9, None);
    let locals: Vec<_> = starts.iter().rev().map(|s| local_search(&pr, &quick(), s)).collect();
    let mut reordered = locals.clone();
    reordered.reverse();
    let a = reduce(&pr, &reordered).unwrap();
    let b = optimize(&pr, &quick(), 9, None).unwrap();
    assert_eq!(a.coords, b.coords);
    assert_eq!(a.result.rate, b.result.rate);
}

#[test]
fn same_seed_same_answer() {
    let pr = problem(Protocol::P2, 250.0);
    let a = optimize(&pr, &quick(), 42, None).unwrap();
    let b = optimize(&pr, &quick(), 42, None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweep_is_decreasing_in_distance() {
    let pr = problem(Protocol::P1, 0.0);
    let grid: Vec<f64> = (0..6).map(|i| 100.0 * i as f64).collect();
    let pts = sweep(&pr, SweepAxis::Distance, &grid, &quick(), 1).unwrap();
    assert_eq!(pts.len(), grid.len());
    for w in pts.windows(2) {
        assert!(w[1].optimum.result.rate <= w[0].optimum.result.rate);
    }
}

#[test]
fn far_beyond_reach_is_all_zero() {
    let pr = problem(Protocol::P2, 2000.0);
    let r = optimize(&pr, &quick(), 0, None).unwrap();
    assert!(r.all_zero);
    assert_eq!(r.result.rate, 0.0);
}
