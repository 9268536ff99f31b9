//! Tail-bound solvers and the baseline bounds they are compared against.

mod baselines;
mod chernoff;
mod sampling;

pub use baselines::{
    baseline_curty, baseline_gaussian, expected_interval, gaussian_beta, CurtyThresholds, Interval,
};
pub use chernoff::{
    chernoff_delta_lower, chernoff_delta_upper, chernoff_lower_residual, chernoff_upper_residual,
    expected_lower, expected_lower_gap, expected_lower_residual, expected_upper,
    expected_upper_gap, expected_upper_residual,
};
pub use sampling::{
    baseline_sampling_analytic, baseline_sampling_fung, remaining_fraction_lower,
    sampling_gamma_lower, sampling_gamma_upper, sampling_lower_residual, sampling_upper_residual,
};
