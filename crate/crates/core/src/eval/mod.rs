//! Evaluation harness: workloads, error metrics, synthetic data and a
//! seeded multi-trial runner comparing spatial synopses.

mod data;
mod metrics;
mod runner;
mod workload;

pub use data::{gaussian_mixture, uniform_points};
pub use metrics::{
    default_delta, empirical_distribution, exact_range_count, mean, median, relative_error, sign_test_p_value,
    topk_precision, total_variation,
};
pub use runner::{
    exact_answers, run_trials, Comparison, EvalReport, Method, MethodSummary, TrialPlan, TrialReport, TrialResult,
};
pub use workload::{gen_workload, SizeClass, WorkloadSpec};
