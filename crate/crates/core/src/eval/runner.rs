use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{exact_range_count, mean, median, relative_error, sign_test_p_value};
use crate::dp::NoiseSource;
use crate::rng::substream;
use crate::spatial::{
    batch_range_count, build_simple_tree, build_ug, release_privtree, BuildOptions, DecompTree, RangeQuery,
    SpatialDataset,
};
use crate::{par, Error, Result};

/// A spatial synopsis under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Method {
    /// PrivTree with `tree_share` of the budget on the structure.
    PrivTree { tree_share: f64 },
    /// Fixed-height tree with noisy counts on every node; the budget is
    /// spread evenly over the `height` levels.
    SimpleTree { height: u32, theta: f64 },
    /// Uniform grid.
    Ug,
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::PrivTree { .. } => "privtree".into(),
            Method::SimpleTree { height, .. } => format!("simpletree-h{height}"),
            Method::Ug => "ug".into(),
        }
    }

    pub fn build(&self, data: &SpatialDataset, epsilon: f64, noise: &mut impl NoiseSource) -> Result<DecompTree> {
        match *self {
            Method::PrivTree { tree_share } => {
                release_privtree(data, epsilon, 0.0, tree_share, &BuildOptions::default(), noise)
            }
            Method::SimpleTree { height, theta } => {
                let lambda = f64::from(height) / epsilon;
                build_simple_tree(data, lambda, theta, height, BuildOptions::default().split, noise)
            }
            Method::Ug => build_ug(data, epsilon, noise),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "privtree" => Ok(Method::PrivTree { tree_share: 0.5 }),
            "ug" => Ok(Method::Ug),
            _ => s
                .strip_prefix("simpletree-h")
                .and_then(|h| h.parse().ok())
                .filter(|&h| h >= 1)
                .map(|height| Method::SimpleTree { height, theta: 0.0 })
                .ok_or_else(|| Error::param(format!("unknown method {s:?} (privtree, ug or simpletree-h<height>)"))),
        }
    }
}

/// Answers of one synopsis on one workload, scored against the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub estimates: Vec<f64>,
    pub exact: Vec<f64>,
    pub relative_errors: Vec<f64>,
    pub delta: f64,
    pub mean: f64,
    pub median: f64,
}

impl EvalReport {
    pub fn new(estimates: Vec<f64>, exact: Vec<f64>, delta: f64) -> Result<Self> {
        if estimates.len() != exact.len() {
            return Err(Error::param("estimate and exact answer counts differ"));
        }
        let relative_errors =
            estimates.iter().zip(&exact).map(|(&e, &x)| relative_error(e, x, delta)).collect::<Result<Vec<_>>>()?;
        Ok(EvalReport {
            mean: if relative_errors.is_empty() { 0.0 } else { mean(&relative_errors) },
            median: if relative_errors.is_empty() { 0.0 } else { median(&relative_errors) },
            estimates,
            exact,
            relative_errors,
            delta,
        })
    }
}

/// Exact answers for a workload, in parallel when enabled.
pub fn exact_answers(data: &SpatialDataset, queries: &[RangeQuery]) -> Result<Vec<f64>> {
    par::map_slice(queries, |q| exact_range_count(data, q).map(|c| c as f64)).into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub median_re: f64,
    pub mean_re: f64,
    pub nodes: usize,
    pub build_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub trials: Vec<TrialResult>,
    /// Median over trials of the per-trial median relative error.
    pub median_re: f64,
    pub mean_re: f64,
}

/// Paired comparison of the first method against another: trials where the
/// first method's median error is strictly lower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub method: String,
    pub against: String,
    pub wins: usize,
    pub trials: usize,
    pub sign_test_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub n: usize,
    pub epsilon: f64,
    pub queries: usize,
    pub delta: f64,
    pub seed: u64,
    pub methods: Vec<MethodSummary>,
    pub comparisons: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialPlan {
    pub methods: Vec<Method>,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    pub delta: f64,
}

/// Run every method `trials` times on the same data and workload.
///
/// Trial `i` of method `m` draws its noise from substream
/// `i·|methods| + m` of the seed, so results do not depend on scheduling
/// and trials are paired across methods.
pub fn run_trials(data: &SpatialDataset, queries: &[RangeQuery], plan: &TrialPlan) -> Result<TrialReport> {
    if plan.methods.is_empty() || plan.trials == 0 {
        return Err(Error::param("need at least one method and one trial"));
    }
    let exact = exact_answers(data, queries)?;
    let m = plan.methods.len();
    let results = par::map_indices(plan.trials * m, |job| -> Result<TrialResult> {
        let (trial, k) = (job / m, job % m);
        let mut rng = substream(plan.seed, job as u64);
        let start = Instant::now();
        let tree = plan.methods[k].build(data, plan.epsilon, &mut rng)?;
        let build_seconds = start.elapsed().as_secs_f64();
        let report = EvalReport::new(batch_range_count(&tree, queries)?, exact.clone(), plan.delta)?;
        Ok(TrialResult { trial, median_re: report.median, mean_re: report.mean, nodes: tree.len(), build_seconds })
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let methods: Vec<MethodSummary> = (0..m)
        .map(|k| {
            let trials: Vec<TrialResult> = results.iter().skip(k).step_by(m).cloned().collect();
            let medians: Vec<f64> = trials.iter().map(|t| t.median_re).collect();
            MethodSummary { method: plan.methods[k].name(), median_re: median(&medians), mean_re: mean(&medians), trials }
        })
        .collect();
    let comparisons = (1..m)
        .map(|k| {
            let wins = methods[0].trials.iter().zip(&methods[k].trials).filter(|(a, b)| a.median_re < b.median_re).count();
            Comparison {
                method: methods[0].method.clone(),
                against: methods[k].method.clone(),
                wins,
                trials: plan.trials,
                sign_test_p: sign_test_p_value(wins, plan.trials),
            }
        })
        .collect();
    Ok(TrialReport {
        n: data.len(),
        epsilon: plan.epsilon,
        queries: queries.len(),
        delta: plan.delta,
        seed: plan.seed,
        methods,
        comparisons,
    })
}

impl TrialReport {
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "n = {}, epsilon = {}, {} queries, delta = {}\n{:<16} {:>12} {:>12} {:>10} {:>10}\n",
            self.n, self.epsilon, self.queries, self.delta, "method", "median_re", "mean_re", "nodes", "build_s"
        );
        for m in &self.methods {
            let nodes = mean(&m.trials.iter().map(|t| t.nodes as f64).collect::<Vec<_>>());
            let secs = mean(&m.trials.iter().map(|t| t.build_seconds).collect::<Vec<_>>());
            s += &format!("{:<16} {:>12.6} {:>12.6} {:>10.1} {:>10.4}\n", m.method, m.median_re, m.mean_re, nodes, secs);
        }
        for c in &self.comparisons {
            s += &format!(
                "{} beats {} in {}/{} trials (sign test p = {:.4})\n",
                c.method, c.against, c.wins, c.trials, c.sign_test_p
            );
        }
        s
    }
}
