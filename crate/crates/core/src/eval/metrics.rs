use std::collections::HashSet;
use std::hash::Hash;

use crate::spatial::{RangeQuery, SpatialDataset};
use crate::{Error, Result};

/// `|estimate − exact| / max(exact, delta)`.
pub fn relative_error(estimate: f64, exact: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::param(format!("smoothing delta must be positive, got {delta}")));
    }
    if !(exact >= 0.0) {
        return Err(Error::param(format!("exact answer must be nonnegative, got {exact}")));
    }
    Ok((estimate - exact).abs() / exact.max(delta))
}

/// Default smoothing: 0.1% of the dataset cardinality.
pub fn default_delta(n: usize) -> f64 {
    0.001 * n as f64
}

/// `|returned ∩ exact| / k`.
pub fn topk_precision<T: Eq + Hash>(returned: &[T], exact: &[T], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    let truth: HashSet<&T> = exact.iter().collect();
    let hits = returned.iter().collect::<HashSet<_>>().into_iter().filter(|x| truth.contains(x)).count();
    Ok(hits as f64 / k as f64)
}

/// Half the L1 distance between two distributions on `0..len`; the shorter
/// one is padded with zeros.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    for (name, d) in [("p", p), ("q", q)] {
        if d.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::param(format!("{name} has a negative or NaN mass")));
        }
        let s: f64 = d.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("{name} sums to {s}, not 1")));
        }
    }
    let len = p.len().max(q.len());
    let at = |d: &[f64], i: usize| d.get(i).copied().unwrap_or(0.0);
    Ok(0.5 * (0..len).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>())
}

/// Normalized histogram of small nonnegative integers (e.g. lengths).
pub fn empirical_distribution(values: impl IntoIterator<Item = usize>) -> Vec<f64> {
    let mut counts: Vec<f64> = Vec::new();
    let mut n = 0.0;
    for v in values {
        if counts.len() <= v {
            counts.resize(v + 1, 0.0);
        }
        counts[v] += 1.0;
        n += 1.0;
    }
    if n > 0.0 {
        counts.iter_mut().for_each(|c| *c /= n);
    }
    counts
}

/// Points of `data` in `q` by linear scan, with the same boundary rule as
/// the trees: half-open boxes whose faces on the domain's upper boundary
/// are closed.
pub fn exact_range_count(data: &SpatialDataset, q: &RangeQuery) -> Result<u64> {
    if q.dims() != data.dims() {
        return Err(Error::input(format!("query has {} dimensions, data has {}", q.dims(), data.dims())));
    }
    let top = &data.domain().hi;
    let inside = |p: &[f64]| {
        (0..p.len()).all(|i| q.lo[i] <= p[i] && (p[i] < q.hi[i] || (p[i] == q.hi[i] && q.hi[i] == top[i])))
    };
    Ok(data.points().filter(|p| inside(p)).count() as u64)
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// One-sided sign test: probability of at least `wins` successes in
/// `trials` fair coin flips.
pub fn sign_test_p_value(wins: usize, trials: usize) -> f64 {
    if wins > trials {
        return 0.0;
    }
    // pmf(i) = C(n, i) / 2^n accumulated in log space
    let ln2 = std::f64::consts::LN_2;
    let mut log_c = 0.0;
    let mut tail = 0.0;
    for i in 0..=trials {
        if i > 0 {
            log_c += ((trials - i + 1) as f64).ln() - (i as f64).ln();
        }
        if i >= wins {
            tail += (log_c - trials as f64 * ln2).exp();
        }
    }
    tail.min(1.0)
}
