use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::rng::stream;
use crate::spatial::{RangeQuery, SpatialDomain};
use crate::{Error, Result};

/// Query size class by covered fraction of the domain volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    /// [0.01%, 0.1%)
    Small,
    /// [0.1%, 1%)
    Medium,
    /// [1%, 10%)
    Large,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::Small, SizeClass::Medium, SizeClass::Large];

    /// Half-open range of volume fractions.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            SizeClass::Small => (1e-4, 1e-3),
            SizeClass::Medium => (1e-3, 1e-2),
            SizeClass::Large => (1e-2, 1e-1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Large => "large",
        }
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SizeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SizeClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::param(format!("unknown size class {s:?} (expected small, medium or large)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub size_class: SizeClass,
    pub count: usize,
    pub seed: u64,
}

/// Random axis-aligned boxes inside `domain`.
///
/// The volume fraction `f` is log-uniform over the class range. It is
/// spread over the dimensions with a flat Dirichlet draw `w`, so the side
/// along dimension `i` covers `f^{w_i}` of the domain width; the box is then
/// placed uniformly at random.
pub fn gen_workload(domain: &SpatialDomain, spec: &WorkloadSpec) -> Vec<RangeQuery> {
    let mut rng = stream(spec.seed);
    let (lo_f, hi_f) = spec.size_class.bounds();
    let d = domain.dims();
    (0..spec.count)
        .map(|_| {
            let f = (lo_f.ln() + rng.random::<f64>() * (hi_f.ln() - lo_f.ln())).exp();
            let e: Vec<f64> = (0..d).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = e.iter().sum();
            let mut lo = Vec::with_capacity(d);
            let mut hi = Vec::with_capacity(d);
            for (i, ei) in e.iter().enumerate() {
                let side = domain.width(i) * f.powf(ei / total);
                let start = domain.lo[i] + rng.random::<f64>() * (domain.width(i) - side);
                lo.push(start);
                hi.push((start + side).min(domain.hi[i]));
            }
            RangeQuery { lo, hi }
        })
        .collect()
}
