use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Axis-aligned box `[lo, hi)` in `d` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SpatialDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::param(format!(
                "domain needs matching non-empty bounds, got {} and {} coordinates",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::param(format!("dimension {i}: need lo < hi, got [{l}, {h})")));
            }
        }
        Ok(SpatialDomain { lo, hi })
    }

    /// The unit cube `[0, 1)^dims`.
    pub fn unit(dims: usize) -> Self {
        SpatialDomain { lo: vec![0.0; dims], hi: vec![1.0; dims] }
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn width(&self, dim: usize) -> f64 {
        self.hi[dim] - self.lo[dim]
    }

    pub fn mid(&self, dim: usize) -> f64 {
        0.5 * (self.lo[dim] + self.hi[dim])
    }

    /// Children obtained by halving every dimension in `dims`. Child `c` takes
    /// the upper half of `dims[j]` iff bit `j` of `c` is set.
    pub fn bisect(&self, dims: &[usize]) -> Vec<SpatialDomain> {
        (0..1usize << dims.len())
            .map(|code| {
                let mut child = self.clone();
                for (j, &d) in dims.iter().enumerate() {
                    let mid = self.mid(d);
                    if code >> j & 1 == 1 {
                        child.lo[d] = mid;
                    } else {
                        child.hi[d] = mid;
                    }
                }
                child
            })
            .collect()
    }

    /// Index of the child from [`SpatialDomain::bisect`] that holds `p`.
    #[inline]
    pub fn bisect_code(&self, dims: &[usize], p: &[f64]) -> usize {
        dims.iter()
            .enumerate()
            .fold(0, |code, (j, &d)| if p[d] >= self.mid(d) { code | 1 << j } else { code })
    }

    /// Membership under half-open semantics, except that faces shared with
    /// `outer`'s upper boundary are closed.
    pub fn holds(&self, p: &[f64], outer: &SpatialDomain) -> bool {
        (0..self.dims()).all(|i| {
            let x = p[i];
            self.lo[i] <= x && (x < self.hi[i] || (x == self.hi[i] && self.hi[i] == outer.hi[i]))
        })
    }

    /// Intersection with another box, `None` if it has zero volume.
    pub fn intersect(&self, lo: &[f64], hi: &[f64]) -> Option<SpatialDomain> {
        let mut out = self.clone();
        for i in 0..self.dims() {
            out.lo[i] = out.lo[i].max(lo[i]);
            out.hi[i] = out.hi[i].min(hi[i]);
            if out.lo[i] >= out.hi[i] {
                return None;
            }
        }
        Some(out)
    }

    /// `vol(self ∩ [lo, hi)) / vol(self)`, computed per dimension so deep
    /// cells do not underflow.
    pub fn overlap_fraction(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let mut frac = 1.0;
        for i in 0..self.dims() {
            let a = self.lo[i].max(lo[i]);
            let b = self.hi[i].min(hi[i]);
            if a >= b {
                return 0.0;
            }
            frac *= (b - a) / self.width(i);
        }
        frac
    }

    /// Whether `self` lies inside `[lo, hi]`.
    pub fn within(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..self.dims()).all(|i| lo[i] <= self.lo[i] && self.hi[i] <= hi[i])
    }
}

/// How a node's region is cut into children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[derive(Default)]
pub enum SplitRule {
    /// Halve every dimension at every level (fanout `2^d`).
    #[default]
    AllDims,
    /// Halve `per_level` dimensions per level, cycling through them
    /// (fanout `2^per_level`).
    RoundRobin { per_level: usize },
}


impl SplitRule {
    /// Rule whose fanout is `fanout` in `dims` dimensions.
    pub fn for_fanout(fanout: u32, dims: usize) -> Result<Self> {
        if fanout < 2 || !fanout.is_power_of_two() {
            return Err(Error::param(format!("fanout must be a power of two >= 2, got {fanout}")));
        }
        let per_level = fanout.trailing_zeros() as usize;
        if per_level > dims {
            return Err(Error::param(format!("fanout {fanout} needs {per_level} dimensions, data has {dims}")));
        }
        Ok(if per_level == dims { SplitRule::AllDims } else { SplitRule::RoundRobin { per_level } })
    }

    pub fn split_dims(&self, dims: usize) -> usize {
        match *self {
            SplitRule::AllDims => dims,
            SplitRule::RoundRobin { per_level } => per_level.min(dims),
        }
    }

    pub fn fanout(&self, dims: usize) -> u32 {
        1 << self.split_dims(dims)
    }

    /// Dimensions halved at `depth`.
    pub fn dims_at(&self, depth: u32, dims: usize) -> Vec<usize> {
        let k = self.split_dims(dims);
        let start = depth as usize * k;
        (0..k).map(|j| (start + j) % dims).collect()
    }
}

/// Points inside a domain, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialDataset {
    domain: SpatialDomain,
    coords: Vec<f64>,
}

impl SpatialDataset {
    /// Fails if any point lies outside the domain (upper faces of the domain
    /// itself are inclusive).
    pub fn new(domain: SpatialDomain, points: Vec<Vec<f64>>) -> Result<Self> {
        let d = domain.dims();
        let mut coords = Vec::with_capacity(points.len() * d);
        for (i, p) in points.into_iter().enumerate() {
            if p.len() != d {
                return Err(Error::input(format!("point {i} has {} coordinates, domain has {d}", p.len())));
            }
            if !domain.holds(&p, &domain) {
                return Err(Error::input(format!("point {i} {p:?} lies outside the domain")));
            }
            coords.extend(p);
        }
        Ok(SpatialDataset { domain, coords })
    }

    /// Dataset from row-major coordinates.
    pub fn from_flat(domain: SpatialDomain, coords: Vec<f64>) -> Result<Self> {
        let d = domain.dims();
        if !coords.len().is_multiple_of(d) {
            return Err(Error::input("coordinate count is not a multiple of the dimension"));
        }
        if let Some(i) = coords.chunks_exact(d).position(|p| !domain.holds(p, &domain)) {
            return Err(Error::input(format!("point {i} lies outside the domain")));
        }
        Ok(SpatialDataset { domain, coords })
    }

    pub fn domain(&self) -> &SpatialDomain {
        &self.domain
    }

    pub fn dims(&self) -> usize {
        self.domain.dims()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dims()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dims();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dims())
    }

    /// Copy with one more point (a neighboring dataset).
    pub fn with_point(&self, p: &[f64]) -> Result<Self> {
        let mut coords = self.coords.clone();
        coords.extend_from_slice(p);
        SpatialDataset::from_flat(self.domain.clone(), coords)
    }
}

/// Axis-aligned query box. Points count when `lo <= p < hi` per dimension,
/// with faces on the domain's upper boundary closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeQuery {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl RangeQuery {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::param("query bounds must have equal non-zero length"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::param(format!("query needs lo <= hi, got {lo:?} / {hi:?}")));
        }
        Ok(RangeQuery { lo, hi })
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn whole(domain: &SpatialDomain) -> Self {
        RangeQuery { lo: domain.lo.clone(), hi: domain.hi.clone() }
    }

    /// Fraction of `domain`'s volume covered by the query.
    pub fn coverage(&self, domain: &SpatialDomain) -> f64 {
        domain.overlap_fraction(&self.lo, &self.hi)
    }
}
