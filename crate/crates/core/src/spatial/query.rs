use super::domain::RangeQuery;
use super::tree::{DecompTree, NodeId};
use crate::{par, Error, Result};

/// Estimated number of points in `q`.
///
/// Top-down: cells disjoint from the query contribute nothing, cells inside
/// it contribute their count, and partially covered leaves contribute their
/// count scaled by the covered volume fraction. Parts of `q` outside the
/// domain are ignored.
pub fn range_count(tree: &DecompTree, q: &RangeQuery) -> Result<f64> {
    if q.dims() != tree.domain().dims() {
        return Err(Error::input(format!(
            "query has {} dimensions, tree has {}",
            q.dims(),
            tree.domain().dims()
        )));
    }
    if !tree.has_counts() {
        return Err(Error::input("tree carries no counts"));
    }
    Ok(visit(tree, tree.root(), q))
}

fn visit(tree: &DecompTree, id: NodeId, q: &RangeQuery) -> f64 {
    let node = tree.node(id);
    let region = &node.region;
    if region.intersect(&q.lo, &q.hi).is_none() {
        return 0.0;
    }
    let count = tree.count(id).unwrap_or(0.0);
    if region.within(&q.lo, &q.hi) {
        return count;
    }
    if node.is_leaf() {
        return count * region.overlap_fraction(&q.lo, &q.hi);
    }
    node.children.iter().map(|&c| visit(tree, c, q)).sum()
}

/// [`range_count`] over a workload, in parallel when enabled.
pub fn batch_range_count(tree: &DecompTree, queries: &[RangeQuery]) -> Result<Vec<f64>> {
    par::map_slice(queries, |q| range_count(tree, q)).into_iter().collect()
}

/// [`batch_range_count`] on the calling thread only.
pub fn batch_range_count_seq(tree: &DecompTree, queries: &[RangeQuery]) -> Result<Vec<f64>> {
    queries.iter().map(|q| range_count(tree, q)).collect()
}
