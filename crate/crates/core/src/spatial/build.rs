use super::domain::{SpatialDataset, SplitRule};
use super::tree::{DecompTree, ReleaseParams, TreeNode};
use crate::dp::{split_budget, NoiseSource, PrivacyParams};
use crate::{Error, Result};

/// Depth beyond which no node is split. Halving a cell 52 times exhausts an
/// f64 mantissa; the cap does not depend on the data.
pub const DEFAULT_DEPTH_CAP: u32 = 40;

/// Structural options shared by the spatial builders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub depth_cap: u32,
    pub split: SplitRule,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { depth_cap: DEFAULT_DEPTH_CAP, split: SplitRule::AllDims }
    }
}

/// `max(θ - δ, c - depth·δ)`: the score a node is tested with.
#[inline]
pub fn biased_count(count: u64, depth: u32, theta: f64, delta: f64) -> f64 {
    (theta - delta).max(count as f64 - f64::from(depth) * delta)
}

/// Grow a tree breadth-first. `decide(count, depth, may_split)` returns
/// whether to split and the noisy count to publish on the node, if any.
fn grow<F>(data: &SpatialDataset, opts: &BuildOptions, mut decide: F) -> Vec<TreeNode>
where
    F: FnMut(u64, u32, bool) -> (bool, Option<f64>),
{
    let dims = data.dims();
    let mut nodes = vec![TreeNode::new(data.domain().clone(), 0)];
    let mut members: Vec<Vec<u32>> = vec![(0..data.len() as u32).collect()];
    let mut next = 0;
    while next < nodes.len() {
        let id = next;
        next += 1;
        let pts = std::mem::take(&mut members[id]);
        let depth = nodes[id].depth;
        let count = pts.len() as u64;
        let (split, noisy) = decide(count, depth, depth < opts.depth_cap);
        nodes[id].exact_count = Some(count);
        nodes[id].noisy_count = noisy;
        if !split {
            continue;
        }
        let split_dims = opts.split.dims_at(depth, dims);
        let region = nodes[id].region.clone();
        let kids = region.bisect(&split_dims);
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); kids.len()];
        for p in pts {
            buckets[region.bisect_code(&split_dims, data.point(p as usize))].push(p);
        }
        let first = nodes.len();
        nodes[id].children = (first..first + kids.len()).collect();
        for (child, bucket) in kids.into_iter().zip(buckets) {
            nodes.push(TreeNode::new(child, depth + 1));
            members.push(bucket);
        }
    }
    nodes
}

/// Private decomposition with constant noise scale.
///
/// Each node is tested with its biased count plus `Lap(λ)` noise and split
/// when the result exceeds `θ`. The returned tree carries regions only; use
/// [`attach_noisy_counts`] to publish counts.
pub fn build_privtree(
    data: &SpatialDataset,
    params: &PrivacyParams,
    opts: &BuildOptions,
    noise: &mut impl NoiseSource,
) -> Result<DecompTree> {
    let fanout = opts.split.fanout(data.dims());
    if params.beta != fanout {
        return Err(Error::param(format!(
            "parameters assume fanout {}, split rule gives {fanout}",
            params.beta
        )));
    }
    let (theta, delta, lambda) = (params.theta, params.delta, params.lambda);
    let nodes = grow(data, opts, |count, depth, may_split| {
        if !may_split {
            return (false, None);
        }
        let noisy = biased_count(count, depth, theta, delta) + noise.laplace(lambda);
        (noisy > theta, None)
    });
    let mut tree = DecompTree::from_nodes(nodes, fanout, ReleaseParams::from(params));
    tree.strip_exact_counts();
    Ok(tree)
}

/// Height-limited private quadtree: every node publishes `c + Lap(λ)` and is
/// split when that exceeds `θ` and its depth is below `height - 1`.
/// `ε`-private for `λ >= height / ε`.
pub fn build_simple_tree(
    data: &SpatialDataset,
    lambda: f64,
    theta: f64,
    height: u32,
    split: SplitRule,
    noise: &mut impl NoiseSource,
) -> Result<DecompTree> {
    if height < 1 {
        return Err(Error::param("tree height must be at least 1"));
    }
    crate::dp::check_scale(lambda)?;
    let opts = BuildOptions { depth_cap: height - 1, split };
    let nodes = grow(data, &opts, |count, _depth, may_split| {
        let noisy = count as f64 + noise.laplace(lambda);
        (may_split && noisy > theta, Some(noisy))
    });
    let params = ReleaseParams { epsilon: f64::from(height) / lambda, lambda, theta, delta: 0.0 };
    let mut tree = DecompTree::from_nodes(nodes, split.fanout(data.dims()), params);
    tree.strip_exact_counts();
    Ok(tree)
}

/// Publish `c(leaf) + Lap(1/ε_counts)` on every leaf; internal counts become
/// the sums of the leaves below them. Negative counts are kept.
pub fn attach_noisy_counts(
    mut tree: DecompTree,
    data: &SpatialDataset,
    epsilon_counts: f64,
    noise: &mut impl NoiseSource,
) -> Result<DecompTree> {
    if !(epsilon_counts.is_finite() && epsilon_counts > 0.0) {
        return Err(Error::param(format!("count budget must be positive, got {epsilon_counts}")));
    }
    if tree.domain() != data.domain() {
        return Err(Error::input("tree and dataset domains differ"));
    }
    let mut counts = vec![0u64; tree.len()];
    for p in data.points() {
        let leaf = tree.locate(p).ok_or_else(|| Error::input(format!("point {p:?} not covered by the tree")))?;
        counts[leaf] += 1;
    }
    let scale = 1.0 / epsilon_counts;
    let leaves: Vec<_> = tree.leaves().collect();
    for id in 0..tree.len() {
        tree.node_mut(id).noisy_count = None;
    }
    for leaf in leaves {
        tree.node_mut(leaf).noisy_count = Some(counts[leaf] as f64 + noise.laplace(scale));
    }
    tree.params_mut().epsilon += epsilon_counts;
    tree.refresh_counts();
    Ok(tree)
}

/// Structure and counts under one total budget: `ε·tree_share` for the
/// decomposition, the rest for the leaf counts.
pub fn release_privtree(
    data: &SpatialDataset,
    epsilon: f64,
    theta: f64,
    tree_share: f64,
    opts: &BuildOptions,
    noise: &mut impl NoiseSource,
) -> Result<DecompTree> {
    let (eps_tree, eps_counts) = split_budget(epsilon, tree_share)?;
    let params = PrivacyParams::privtree(eps_tree, opts.split.fanout(data.dims()), theta)?;
    let tree = build_privtree(data, &params, opts, noise)?;
    attach_noisy_counts(tree, data, eps_counts, noise)
}

/// Bins per dimension of the uniform grid: `ceil((nε/10)^{2/(d+2)})`, at
/// least one.
pub fn ug_bins(n: usize, epsilon: f64, dims: usize) -> usize {
    let m = (n as f64 * epsilon / 10.0).powf(2.0 / (dims as f64 + 2.0)).ceil();
    (m as usize).max(1)
}

/// Uniform grid baseline: `m^d` equal cells with `Lap(1/ε)` counts, as a
/// depth-1 tree.
pub fn build_ug(data: &SpatialDataset, epsilon: f64, noise: &mut impl NoiseSource) -> Result<DecompTree> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    let dims = data.dims();
    let m = ug_bins(data.len(), epsilon, dims);
    let cells = m.checked_pow(dims as u32).filter(|&c| c <= 50_000_000).ok_or_else(|| {
        Error::param(format!("uniform grid with {m} bins in {dims} dimensions is too large"))
    })?;
    let domain = data.domain();
    let bound = |dim: usize, j: usize| {
        if j == m {
            domain.hi[dim]
        } else {
            domain.lo[dim] + domain.width(dim) * j as f64 / m as f64
        }
    };

    // cell index is row-major with dimension 0 slowest
    let mut counts = vec![0u64; cells];
    for p in data.points() {
        let mut idx = 0;
        for (dim, &x) in p.iter().enumerate() {
            let mut j = (((x - domain.lo[dim]) / domain.width(dim)) * m as f64) as usize;
            j = j.min(m - 1);
            while j > 0 && x < bound(dim, j) {
                j -= 1;
            }
            while j + 1 < m && x >= bound(dim, j + 1) {
                j += 1;
            }
            idx = idx * m + j;
        }
        counts[idx] += 1;
    }

    let mut nodes = Vec::with_capacity(cells + 1);
    nodes.push(TreeNode::new(domain.clone(), 0));
    nodes[0].children = (1..=cells).collect();
    let scale = 1.0 / epsilon;
    let mut coord = vec![0usize; dims];
    for &count in &counts {
        let mut region = domain.clone();
        for (dim, &j) in coord.iter().enumerate() {
            region.lo[dim] = bound(dim, j);
            region.hi[dim] = bound(dim, j + 1);
        }
        let mut node = TreeNode::new(region, 1);
        node.noisy_count = Some(count as f64 + noise.laplace(scale));
        nodes.push(node);
        for dim in (0..dims).rev() {
            coord[dim] += 1;
            if coord[dim] < m {
                break;
            }
            coord[dim] = 0;
        }
    }
    let params = ReleaseParams { epsilon, lambda: scale, theta: 0.0, delta: 0.0 };
    Ok(DecompTree::from_nodes(nodes, cells as u32, params))
}
