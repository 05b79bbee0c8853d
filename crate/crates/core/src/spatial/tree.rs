use serde::{Deserialize, Serialize};

use super::domain::SpatialDomain;
use crate::dp::PrivacyParams;
use crate::{Error, Result};

pub type NodeId = usize;

/// One node of a released decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub region: SpatialDomain,
    pub depth: u32,
    /// Empty iff the node is a leaf.
    pub children: Vec<NodeId>,
    /// True point count. Only populated transiently while building and never
    /// written to a release artifact.
    pub exact_count: Option<u64>,
    /// Published noisy count.
    pub noisy_count: Option<f64>,
}

impl TreeNode {
    pub(crate) fn new(region: SpatialDomain, depth: u32) -> Self {
        TreeNode { region, depth, children: Vec::new(), exact_count: None, noisy_count: None }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Parameters recorded alongside a released tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseParams {
    /// Total budget consumed by the artifact.
    pub epsilon: f64,
    pub lambda: f64,
    pub theta: f64,
    pub delta: f64,
}

impl From<&PrivacyParams> for ReleaseParams {
    fn from(p: &PrivacyParams) -> Self {
        ReleaseParams { epsilon: p.epsilon, lambda: p.lambda, theta: p.theta, delta: p.delta }
    }
}

/// Hierarchical decomposition stored as an arena. Node 0 is the root and
/// nodes are in breadth-first order.
#[derive(Debug, Clone)]
pub struct DecompTree {
    nodes: Vec<TreeNode>,
    fanout: u32,
    params: ReleaseParams,
    /// Count answered for each node: its own noisy count when it has one,
    /// otherwise the sum over its children. NaN where counts are missing.
    derived: Vec<f64>,
}

impl PartialEq for DecompTree {
    fn eq(&self, other: &Self) -> bool {
        self.fanout == other.fanout && self.params == other.params && self.nodes == other.nodes
    }
}

impl DecompTree {
    pub(crate) fn from_nodes(nodes: Vec<TreeNode>, fanout: u32, params: ReleaseParams) -> Self {
        let mut t = DecompTree { nodes, fanout, params, derived: Vec::new() };
        t.refresh_counts();
        t
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn fanout(&self) -> u32 {
        self.fanout
    }

    pub fn params(&self) -> &ReleaseParams {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut ReleaseParams {
        &mut self.params
    }

    pub fn domain(&self) -> &SpatialDomain {
        &self.nodes[0].region
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf())
    }

    pub fn height(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Split flags in breadth-first order; identifies the tree shape.
    pub fn split_signature(&self) -> Vec<bool> {
        self.nodes.iter().map(|n| !n.is_leaf()).collect()
    }

    /// `(depth, lo, hi, is_leaf)` for every node, sorted. Two trees over the
    /// same domain are structurally equal iff their cells are equal.
    pub fn cells(&self) -> Vec<(u32, Vec<f64>, Vec<f64>, bool)> {
        let mut cells: Vec<_> = self
            .nodes
            .iter()
            .map(|n| (n.depth, n.region.lo.clone(), n.region.hi.clone(), n.is_leaf()))
            .collect();
        cells.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then_with(|| cmp_slices(&a.1, &b.1))
                .then_with(|| cmp_slices(&a.2, &b.2))
        });
        cells
    }

    /// Whether every node can answer a count.
    pub fn has_counts(&self) -> bool {
        self.derived.first().is_some_and(|c| !c.is_nan())
    }

    /// Count attributed to `id`: its own noisy count, or the sum of the
    /// noisy counts of the leaves beneath it.
    pub fn count(&self, id: NodeId) -> Option<f64> {
        let c = self.derived[id];
        (!c.is_nan()).then_some(c)
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut TreeNode {
        &mut self.nodes[id]
    }

    pub(crate) fn refresh_counts(&mut self) {
        let mut derived = vec![f64::NAN; self.nodes.len()];
        // children always follow their parent in the arena
        for id in (0..self.nodes.len()).rev() {
            let n = &self.nodes[id];
            derived[id] = match n.noisy_count {
                Some(c) => c,
                None if n.is_leaf() => f64::NAN,
                None => n.children.iter().map(|&c| derived[c]).sum(),
            };
        }
        self.derived = derived;
    }

    /// Drop every exact count.
    pub(crate) fn strip_exact_counts(&mut self) {
        for n in &mut self.nodes {
            n.exact_count = None;
        }
    }

    /// Leaf containing `p`, descending from the root.
    pub fn locate(&self, p: &[f64]) -> Option<NodeId> {
        let outer = self.domain();
        if !outer.holds(p, outer) {
            return None;
        }
        let mut id = 0;
        while !self.nodes[id].is_leaf() {
            id = *self.nodes[id].children.iter().find(|&&c| self.nodes[c].region.holds(p, outer))?;
        }
        Some(id)
    }

    /// Structural checks: arena order, depths, and that children tile their
    /// parent (volumes sum to the parent's, no two overlap).
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::input("tree has no nodes"));
        }
        if self.nodes[0].depth != 0 {
            return Err(Error::input("root depth must be 0"));
        }
        let mut seen_parent = vec![false; self.nodes.len()];
        seen_parent[0] = true;
        for (id, n) in self.nodes.iter().enumerate() {
            if n.region.dims() != self.domain().dims() {
                return Err(Error::input(format!("node {id} has wrong dimensionality")));
            }
            if n.is_leaf() {
                continue;
            }
            if n.children.len() != self.fanout as usize {
                return Err(Error::input(format!(
                    "node {id} has {} children, fanout is {}",
                    n.children.len(),
                    self.fanout
                )));
            }
            let mut vol = 0.0;
            for &c in &n.children {
                if c <= id || c >= self.nodes.len() || seen_parent[c] {
                    return Err(Error::input(format!("node {id} has invalid child {c}")));
                }
                seen_parent[c] = true;
                let child = &self.nodes[c];
                if child.depth != n.depth + 1 {
                    return Err(Error::input(format!("node {c} depth {} under depth {}", child.depth, n.depth)));
                }
                if !child.region.within(&n.region.lo, &n.region.hi) {
                    return Err(Error::input(format!("node {c} leaves its parent's region")));
                }
                vol += child.region.volume();
            }
            // sweep along dimension 0 for overlapping siblings
            let mut order = n.children.clone();
            order.sort_by(|&a, &b| self.nodes[a].region.lo[0].total_cmp(&self.nodes[b].region.lo[0]));
            for (j, &c) in order.iter().enumerate() {
                let region = &self.nodes[c].region;
                for &o in &order[j + 1..] {
                    let other = &self.nodes[o].region;
                    if other.lo[0] >= region.hi[0] {
                        break;
                    }
                    if region.intersect(&other.lo, &other.hi).is_some() {
                        return Err(Error::input(format!("children {c} and {o} overlap")));
                    }
                }
            }
            let pv = n.region.volume();
            if (vol - pv).abs() > 1e-9 * pv {
                return Err(Error::input(format!("children of node {id} do not cover it")));
            }
        }
        if let Some(orphan) = seen_parent.iter().position(|s| !s) {
            return Err(Error::input(format!("node {orphan} has no parent")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&TreeFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: TreeFile = serde_json::from_str(s)?;
        file.try_into()
    }
}

fn cmp_slices(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// On-disk form of a released tree. Carries no exact counts.
#[derive(Debug, Serialize, Deserialize)]
pub struct TreeFile {
    pub fanout: u32,
    pub params: ReleaseParams,
    pub nodes: Vec<NodeRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub depth: u32,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub children: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noisy_count: Option<f64>,
}

impl From<&DecompTree> for TreeFile {
    fn from(t: &DecompTree) -> Self {
        TreeFile {
            fanout: t.fanout,
            params: t.params,
            nodes: t
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| NodeRecord {
                    id,
                    depth: n.depth,
                    lo: n.region.lo.clone(),
                    hi: n.region.hi.clone(),
                    children: n.children.clone(),
                    noisy_count: n.noisy_count,
                })
                .collect(),
        }
    }
}

impl TryFrom<TreeFile> for DecompTree {
    type Error = Error;

    fn try_from(file: TreeFile) -> Result<Self> {
        let mut nodes = Vec::with_capacity(file.nodes.len());
        for (i, r) in file.nodes.into_iter().enumerate() {
            if r.id != i {
                return Err(Error::input(format!("node record {i} has id {}", r.id)));
            }
            let region = SpatialDomain::new(r.lo, r.hi).map_err(|e| Error::input(format!("node {i}: {e}")))?;
            nodes.push(TreeNode { region, depth: r.depth, children: r.children, exact_count: None, noisy_count: r.noisy_count });
        }
        let t = DecompTree::from_nodes(nodes, file.fanout, file.params);
        t.validate()?;
        Ok(t)
    }
}
