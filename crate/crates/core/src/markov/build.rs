use std::collections::BTreeMap;

use super::alphabet::{SequenceDataset, Symbol, START};
use super::pst::{pst_score, Histogram, NodeId, Pst, PstNode};
use crate::dp::{split_budget, NoiseSource, PrivacyParams};
use crate::{Error, Result};

/// Knobs of the private PST builder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PstOptions {
    /// Share of `ε` spent on the structure; defaults to `1/β`, leaving
    /// `(β-1)/β` for the histograms.
    pub tree_share: Option<f64>,
    /// No node deeper than this is split. The effective cap is also bounded
    /// by `l_max`, past which every histogram is empty.
    pub depth_cap: usize,
    pub theta: f64,
}

impl Default for PstOptions {
    fn default() -> Self {
        PstOptions { tree_share: None, depth_cap: crate::spatial::DEFAULT_DEPTH_CAP as usize, theta: 0.0 }
    }
}

/// A prediction position: sequence index and position within it.
type Occurrence = (u32, u32);

fn histogram(data: &SequenceDataset, occ: &[Occurrence]) -> Histogram {
    let mut h = vec![0.0; data.alphabet.table_len()];
    for &(s, i) in occ {
        h[data.sequences[s as usize].predicted_at(i as usize) as usize] += 1.0;
    }
    h
}

/// Symbol right before a length-`depth` suffix of the context of `occ`.
#[inline]
fn preceding(data: &SequenceDataset, (s, i): Occurrence, depth: usize) -> Symbol {
    let pos = i as usize - depth;
    if pos == 0 {
        START
    } else {
        data.sequences[s as usize].symbols[pos - 1]
    }
}

struct Grown {
    nodes: Vec<PstNode>,
    /// Occurrences of each leaf (empty for internal nodes).
    occ: Vec<Vec<Occurrence>>,
}

/// Breadth-first growth; `decide(score, depth)` is only consulted for nodes
/// that may be split at all.
fn grow(data: &SequenceDataset, depth_cap: usize, mut decide: impl FnMut(f64, usize) -> bool) -> Grown {
    let all: Vec<Occurrence> = data
        .sequences
        .iter()
        .enumerate()
        .flat_map(|(s, seq)| (0..seq.positions()).map(move |i| (s as u32, i as u32)))
        .collect();
    let mut nodes = vec![PstNode { predictor: Vec::new(), children: BTreeMap::new(), hist: None }];
    let mut occ = vec![all];
    let mut next = 0;
    while next < nodes.len() {
        let id = next;
        next += 1;
        let depth = nodes[id].depth();
        if nodes[id].starts_with_start() || depth >= depth_cap {
            continue;
        }
        let score = pst_score(&histogram(data, &occ[id]));
        if !decide(score, depth) {
            continue;
        }
        let mut buckets: BTreeMap<Symbol, Vec<Occurrence>> = data.alphabet.extenders().map(|s| (s, Vec::new())).collect();
        for o in std::mem::take(&mut occ[id]) {
            if let Some(b) = buckets.get_mut(&preceding(data, o, depth)) {
                b.push(o);
            }
        }
        for (sym, bucket) in buckets {
            let mut predictor = Vec::with_capacity(depth + 1);
            predictor.push(sym);
            predictor.extend_from_slice(&nodes[id].predictor);
            let child = nodes.len();
            nodes.push(PstNode { predictor, children: BTreeMap::new(), hist: None });
            occ.push(bucket);
            nodes[id].children.insert(sym, child);
        }
    }
    Grown { nodes, occ }
}

/// Fill leaf histograms with `exact + noise`, set internal histograms to the
/// sums of their leaves, then clamp negative counts to zero everywhere.
fn fill_histograms(data: &SequenceDataset, grown: Grown, mut noise: impl FnMut() -> f64) -> Vec<PstNode> {
    let Grown { mut nodes, occ } = grown;
    let predicted: Vec<Symbol> = data.alphabet.predicted().collect();
    for id in (0..nodes.len()).rev() {
        let h = if nodes[id].is_leaf() {
            let mut h = histogram(data, &occ[id]);
            for &s in &predicted {
                h[s as usize] += noise();
            }
            h
        } else {
            let mut h = vec![0.0; data.alphabet.table_len()];
            for &c in nodes[id].children.values() {
                for (acc, v) in h.iter_mut().zip(nodes[c].hist.as_ref().expect("children filled first")) {
                    *acc += v;
                }
            }
            h
        };
        nodes[id].hist = Some(h);
    }
    for n in &mut nodes {
        if let Some(h) = n.hist.as_mut() {
            h.iter_mut().for_each(|c| *c = c.max(0.0));
        }
    }
    nodes
}

/// Private PST.
///
/// The structure is grown with the score of [`pst_score`] (sensitivity
/// `l_max`) under budget `ε·share`; nodes whose predictor starts with `$` are
/// never split. Leaf histograms then receive `Lap(l_max / ε_hist)` noise
/// per count with the remaining budget.
pub fn build_private_pst(
    data: &SequenceDataset,
    epsilon: f64,
    opts: &PstOptions,
    noise: &mut impl NoiseSource,
) -> Result<Pst> {
    let beta = data.alphabet.fanout();
    let share = opts.tree_share.unwrap_or(1.0 / f64::from(beta));
    let (eps_tree, eps_hist) = split_budget(epsilon, share)?;
    let l_max = data.l_max;
    let params = PrivacyParams::privtree_with_sensitivity(eps_tree, beta, opts.theta, l_max as f64)?;
    let (theta, delta, lambda) = (params.theta, params.delta, params.lambda);
    let grown = grow(data, opts.depth_cap.min(l_max), |score, depth| {
        let biased = (theta - delta).max(score - depth as f64 * delta);
        biased + noise.laplace(lambda) > theta
    });
    let hist_scale = l_max as f64 / eps_hist;
    let nodes = fill_histograms(data, grown, || noise.laplace(hist_scale));
    Ok(Pst { nodes, alphabet: data.alphabet.clone(), params: Some(params), l_max })
}

/// Non-private PST split down to `max_depth` wherever the predictor does
/// not start with `$`, with exact histograms. A reference model for tests
/// and evaluation.
pub fn build_exact_pst(data: &SequenceDataset, max_depth: usize) -> Pst {
    let grown = grow(data, max_depth.min(data.l_max), |_, _| true);
    let nodes = fill_histograms(data, grown, || 0.0);
    Pst { nodes, alphabet: data.alphabet.clone(), params: None, l_max: data.l_max }
}

/// Budgets `(ε_tree, ε_hist)` the builder uses for `opts`.
pub fn pst_budgets(epsilon: f64, beta: u32, opts: &PstOptions) -> Result<(f64, f64)> {
    if beta < 2 {
        return Err(Error::param("PST fanout must be at least 2"));
    }
    split_budget(epsilon, opts.tree_share.unwrap_or(1.0 / f64::from(beta)))
}

/// Node ids of the tree in breadth-first order whose predictor is a suffix
/// of `context`, root first.
pub fn suffix_path(pst: &Pst, context: &[Symbol]) -> Vec<NodeId> {
    let mut path = vec![0];
    let mut id = 0;
    for &s in context.iter().rev() {
        match pst.node(id).children.get(&s) {
            Some(&c) => {
                id = c;
                path.push(c);
            }
            None => break,
        }
    }
    path
}
