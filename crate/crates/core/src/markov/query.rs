use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::alphabet::Symbol;
use super::pst::{magnitude, NodeId, Pst};
use crate::{Error, Result};

impl Pst {
    /// Deepest node whose predictor is a suffix of `context`.
    pub fn longest_suffix_node(&self, context: &[Symbol]) -> NodeId {
        let mut id = self.root();
        for &s in context.iter().rev() {
            match self.node(id).children.get(&s) {
                Some(&c) => id = c,
                None => break,
            }
        }
        id
    }
}

/// Deepest node whose predictor is a suffix of `s`, which must begin with
/// the start marker.
pub fn longest_suffix_node(pst: &Pst, s: &[Symbol]) -> Result<NodeId> {
    if s.first() != Some(&super::START) {
        return Err(Error::param("context must begin with the start marker"));
    }
    Ok(pst.longest_suffix_node(s))
}

/// Estimated number of occurrences of `query` in the data: the root count
/// of its first symbol times, for each later symbol, the probability the
/// longest-suffix node of the preceding prefix assigns to it. Zero as soon
/// as a factor is zero or a visited histogram is empty.
pub fn estimate_string_count(pst: &Pst, query: &[Symbol]) -> Result<f64> {
    let Some((&first, _)) = query.split_first() else {
        return Err(Error::param("query string is empty"));
    };
    let table = pst.alphabet().table_len();
    if let Some(bad) = query.iter().find(|&&s| s == super::START || s as usize >= table) {
        return Err(Error::param(format!("symbol {bad} cannot appear in a query string")));
    }
    let hist = |id| pst.hist(id).ok_or_else(|| Error::input("PST carries no histograms"));
    let mut ans = hist(pst.root())?[first as usize];
    for i in 1..query.len() {
        if ans <= 0.0 {
            return Ok(0.0);
        }
        let h = hist(pst.longest_suffix_node(&query[..i]))?;
        let mag = magnitude(h);
        if mag <= 0.0 {
            return Ok(0.0);
        }
        ans *= h[query[i] as usize] / mag;
    }
    Ok(ans.max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    estimate: f64,
    string: Vec<Symbol>,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    /// Max-heap order: higher estimate, then shorter, then lexicographically
    /// smaller.
    fn cmp(&self, other: &Self) -> Ordering {
        self.estimate
            .total_cmp(&other.estimate)
            .then_with(|| other.string.len().cmp(&self.string.len()))
            .then_with(|| other.string.cmp(&self.string))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The `k` strings over the alphabet (length at most `l_max`) with the
/// largest estimates, best first.
///
/// Best-first search: since extending a string multiplies its estimate by a
/// probability, no extension beats its prefix, so popping the best frontier
/// entry always yields the next string in global order. Ties go to the
/// shorter, then lexicographically smaller string. Strings with a zero
/// estimate are never reported.
pub fn top_k_strings(pst: &Pst, k: usize) -> Result<Vec<(Vec<Symbol>, f64)>> {
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    let symbols: Vec<Symbol> = pst.alphabet().symbols().collect();
    let mut heap = BinaryHeap::new();
    for &s in &symbols {
        let string = vec![s];
        let estimate = estimate_string_count(pst, &string)?;
        heap.push(Candidate { estimate, string });
    }
    let mut out = Vec::with_capacity(k);
    while let Some(Candidate { estimate, string }) = heap.pop() {
        if estimate <= 0.0 {
            break;
        }
        if string.len() < pst.l_max() {
            for &s in &symbols {
                let mut ext = string.clone();
                ext.push(s);
                let e = estimate_string_count(pst, &ext)?;
                heap.push(Candidate { estimate: e, string: ext });
            }
        }
        out.push((string, estimate));
        if out.len() == k {
            break;
        }
    }
    Ok(out)
}
