use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::alphabet::{Alphabet, SequenceDataset, Symbol, START};
use crate::dp::PrivacyParams;
use crate::{Error, Result};

pub type NodeId = usize;

/// Next-symbol counts indexed by symbol id (the `START` slot stays zero).
pub type Histogram = Vec<f64>;

/// Magnitude minus largest count: small for rare contexts and for
/// near-deterministic ones. Never increases from a node to its children.
pub fn pst_score(hist: &[f64]) -> f64 {
    let (sum, max) = hist.iter().fold((0.0, 0.0f64), |(s, m), &c| (s + c, m.max(c)));
    (sum - max).max(0.0)
}

pub fn magnitude(hist: &[f64]) -> f64 {
    hist.iter().sum()
}

/// Exact histogram of `predictor` (reading order) over `data`: for every
/// position whose preceding context, `$` included, ends with the predictor,
/// count the symbol found there.
pub fn exact_histogram(data: &SequenceDataset, predictor: &[Symbol]) -> Histogram {
    let mut hist = vec![0.0; data.alphabet.table_len()];
    let p = predictor.len();
    for seq in &data.sequences {
        for i in 0..seq.positions() {
            // context is $ x_0 .. x_{i-1}, length i + 1
            if p > i + 1 {
                continue;
            }
            let matches = predictor.iter().enumerate().all(|(j, &sym)| {
                let pos = i + 1 - p + j;
                let ctx = if pos == 0 { START } else { seq.symbols[pos - 1] };
                ctx == sym
            });
            if matches {
                hist[seq.predicted_at(i) as usize] += 1.0;
            }
        }
    }
    hist
}

#[derive(Debug, Clone, PartialEq)]
pub struct PstNode {
    /// Context in reading order; a child prepends one symbol to its parent's.
    pub predictor: Vec<Symbol>,
    /// Child for each extending symbol (`START` or an alphabet symbol).
    pub children: BTreeMap<Symbol, NodeId>,
    pub hist: Option<Histogram>,
}

impl PstNode {
    pub fn depth(&self) -> usize {
        self.predictor.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn starts_with_start(&self) -> bool {
        self.predictor.first() == Some(&START)
    }
}

/// Prediction suffix tree. Node 0 is the root with the empty predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct Pst {
    pub(crate) nodes: Vec<PstNode>,
    pub(crate) alphabet: Alphabet,
    pub(crate) params: Option<PrivacyParams>,
    pub(crate) l_max: usize,
}

impl Pst {
    pub fn nodes(&self) -> &[PstNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &PstNode {
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

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Tree parameters; `None` for non-private reference trees.
    pub fn params(&self) -> Option<&PrivacyParams> {
        self.params.as_ref()
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf())
    }

    pub fn hist(&self, id: NodeId) -> Option<&[f64]> {
        self.nodes[id].hist.as_deref()
    }

    /// Node with the given predictor, if present.
    pub fn find(&self, predictor: &[Symbol]) -> Option<NodeId> {
        let mut id = 0;
        for &s in predictor.iter().rev() {
            id = *self.nodes[id].children.get(&s)?;
        }
        Some(id)
    }

    /// Parent/child pairs.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes.iter().enumerate().flat_map(|(p, n)| n.children.values().map(move |&c| (p, c)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PstFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: PstFile = serde_json::from_str(s)?;
        file.try_into()
    }
}

/// On-disk form of a PST. Symbols appear as tokens (`$` and `&` for the
/// markers).
#[derive(Debug, Serialize, Deserialize)]
pub struct PstFile {
    pub alphabet: Alphabet,
    pub l_max: usize,
    pub params: Option<PrivacyParams>,
    pub nodes: Vec<PstRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PstRecord {
    pub id: NodeId,
    pub predictor: Vec<String>,
    pub children: BTreeMap<String, NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hist: Option<BTreeMap<String, f64>>,
}

impl From<&Pst> for PstFile {
    fn from(p: &Pst) -> Self {
        let a = &p.alphabet;
        let nodes = p
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| PstRecord {
                id,
                predictor: n.predictor.iter().map(|&s| a.token(s).to_owned()).collect(),
                children: n.children.iter().map(|(&s, &c)| (a.token(s).to_owned(), c)).collect(),
                hist: n.hist.as_ref().map(|h| a.predicted().map(|s| (a.token(s).to_owned(), h[s as usize])).collect()),
            })
            .collect();
        PstFile { alphabet: a.clone(), l_max: p.l_max, params: p.params, nodes }
    }
}

impl TryFrom<PstFile> for Pst {
    type Error = Error;

    fn try_from(f: PstFile) -> Result<Self> {
        let a = f.alphabet;
        let sym = |t: &str| a.id(t).ok_or_else(|| Error::input(format!("unknown token {t:?} in PST")));
        let mut nodes = Vec::with_capacity(f.nodes.len());
        for (i, r) in f.nodes.into_iter().enumerate() {
            if r.id != i {
                return Err(Error::input(format!("PST record {i} has id {}", r.id)));
            }
            let predictor = r.predictor.iter().map(|t| sym(t)).collect::<Result<Vec<_>>>()?;
            let children = r.children.iter().map(|(t, &c)| Ok((sym(t)?, c))).collect::<Result<BTreeMap<_, _>>>()?;
            let hist = match r.hist {
                None => None,
                Some(h) => {
                    let mut dense = vec![0.0; a.table_len()];
                    for (t, c) in h {
                        let s = sym(&t)?;
                        if s == START || !(c >= 0.0) {
                            return Err(Error::input(format!("node {i}: bad histogram entry {t:?}: {c}")));
                        }
                        dense[s as usize] = c;
                    }
                    Some(dense)
                }
            };
            nodes.push(PstNode { predictor, children, hist });
        }
        let pst = Pst { nodes, alphabet: a, params: f.params, l_max: f.l_max };
        pst.validate()?;
        Ok(pst)
    }
}

impl Pst {
    /// Checks the suffix structure: root predictor empty, every child's
    /// predictor is its parent's with the edge symbol prepended, and every
    /// node is reachable exactly once.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.first().is_none_or(|r| !r.predictor.is_empty()) {
            return Err(Error::input("PST root must have the empty predictor"));
        }
        let mut seen = vec![false; self.nodes.len()];
        seen[0] = true;
        for (id, n) in self.nodes.iter().enumerate() {
            if !n.is_leaf() && n.children.len() != self.alphabet.fanout() as usize {
                return Err(Error::input(format!("PST node {id} has {} children", n.children.len())));
            }
            for (&s, &c) in &n.children {
                if c >= self.nodes.len() || seen[c] {
                    return Err(Error::input(format!("PST node {id} has invalid child {c}")));
                }
                seen[c] = true;
                let child = &self.nodes[c].predictor;
                if child.len() != n.predictor.len() + 1 || child[0] != s || child[1..] != n.predictor[..] {
                    return Err(Error::input(format!("PST node {c} is not a one-symbol extension of {id}")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::input("PST has unreachable nodes"));
        }
        Ok(())
    }
}
