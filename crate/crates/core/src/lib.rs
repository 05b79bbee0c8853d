//! Differentially private hierarchical decompositions.
//!
//! The crate builds private quadtrees ([`spatial`]) and private prediction
//! suffix trees ([`markov`]) with a constant Laplace noise scale by biasing
//! node scores with a per-level decay, answers range-count and string-count
//! queries over the released synopses, and audits sparse-vector-technique
//! variants by exact quadrature of their output probabilities ([`svt`]).
//!
//! Monte-Carlo trials and batch query evaluation run on rayon when the
//! `parallel` feature (on by default) is enabled; see [`par`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dp;
pub mod error;
pub mod eval;
pub mod markov;
pub mod par;
pub mod rng;
pub mod spatial;
pub mod svt;

pub use error::{Error, Result};
