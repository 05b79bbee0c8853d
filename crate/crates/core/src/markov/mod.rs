//! Private variable-order Markov models.
//!
//! A prediction suffix tree (PST) maps contexts to next-symbol histograms.
//! [`build_private_pst`] grows one with the biased-score split rule, scoring
//! a node by its histogram magnitude minus its largest count, then publishes
//! noisy leaf histograms. The released tree answers string-frequency
//! estimates, top-k mining and synthetic generation.

mod alphabet;
mod build;
mod generate;
mod pst;
mod query;

pub use alphabet::{
    read_sequences, truncate_sequences, Alphabet, Sequence, SequenceDataset, Symbol, END, END_TOKEN, START,
    START_TOKEN,
};
pub use build::{build_exact_pst, build_private_pst, pst_budgets, suffix_path, PstOptions};
pub use generate::generate_sequences;
pub use pst::{exact_histogram, magnitude, pst_score, Histogram, NodeId, Pst, PstFile, PstNode, PstRecord};
pub use query::{estimate_string_count, longest_suffix_node, top_k_strings};
