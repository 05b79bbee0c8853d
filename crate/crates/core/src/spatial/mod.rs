//! Private spatial decompositions and range-count estimation.
//!
//! [`build_privtree`] grows a quadtree (or any `2^k`-ary bisection tree)
//! whose split decisions all use the same Laplace scale; [`build_simple_tree`]
//! is the height-limited baseline and [`build_ug`] the uniform grid. Released
//! trees never hold exact counts.

mod build;
mod domain;
pub mod io;
mod query;
mod tree;

pub use build::{
    attach_noisy_counts, biased_count, build_privtree, build_simple_tree, build_ug, release_privtree, ug_bins,
    BuildOptions, DEFAULT_DEPTH_CAP,
};
pub use domain::{RangeQuery, SpatialDataset, SpatialDomain, SplitRule};
pub use query::{batch_range_count, batch_range_count_seq, range_count};
pub use tree::{DecompTree, NodeId, NodeRecord, ReleaseParams, TreeFile, TreeNode};
