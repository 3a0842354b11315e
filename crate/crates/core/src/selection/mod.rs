//! Budgeted selection of test nodes to annotate.

mod baseline;
mod featprop;
mod hybrid;
mod pagerank;

pub use baseline::{baseline_select, density_scores, BaselineKind, DENSITY_NEIGHBORS};
pub use featprop::{featprop_scores, featprop_scores_from, kmeans, propagate_features, KMEANS_ITERATIONS};
pub use hybrid::{hybrid_select, select_nodes, SelectionConfig, SelectionResult, SelectionStrategy};
pub use pagerank::{pagerank_scores, pagerank_with_limit};
