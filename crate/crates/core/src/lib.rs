//! Test-time training for graph node classifiers.
//!
//! A pre-trained GCN is adapted to a shifted test distribution using a small
//! budget of annotated test nodes:
//!
//! 1. [`selection`] picks the nodes to annotate (uncertainty first, then
//!    PageRank + feature-propagation representativeness).
//! 2. [`annotator`] obtains pseudo-labels with confidences, either from a
//!    seeded noisy oracle or from an OpenAI-compatible chat endpoint.
//! 3. [`ttt`] filters the annotations by confidence and label diversity,
//!    fine-tunes on them, then self-trains on the remaining test nodes with
//!    truncated-Gaussian sample weights.
//!
//! [`bounds`] holds numerical checks of the accompanying generalization
//! bounds, and [`app`] the config-driven commands behind the `gttt` binary.

pub mod annotator;
pub mod app;
pub mod bounds;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod seed;
pub mod selection;
pub mod ttt;

pub use error::{Error, Result};
