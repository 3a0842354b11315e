//! Test-time adaptation from a small set of annotated test nodes.
//!
//! Annotations are ranked by confidence minus an entropy-change term and the
//! best fraction is used for supervised fine-tuning (stage 1). Stage 2
//! self-trains on the remaining test nodes against the model's own argmax
//! under edge dropping, with truncated-Gaussian per-node weights.

mod filter;
mod pipeline;
mod stages;
mod weight;

pub use filter::{coe, filter_annotations, filter_scores, FilterConfig};
pub use pipeline::{run_llmttt, Annotator, Metrics, RunSettings, RunStatus, StageFailure};
pub use stages::{stage1_finetune, stage2_selftrain, StageReport, TttConfig};
pub use weight::{gaussian_weight, update_weight_state, GaussianWeightState};
