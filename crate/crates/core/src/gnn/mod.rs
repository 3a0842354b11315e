//! A GCN node classifier with hand-derived gradients and Adam.

mod checkpoint;
mod grad;
mod model;
mod optim;
mod train;

pub use checkpoint::CHECKPOINT_VERSION;
pub use grad::{backward, backward_from, Gradients};
pub use model::{loss_ce, prediction_entropy, weighted_loss_ce, GcnConfig, GcnModel, Prediction};
pub use optim::OptimState;
pub use train::{pretrain, PretrainReport};
