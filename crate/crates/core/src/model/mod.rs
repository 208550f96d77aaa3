//! Two-logit MLP classifier, Adam, checkpoints and the training loop.

mod adam;
pub mod checkpoint;
mod mlp;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::Checkpoint;
pub use mlp::{Layer, Mlp};
pub use train::{
    continue_training, evaluate_auc, evaluate_auc_fg, train, validation_positives, TrainConfig, TrainOutcome, Trainer,
    ValidationPoint,
};
