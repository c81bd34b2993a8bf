//! The fine scoring model: adaptive fusion of the two pathways, the row-wise
//! MLP scorer, the negative-sampling loss and its training loop.

mod mlp;
mod model;
mod train;

pub use mlp::{estimate_lipschitz, LipschitzEstimate, LipschitzMethod, Mlp};
pub use model::{fuse, fuse_on_tape, DuetModel, Forward, ModelConfig, Variant};
pub use train::{
    loss_on_tape, negative_sampling_loss, query_loss, training_queries, EpochStats, TrainConfig,
    Trainer, TrainingQuery,
};
