//! Two-stage self-supervised training, checkpoints and sequence inference.

mod checkpoint;
mod framework;
mod schedule;
mod trainer;

pub use checkpoint::Checkpoint;
pub use framework::{infer_sequence, sequence_timestamps, Batch, Framework, FrameworkOutputs, PreparedSample};
pub use schedule::{lr_schedule, Stage, TrainConfig};
pub use trainer::{
    epoch_checkpoint_name, pretrain_stage, train_full, StepRecord, Trainer, FINAL_CHECKPOINT, LOG_FILE,
};
