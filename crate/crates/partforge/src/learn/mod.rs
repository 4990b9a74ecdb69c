//! Learning stack: point-cloud autoencoder, padded state encoding, masked
//! Double-DQN single-task training, and multi-task distillation.

pub mod ae;
pub mod checkpoint;
pub mod distill;
pub mod dqn;
pub mod encoding;
pub mod nn;
pub mod qnet;

pub use ae::{ae_train, chamfer, encode_part, part_cloud, AEModel, CLOUD_POINTS, FEATURE_DIM};
pub use checkpoint::{
    load_ae, load_checkpoint, load_qnet, save_ae, save_checkpoint, save_qnet, Checkpoint,
};
pub use distill::{build_expert_dataset, distill_loss, distill_train, DistillConfig, ExpertDataset};
pub use dqn::{train_single, TrainConfig, TrainLogRow, TrainOutcome};
pub use encoding::{build_state_encoding, encoding_len, EncodingCaps};
pub use nn::{Adam, Grads, Mlp};
pub use qnet::{ddqn_update, q_forward, select_action, QNet, ReplayBuffer, Transition};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("training diverged (non-finite loss)")]
    Diverged,
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("no valid action under the mask")]
    NoValidAction,
    #[error("i/o error: {0}")]
    Io(String),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}
