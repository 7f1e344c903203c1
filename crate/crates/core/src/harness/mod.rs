//! Training, metrics and evaluation policies.
//!
//! Every epoch records validation and test metrics, but only the policy
//! decides which epoch is reported. Under the default `best_val_f1` policy
//! test numbers never influence the choice.

mod log;
mod metrics;
mod train;

pub use log::{read_epoch_log, write_epoch_log, LogLine};
pub use metrics::{argmax, ConfusionMatrix};
pub use train::{
    evaluate, select_epoch, train, EpochRecord, EvalPolicy, Normalizer, SampleStore, SubtaskResult, TrainConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("subtask {subtask}: loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { subtask: String, epoch: usize },
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
