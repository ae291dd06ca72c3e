//! Linear action predictor: three averaged-perceptron factors (target
//! depth, parent label, new label) whose scores are summed per action.

mod decode;
mod features;
mod model;

use thiserror::Error;

pub use decode::{decode_beam, decode_greedy, majority_label, right_branching_baseline, Decoded};
pub use features::{featurize, StateFeatures, DEPTH_TEMPLATES, SHARED_TEMPLATES};
pub use model::{
    collect_labels, train, Decision, EpochStats, Factor, Model, StepScores, TrainConfig, MAGIC,
    VERSION,
};

use crate::oracle::OracleError;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("at least one epoch is required")]
    NoEpochs,
    #[error("training tree {index}: {source}")]
    Oracle {
        index: usize,
        #[source]
        source: OracleError,
    },
    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },
    #[error("model format version {found}, expected {expected}")]
    ModelVersion { found: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
