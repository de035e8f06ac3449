//! Actor-critic network, Gaussian action head, and reverse-mode gradients.

mod checkpoint;
mod distribution;
mod init;
mod network;
mod normalize;
mod tape;

use thiserror::Error;

pub use checkpoint::{Checkpoint, TensorRecord, CHECKPOINT_VERSION};
pub use distribution::{entropy_offset, ln_2pi, ActionDistribution, ACTION_DIM};
pub use init::orthogonal;
pub use network::{
    PolicyParams, PolicyShape, PolicyVars, HEAD_GAIN, HIDDEN_GAIN, LOG_STD_INIT, LOG_STD_MAX, LOG_STD_MIN,
};
pub use normalize::ObsNormalizer;
pub use tape::{Graph, Var};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("backward needs a 1x1 root, got {0:?}")]
    NonScalarRoot((usize, usize)),
    #[error("observation has {found} features, network expects {expected}")]
    ObservationLength { expected: usize, found: usize },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("invalid network shape: {0}")]
    InvalidShape(String),
    #[error("checkpoint version {found:?} is not supported (expected {expected})")]
    CheckpointVersion { found: Option<u32>, expected: u32 },
    #[error("corrupt checkpoint: {0}")]
    CheckpointCorrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
