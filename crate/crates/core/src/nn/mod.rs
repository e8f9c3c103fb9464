//! Domain-adversarial network: a feature extractor shared by a phase
//! discriminator and a set-membership adversary, trained to the saddle
//! point of E = L_d − L_a with plain SGD and a gradient reversal layer.
//!
//! No external ML framework; every forward/backward pair lives in
//! [`layers`] and is finite-difference checked.

pub mod checkpoint;
pub mod layers;
pub mod model;
pub mod tensor;
pub mod train;

use thiserror::Error;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use model::{DannModel, FILTERS, HIDDEN, POOL_STAGES};
pub use tensor::Tensor;
pub use train::{predict_p_mbl, train, train_step, EpochLog, TrainConfig};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite values after {0}")]
    NonFinite(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("batch normalization needs batches of at least 2 in training mode")]
    DegenerateBatch,
    #[error("layer input length {0} is not divisible by 3")]
    LengthNotDivisible(usize),
    #[error("records mix system sizes: expected N = {expected}, found N = {found}")]
    MixedSystemSizes { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt checkpoint: bad magic bytes")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated checkpoint: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
}
