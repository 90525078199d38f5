//! Minimal reverse-mode network toolkit.
//!
//! Layers cache what they need during a training-mode forward pass and
//! consume that cache in `backward`, accumulating parameter gradients.
//! Calling `backward` twice without a fresh forward is an error. Image
//! tensors are `N x H x W x C` (channels last), row-major.

mod checkpoint;
pub mod gradcheck;
mod layers;
mod linalg;
mod loss;
mod lstm;
mod optim;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointManifest, ParamEntry};
pub use layers::{repeat_sequence, Conv2d, Dense, Dropout, MaxPool2d, Relu};
pub use linalg::gemm;
pub use loss::{softmax, softmax_cross_entropy, LossOutput};
pub use lstm::{Lstm, LstmInputGrad, LstmState};
pub use optim::{Adam, AdamConfig, Optimizer, OptimizerKind, Sgd};
pub use tensor::{Param, Tensor};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type NnRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout_rate: f64,
    pub repeat_count: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub adam: AdamConfig,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 16,
            epochs: 30,
            dropout_rate: 0.2,
            repeat_count: 4,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig(format!("dropout rate {} not in [0, 1)", self.dropout_rate)));
        }
        if self.repeat_count == 0 {
            return Err(Error::InvalidConfig("repeat count must be >= 1".into()));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig("batch size and epochs must be positive".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!("invalid learning rate {}", self.learning_rate)));
        }
        Ok(())
    }
}

/// Uniform initialisation with variance `1 / fan_in`.
pub fn init_uniform(values: &mut [f64], fan_in: usize, rng: &mut NnRng) {
    let bound = (3.0 / fan_in.max(1) as f64).sqrt();
    for v in values {
        *v = rng.gen_range(-bound..bound);
    }
}
