//! From-scratch feed-forward networks: dense and convolutional layers with
//! exact reverse-mode gradients, a flat genome encoding of all parameters,
//! first-order optimizers and a binary checkpoint format.
//!
//! Everything is `f64`.

mod checkpoint;
mod genome;
mod network;
mod optim;
mod shape;

use thiserror::Error;

pub use checkpoint::{Checkpoint, CheckpointError, Role, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use genome::{decode, encode, Genome};
pub use network::{GradientSet, LayerParams, Network};
pub use optim::{sgd_step, Optimizer, OptimizerKind};
pub use shape::{Activation, Dims, Layer, NetworkShape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("{what} mismatch: expected {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid network shape: {0}")]
    InvalidShape(String),
}

/// Copies `source`'s parameters into `dest`. Both must share a shape.
pub fn copy_params(source: &Network, dest: &mut Network) -> Result<(), NetError> {
    if source.shape() != dest.shape() {
        return Err(NetError::InvalidShape(
            "cannot copy parameters between networks of different shapes".into(),
        ));
    }
    dest.clone_from(source);
    Ok(())
}
