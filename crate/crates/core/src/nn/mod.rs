//! Minimal dense-network substrate: batched forward/backward, plain SGD and
//! finite-difference gradient checking. Shared by the spatial autoencoder and
//! the price regressor. Everything is `f64`.

mod gradcheck;
mod layer;
mod net;

pub use gradcheck::{grad_check, Parametric};
pub use layer::{sigmoid, Activation, DenseLayer, LayerGrad};
pub use net::{half_mse, DenseNet, ForwardCache, Gradients, TrainConfig};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}
