//! Differentiable building blocks with hand-written backward passes.
//!
//! Activations are laid out batch-major: an `Array2<f64>` of shape
//! `(batch, features)`. Single-vector entry points wrap a batch of one.
//! Weight matrices are stored `(out, in)` so a forward pass is
//! `x · Wᵀ + b`.

mod activation;
mod adam;
pub mod container;
mod dense;
pub mod gradcheck;
mod init;
mod lstm;
mod params;

pub use activation::{relu, relu_backward, relu_backward_batch, relu_batch};
pub use adam::{adam_update, AdamConfig, AdamState};
pub use dense::{DenseCache, DenseParams};
pub use init::uniform_fan_in;
pub use lstm::{BatchState, LstmCache, LstmGrads, LstmParams, RecurrentState};
pub use params::{soft_update, Layer, NamedTensor, ParameterSet};

/// Shapes are `(batch, features)`.
pub type Matrix = ndarray::Array2<f64>;

/// Stand-in for a row-major 2-D array of finite 64-bit reals.
pub type Array2D = ndarray::Array2<f64>;
