//! Minimal dense-network toolkit: sequential fully-connected layers, backpropagation that
//! also yields the input gradient, Adam, and a finite-difference oracle.

mod adam;
pub mod gradcheck;
mod layer;
mod matrix;
mod network;

pub use adam::AdamState;
pub use gradcheck::{finite_diff_grad, max_relative_error, relative_error};
pub use layer::{sigmoid, softmax_in_place, Activation, DenseLayer};
pub use matrix::{dot, Matrix};
pub use network::{Activations, Gradients, LayerGradient, Network};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("{what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("layer {layer} expects {got} inputs but previous layer emits {expected}")]
    LayerMismatch {
        layer: usize,
        expected: usize,
        got: usize,
    },
    #[error("network has no layers")]
    Empty,
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("non-finite gradient at parameter {index}; step aborted")]
    NonFiniteGradient { index: usize },
    #[error("topology mismatch between source and target networks")]
    TopologyMismatch,
}

/// Every target parameter moves to `tau * source + (1 - tau) * target`.
pub fn soft_update(target: &mut Network, source: &Network, tau: f64) -> Result<(), NetError> {
    if !target.same_topology(source) {
        return Err(NetError::TopologyMismatch);
    }
    for (t, &s) in target.params_mut().zip(source.params()) {
        *t = tau * s + (1.0 - tau) * *t;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
