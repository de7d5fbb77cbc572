//! Dense network substrate: matrices, layers, activations, dropout, Xavier
//! initialization, Adam and a portable random stream. Gradients are written
//! out by hand per layer; there is no general autodiff graph.

mod adam;
mod layers;
mod matrix;
mod rng;

pub use adam::{AdamConfig, AdamState};
pub use layers::{
    mse, relu, relu_backward, sigmoid, sigmoid_backward, sigmoid_scalar, xavier_bound,
    DenseGrads, DenseLayer, Dropout, DropoutMask,
};
pub use matrix::Matrix;
pub use rng::{RngState, RngStream};
