//! Small differentiable substrate for the beam classifiers: dense layers with
//! recorded activations, softmax/cross-entropy, Adam and parameter checkpoints.

mod adam;
pub mod checkpoint;
mod loss;
mod mlp;
mod tensor;

pub use adam::Adam;
pub use loss::{cross_entropy, softmax, softmax_cross_entropy_grad, PROB_FLOOR};
pub use mlp::{Activation, Dense, Mlp, MlpTape};
pub use tensor::{Matrix, Tensor};

/// Anything exposing trainable tensors in a fixed order.
pub trait Parameterized<T> {
    fn parameters(&self) -> Vec<&Tensor<T>>;
    fn parameters_mut(&mut self) -> Vec<&mut Tensor<T>>;

    fn zero_grad(&mut self)
    where
        T: crate::Scalar,
    {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    /// Total number of scalar parameters (weights and biases).
    fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|t| t.values.len()).sum()
    }
}
