//! Numeric kernel: matrices, dense layers with hand-written backward passes,
//! losses, ADAM, a seeded generator and a finite-difference oracle.

mod adam;
mod gradcheck;
pub mod kernel;
mod layer;
mod loss;
mod matrix;
mod net;
mod rng;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{finite_diff_grad, relative_error, FD_EPS};
pub use layer::{sigmoid, Activation, DenseGrads, DenseLayer};
pub use loss::{cross_entropy, softmax, softmax_backward, LOG_FLOOR};
pub use matrix::Matrix;
pub use net::{Activations, NetGrads, ParamId, TwoLayerNet};
pub use rng::Rng;
