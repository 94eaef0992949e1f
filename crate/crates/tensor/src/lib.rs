//! Dense NCHW tensors and a tape that records operations for reverse-mode
//! differentiation.
//!
//! Values are stored in the tape's element type (`f32` for training, `f64`
//! for gradient checking). Reductions and convolution inner loops always
//! accumulate in `f64`, so the two precisions differ only by storage
//! rounding.
//!
//! ```
//! use iegan_tensor::{Graph, Tensor};
//!
//! let mut g = Graph::<f64>::new();
//! let x = g.leaf(Tensor::new(&[2], vec![1.0, 2.0]).unwrap(), true);
//! let sq = g.square(x).unwrap();
//! let loss = g.sum(sq).unwrap();
//! let grads = g.backward(loss).unwrap();
//! assert_eq!(grads.get(x).unwrap().data(), &[2.0, 4.0]);
//! ```

mod error;
pub mod gradcheck;
mod graph;
mod kernels;
mod ops;
mod real;
mod tensor;

pub use error::TensorError;
pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport, GradProbe, Precision};
pub use graph::{Gradients, Graph, Var};
pub use ops::norm::{NormMode, RunningMoments, BN_EPSILON, BN_MOMENTUM};
pub use real::Real;
pub use tensor::Tensor;

pub type Result<T, E = TensorError> = std::result::Result<T, E>;
