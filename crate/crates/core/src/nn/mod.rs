//! A small CNN engine with explicit forward and backward passes.
//!
//! Tensors are dense, row-major `f64`. Feature maps use `[height, width,
//! channels]` layout, conv kernels `[kh, kw, c_in, c_out]` and linear weights
//! `[in, out]`, so the innermost loops run over contiguous output channels.
//! All convolutions are valid-padded with stride 1; pooling is
//! non-overlapping with floor division.

mod adam;
mod gradcheck;
mod init;
mod layers;
mod loss;
mod tensor;
mod verify;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{grad_check, BlockError, GradCheckReport, Parameterized};
pub use init::{xavier_bound, xavier_init};
pub use layers::{leaky_relu, leaky_relu_backward_inplace, Conv2d, Linear, MaxPool, DEFAULT_LEAKY_SLOPE};
pub use loss::{mse, mse_grad, softmax, softmax_ce};
pub use tensor::Tensor;
pub use verify::{layer_checks, NamedReport, LAYER_STEP, LAYER_TOLERANCE};
