//! lightnorm: bit-exact minifloat emulation, block-floating-point packing,
//! low-precision normalization kernels, a distortion/diagnostics harness, an
//! analytical hardware cost model, and a toy MLP trainer exercising the stack
//! end to end.

pub mod bfp;
pub mod costmodel;
pub mod minifloat;
pub mod norm;
pub mod real;
pub mod stats;
pub mod tensor;
pub mod toytrain;

pub use minifloat::{FpEnv, FpFormat};
pub use real::Real;
pub use tensor::Tensor;

/// Default scalar used by the tensor-level code.
pub type Scalar = f64;
