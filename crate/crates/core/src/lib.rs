//! Immersed-boundary discrete delta kernels.
//!
//! * [`kernel`]: the standard 3-, 4- and 6-point kernels and the C3 6-point
//!   kernel, with weight stencils and derivatives.
//! * [`audit`]: numerical checks of the moment, even-odd, sum-of-squares,
//!   smoothness and sign properties of each kernel.
//! * [`grid`]: periodic 3D grids, the tensor-product delta, spreading,
//!   interpolation and the pair coupling between two markers.
//! * [`bench`]: the pair-coupling translational-invariance benchmark.
//! * [`cli`]: the `ibkernel` command-line tool.

pub mod audit;
pub mod bench;
pub mod cli;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod numfmt;
pub(crate) mod poly;

pub use error::{Error, Result};
pub use kernel::{
    gaussian_match, kernel_spec, new6_branch, new6_second_moment, phi, phi_derivative, weights, Branch6Weights,
    Conditions, KernelId, KernelSpec, WeightStencil,
};
