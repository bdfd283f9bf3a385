//! Numerical core for semifield scale-space analysis.
//!
//! - [`semifield`]: the five semifield algebras (linear, root, log, tropical
//!   max/min) with metrics, exponentiation, measure scaling, integration, and
//!   the pointwise isomorphisms between them.
//! - [`kernel`]: continuous reduced kernels `k_t` parameterized by a 2x2
//!   metric matrix, their frequency-domain forms, and grid sampling.
//! - [`transform`]: the diagonalizing transforms per kind (cosine DFT,
//!   isomorphism-lifted DFT, Legendre-Fenchel conjugates) and their inverses.
//! - [`conv`]: discrete semifield convolution of 2-D fields: windowed
//!   reference path, full-grid quadratic morphology via distance transforms,
//!   and overflow-safe log-sum-exp convolution.

pub mod conv;
pub mod grid;
pub mod kernel;
pub mod mat2;
pub mod semifield;
pub mod transform;

pub use conv::{
    convolve, convolve_fast_quadratic_morphological, convolve_log_stable, pad, BoundaryPolicy,
    ConvError, ConvOutput,
};
pub use grid::{Grid2, GridError};
pub use kernel::{cole_hopf_transport, KernelError, KernelSpec, SampledKernel};
pub use mat2::Mat2;
pub use semifield::{Isomorphism, SemifieldError, SemifieldKind, SemifieldValue};
pub use transform::{
    circular_convolve, fenchel_conjugate_1d, semifield_fourier, semifield_fourier_inverse,
    FrequencyGrid2, TransformError,
};
