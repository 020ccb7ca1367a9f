//! Compressed-sensing image reconstruction by total-variation minimization.
//!
//! The crate is organized bottom-up:
//!
//! * [`image`]: images, discrete gradients, TV semi-norms, zero padding.
//! * [`haar`]: the orthonormal bivariate Haar transform and its structural
//!   bounds (coefficient decay, edge counts, wavelet TV).
//! * [`operators`]: Gaussian, subsampled Fourier and composite measurement
//!   operators with adjoints, plus noise models.
//! * [`rip`]: restricted-isometry estimation and numerical checks of the
//!   cone/tube and strengthened Sobolev inequalities.
//! * [`solver`]: primal-dual decoders for TV, Haar-ℓ1 and plain ℓ1 programs.
//! * [`harness`]: test images, PGM/CSV output, experiments and property suites.

pub mod error;
pub mod haar;
pub mod harness;
pub mod image;
pub mod operators;
pub mod rip;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use haar::{haar_forward, haar_inverse, HaarCoeffs, Orientation, WaveletIndex};
pub use image::{discrete_gradient, gradient_adjoint, inner_product, tv_norm, GradientField, Image, TvMode};
pub use operators::{MeasurementOp, NoiseModel, OperatorDescriptor, OperatorSpec, SharedOp};
pub use scalar::Scalar;
pub use solver::{ReconstructionResult, SolverConfig};

pub use num_complex::Complex64;
