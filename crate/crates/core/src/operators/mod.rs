//! Linear measurement operators `ℂ^{rows×cols} → ℂ^m` with adjoints.
//!
//! Every operator is bilinear in the pixel values: `op(X)_i = Σ M_i[r,c]·X[r,c]`
//! with `M_i` the `i`-th row matrix. For real row matrices and real images
//! this coincides with `⟨M_i, X⟩`. The adjoint is taken with respect to the
//! image inner product, so `⟨op(x), y⟩ = ⟨x, op*(y)⟩`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::image::Image;
use crate::scalar::Scalar;

mod composite;
mod dense;
mod descriptor;
mod fourier;
mod noise;

pub use composite::{compose_with_inverse_haar, composite_tv_op, CompositeTvOp, HaarComposedOp};
pub use dense::{gaussian_op, DenseOp};
pub use descriptor::{OperatorDescriptor, OperatorSpec, SampleCount};
pub use fourier::{fourier_plain_op, fourier_signed_op, FourierOp};
pub use noise::{add_noise, NoiseKind, NoiseModel};

/// Dense materialization is allowed up to this many input pixels.
pub const MAX_DENSE_INPUT: usize = 1 << 14;

/// A linear map from images to measurement vectors.
pub trait MeasurementOp: Send + Sync + std::fmt::Debug {
    /// `(rows, cols)` of accepted images.
    fn input_shape(&self) -> (usize, usize);

    /// Number of measurements `m`.
    fn output_len(&self) -> usize;

    fn apply(&self, x: &Image<Complex64>) -> Vec<Complex64>;

    fn adjoint(&self, y: &[Complex64]) -> Image<Complex64>;

    /// Real-image fast path; must agree with `apply` on real inputs.
    fn apply_real(&self, x: &Image<f64>) -> Vec<Complex64> {
        self.apply(&x.to_complex())
    }

    /// `Re ∘ adjoint`, the adjoint when images are restricted to ℝ.
    fn adjoint_real(&self, y: &[Complex64]) -> Image<f64> {
        self.adjoint(y).re()
    }

    /// Whether real images always yield real measurements.
    fn is_real(&self) -> bool {
        false
    }

    /// Serializable description sufficient to rebuild the operator.
    fn descriptor(&self) -> OperatorDescriptor;
}

pub type SharedOp = Arc<dyn MeasurementOp>;

/// Dispatches operator application on the pixel scalar type.
pub trait Measurable: Scalar {
    fn measure(op: &dyn MeasurementOp, x: &Image<Self>) -> Vec<Complex64>;
    fn back_project(op: &dyn MeasurementOp, y: &[Complex64]) -> Image<Self>;
}

impl Measurable for f64 {
    fn measure(op: &dyn MeasurementOp, x: &Image<f64>) -> Vec<Complex64> {
        op.apply_real(x)
    }
    fn back_project(op: &dyn MeasurementOp, y: &[Complex64]) -> Image<f64> {
        op.adjoint_real(y)
    }
}

impl Measurable for Complex64 {
    fn measure(op: &dyn MeasurementOp, x: &Image<Complex64>) -> Vec<Complex64> {
        op.apply(x)
    }
    fn back_project(op: &dyn MeasurementOp, y: &[Complex64]) -> Image<Complex64> {
        op.adjoint(y)
    }
}

/// Euclidean norm of a measurement vector.
pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `Σ a_i conj(b_i)`.
pub fn vec_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Row-major `m × d` matrix of `op`, column `j` being `op(e_j)`.
pub fn materialize(op: &dyn MeasurementOp) -> crate::Result<DenseOp> {
    let (rows, cols) = op.input_shape();
    let d = rows * cols;
    if d > MAX_DENSE_INPUT {
        return crate::error::invalid(format!("refusing to materialize an operator on {d} pixels"));
    }
    let m = op.output_len();
    let mut data = vec![Complex64::default(); m * d];
    let mut unit = Image::<Complex64>::zeros(rows, cols);
    for j in 0..d {
        unit.pixels_mut()[j] = Complex64::new(1.0, 0.0);
        let col = op.apply(&unit);
        for (i, v) in col.into_iter().enumerate() {
            data[i * d + j] = v;
        }
        unit.pixels_mut()[j] = Complex64::default();
    }
    DenseOp::complex(m, (rows, cols), data)
}
