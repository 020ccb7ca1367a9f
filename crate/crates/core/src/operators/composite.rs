use num_complex::Complex64;

use super::{materialize, DenseOp, MeasurementOp, OperatorDescriptor, SharedOp};
use crate::error::{invalid, Result};
use crate::haar::{haar_forward, haar_inverse, scale_count, HaarCoeffs};
use crate::image::{pad, Image, Placement};

/// The five-block gradient-probing operator
/// `X ↦ (A⁰(X), A₀(X), A′⁰(Xᵀ), A′₀(Xᵀ), B(X))` with `m = 4m₁ + m₂`.
///
/// `A` and `A′` act on `(N−1) × N` matrices; each of their row matrices is
/// zero-padded on top (`⁰`) and bottom (`₀`). The four padded blocks are
/// stored as one dense `4m₁ × N²` matrix whose `A′` rows are transposed so
/// they act on `X` directly.
#[derive(Debug)]
pub struct CompositeTvOp {
    n: usize,
    m1: usize,
    a: DenseOp,
    a_prime: DenseOp,
    padded: DenseOp,
    b: SharedOp,
    a_desc: OperatorDescriptor,
    a_prime_desc: OperatorDescriptor,
}

impl CompositeTvOp {
    pub fn side(&self) -> usize {
        self.n
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.b.output_len()
    }

    /// The gradient-domain block `A` on `(N−1) × N`.
    pub fn a(&self) -> &DenseOp {
        &self.a
    }

    pub fn a_prime(&self) -> &DenseOp {
        &self.a_prime
    }

    pub fn b(&self) -> &SharedOp {
        &self.b
    }

    /// The dense `4m₁ × N²` matrix holding the four padded blocks.
    pub fn padded_blocks(&self) -> &DenseOp {
        &self.padded
    }
}

/// Assembles the composite operator from its three sub-operators.
pub fn composite_tv_op(a: &dyn MeasurementOp, a_prime: &dyn MeasurementOp, b: SharedOp) -> Result<CompositeTvOp> {
    let (br, bc) = b.input_shape();
    if br != bc || br < 2 {
        return invalid(format!("B must act on N x N images, got {br}x{bc}"));
    }
    let n = br;
    for (name, op) in [("A", a), ("A'", a_prime)] {
        if op.input_shape() != (n - 1, n) {
            return invalid(format!("{name} must act on {}x{n} matrices, got {:?}", n - 1, op.input_shape()));
        }
    }
    if a.output_len() != a_prime.output_len() {
        return invalid(format!("A and A' must share m1 ({} vs {})", a.output_len(), a_prime.output_len()));
    }
    let m1 = a.output_len();
    let a_dense = materialize(a)?;
    let a_prime_dense = materialize(a_prime)?;

    let d = n * n;
    let mut blocks = Vec::with_capacity(4 * m1 * d);
    for (src, placement, transpose) in [
        (&a_dense, Placement::TopZeros, false),
        (&a_dense, Placement::BottomZeros, false),
        (&a_prime_dense, Placement::TopZeros, true),
        (&a_prime_dense, Placement::BottomZeros, true),
    ] {
        for i in 0..m1 {
            let padded = pad(&src.row_matrix(i), placement)?.realized;
            // A′ rows measure Xᵀ: Σ P[r,c]·X[c,r] = Σ Pᵀ[c,r]·X[c,r]
            let row = if transpose { padded.transpose() } else { padded };
            blocks.extend_from_slice(row.pixels());
        }
    }
    let padded = DenseOp::complex(4 * m1, (n, n), blocks)?;
    let padded = if padded_is_real(&padded) { realify(&padded)? } else { padded };

    Ok(CompositeTvOp {
        n,
        m1,
        a_desc: a.descriptor(),
        a_prime_desc: a_prime.descriptor(),
        a: if a.is_real() { realify(&a_dense)? } else { a_dense },
        a_prime: if a_prime.is_real() { realify(&a_prime_dense)? } else { a_prime_dense },
        padded,
        b,
    })
}

fn padded_is_real(op: &DenseOp) -> bool {
    let d = op.input_len();
    (0..op.rows()).all(|i| (0..d).all(|j| op.entry(i, j).im == 0.0))
}

fn realify(op: &DenseOp) -> Result<DenseOp> {
    let d = op.input_len();
    let data = (0..op.rows()).flat_map(|i| (0..d).map(move |j| op.entry(i, j).re)).collect();
    DenseOp::real(op.rows(), op.input_shape(), data)
}

impl MeasurementOp for CompositeTvOp {
    fn input_shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn output_len(&self) -> usize {
        4 * self.m1 + self.b.output_len()
    }

    fn apply(&self, x: &Image<Complex64>) -> Vec<Complex64> {
        let mut out = self.padded.apply(x);
        out.extend(self.b.apply(x));
        out
    }

    fn adjoint(&self, y: &[Complex64]) -> Image<Complex64> {
        let split = 4 * self.m1;
        let top = self.padded.adjoint(&y[..split]);
        let bottom = self.b.adjoint(&y[split..]);
        &top + &bottom
    }

    fn apply_real(&self, x: &Image<f64>) -> Vec<Complex64> {
        let mut out = self.padded.apply_real(x);
        out.extend(self.b.apply_real(x));
        out
    }

    fn adjoint_real(&self, y: &[Complex64]) -> Image<f64> {
        let split = 4 * self.m1;
        let top = self.padded.adjoint_real(&y[..split]);
        let bottom = self.b.adjoint_real(&y[split..]);
        &top + &bottom
    }

    fn is_real(&self) -> bool {
        self.padded.is_real() && self.b.is_real()
    }

    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor::CompositeTv {
            n: self.n,
            m1: self.m1,
            m2: self.b.output_len(),
            m: self.output_len(),
            a: Box::new(self.a_desc.clone()),
            a_prime: Box::new(self.a_prime_desc.clone()),
            b: Box::new(self.b.descriptor()),
        }
    }
}

/// `c ↦ op(H⁻¹ c)` for Haar coefficient images `c`.
#[derive(Debug, Clone)]
pub struct HaarComposedOp {
    inner: SharedOp,
    side: usize,
}

impl HaarComposedOp {
    pub fn inner(&self) -> &SharedOp {
        &self.inner
    }
}

pub fn compose_with_inverse_haar(op: SharedOp) -> Result<HaarComposedOp> {
    let (r, c) = op.input_shape();
    if r != c {
        return invalid(format!("Haar composition needs a square input, got {r}x{c}"));
    }
    scale_count(r)?;
    Ok(HaarComposedOp { inner: op, side: r })
}

impl MeasurementOp for HaarComposedOp {
    fn input_shape(&self) -> (usize, usize) {
        (self.side, self.side)
    }

    fn output_len(&self) -> usize {
        self.inner.output_len()
    }

    fn apply(&self, c: &Image<Complex64>) -> Vec<Complex64> {
        let coeffs = HaarCoeffs::new(c.clone()).expect("side checked at construction");
        self.inner.apply(&haar_inverse(&coeffs))
    }

    fn adjoint(&self, y: &[Complex64]) -> Image<Complex64> {
        haar_forward(&self.inner.adjoint(y)).expect("side checked at construction").into_image()
    }

    fn apply_real(&self, c: &Image<f64>) -> Vec<Complex64> {
        let coeffs = HaarCoeffs::new(c.clone()).expect("side checked at construction");
        self.inner.apply_real(&haar_inverse(&coeffs))
    }

    fn adjoint_real(&self, y: &[Complex64]) -> Image<f64> {
        haar_forward(&self.inner.adjoint_real(y)).expect("side checked at construction").into_image()
    }

    fn is_real(&self) -> bool {
        self.inner.is_real()
    }

    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor::HaarComposed { inner: Box::new(self.inner.descriptor()) }
    }
}
