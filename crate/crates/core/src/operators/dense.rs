use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{MeasurementOp, OperatorDescriptor};
use crate::error::{invalid, Result};
use crate::image::Image;

#[derive(Clone, Debug, PartialEq)]
enum Entries {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// Explicit `m × d` matrix acting on vectorized (row-major) images.
#[derive(Clone, Debug)]
pub struct DenseOp {
    m: usize,
    shape: (usize, usize),
    entries: Entries,
    origin: Option<(u64, String)>,
}

impl DenseOp {
    pub fn real(m: usize, shape: (usize, usize), data: Vec<f64>) -> Result<Self> {
        Self::check(m, shape, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite matrix entry");
        }
        Ok(Self { m, shape, entries: Entries::Real(data), origin: None })
    }

    pub fn complex(m: usize, shape: (usize, usize), data: Vec<Complex64>) -> Result<Self> {
        Self::check(m, shape, data.len())?;
        Ok(Self { m, shape, entries: Entries::Complex(data), origin: None })
    }

    fn check(m: usize, shape: (usize, usize), len: usize) -> Result<()> {
        if m == 0 || shape.0 == 0 || shape.1 == 0 {
            return invalid("dense operator dimensions must be positive");
        }
        if len != m * shape.0 * shape.1 {
            return invalid(format!("expected {} entries, got {len}", m * shape.0 * shape.1));
        }
        Ok(())
    }

    /// Identity on `d`-pixel column images (`d × 1`).
    pub fn identity(d: usize) -> Self {
        Self::diagonal(&vec![1.0; d])
    }

    /// Diagonal matrix on `d × 1` column images.
    pub fn diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut data = vec![0.0; d * d];
        for (i, &v) in diag.iter().enumerate() {
            data[i * d + i] = v;
        }
        Self { m: d, shape: (d, 1), entries: Entries::Real(data), origin: None }
    }

    pub fn input_len(&self) -> usize {
        self.shape.0 * self.shape.1
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    /// Entry `(i, j)` as a complex number.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let d = self.input_len();
        match &self.entries {
            Entries::Real(v) => Complex64::new(v[i * d + j], 0.0),
            Entries::Complex(v) => v[i * d + j],
        }
    }

    /// Row `i` reshaped to the input image shape.
    pub fn row_matrix(&self, i: usize) -> Image<Complex64> {
        let (r, c) = self.shape;
        Image::from_fn(r, c, |a, b| self.entry(i, a * c + b))
    }

    pub(crate) fn seeded(mut self, seed: u64, label: &str) -> Self {
        self.origin = Some((seed, label.to_string()));
        self
    }
}

impl MeasurementOp for DenseOp {
    fn input_shape(&self) -> (usize, usize) {
        self.shape
    }

    fn output_len(&self) -> usize {
        self.m
    }

    fn apply(&self, x: &Image<Complex64>) -> Vec<Complex64> {
        assert_eq!(x.shape(), self.shape, "operator input shape mismatch");
        let d = self.input_len();
        let xs = x.pixels();
        match &self.entries {
            Entries::Real(a) => a
                .chunks_exact(d)
                .map(|row| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (&w, v) in row.iter().zip(xs) {
                        re += w * v.re;
                        im += w * v.im;
                    }
                    Complex64::new(re, im)
                })
                .collect(),
            Entries::Complex(a) => {
                a.chunks_exact(d).map(|row| row.iter().zip(xs).map(|(w, v)| w * v).sum()).collect()
            }
        }
    }

    fn adjoint(&self, y: &[Complex64]) -> Image<Complex64> {
        assert_eq!(y.len(), self.m, "measurement length mismatch");
        let d = self.input_len();
        let mut out = vec![Complex64::default(); d];
        match &self.entries {
            Entries::Real(a) => {
                for (row, yi) in a.chunks_exact(d).zip(y) {
                    for (o, &w) in out.iter_mut().zip(row) {
                        *o += yi * w;
                    }
                }
            }
            Entries::Complex(a) => {
                for (row, yi) in a.chunks_exact(d).zip(y) {
                    for (o, w) in out.iter_mut().zip(row) {
                        *o += w.conj() * yi;
                    }
                }
            }
        }
        Image::from_vec_unchecked(self.shape.0, self.shape.1, out)
    }

    fn apply_real(&self, x: &Image<f64>) -> Vec<Complex64> {
        match &self.entries {
            Entries::Real(a) => {
                assert_eq!(x.shape(), self.shape, "operator input shape mismatch");
                let xs = x.pixels();
                a.chunks_exact(self.input_len())
                    .map(|row| Complex64::new(row.iter().zip(xs).map(|(w, v)| w * v).sum(), 0.0))
                    .collect()
            }
            Entries::Complex(_) => self.apply(&x.to_complex()),
        }
    }

    fn adjoint_real(&self, y: &[Complex64]) -> Image<f64> {
        match &self.entries {
            Entries::Real(a) => {
                assert_eq!(y.len(), self.m, "measurement length mismatch");
                let d = self.input_len();
                let mut out = vec![0.0; d];
                for (row, yi) in a.chunks_exact(d).zip(y) {
                    let w = yi.re;
                    for (o, &a) in out.iter_mut().zip(row) {
                        *o += w * a;
                    }
                }
                Image::from_vec_unchecked(self.shape.0, self.shape.1, out)
            }
            Entries::Complex(_) => self.adjoint(y).re(),
        }
    }

    fn is_real(&self) -> bool {
        matches!(self.entries, Entries::Real(_))
    }

    fn descriptor(&self) -> OperatorDescriptor {
        match &self.origin {
            Some((seed, label)) if label == "gaussian" => {
                OperatorDescriptor::Gaussian { m: self.m, shape: self.shape, seed: *seed }
            }
            _ => {
                let (re, im) = match &self.entries {
                    Entries::Real(v) => (v.clone(), None),
                    Entries::Complex(v) => {
                        (v.iter().map(|c| c.re).collect(), Some(v.iter().map(|c| c.im).collect()))
                    }
                };
                OperatorDescriptor::Dense { m: self.m, shape: self.shape, re, im }
            }
        }
    }
}

/// Dense operator with i.i.d. `Normal(0, 1/m)` entries, so that
/// `E‖op(x)‖² = ‖x‖²`.
pub fn gaussian_op(m: usize, rows: usize, cols: usize, seed: u64) -> Result<DenseOp> {
    if m == 0 {
        return invalid("gaussian_op needs m >= 1");
    }
    let d = rows * cols;
    if d > super::MAX_DENSE_INPUT {
        return invalid(format!("gaussian_op limited to {} pixels", super::MAX_DENSE_INPUT));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (m as f64).sqrt().recip();
    let data: Vec<f64> = (0..m * d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
        .collect();
    Ok(DenseOp::real(m, (rows, cols), data)?.seeded(seed, "gaussian"))
}
