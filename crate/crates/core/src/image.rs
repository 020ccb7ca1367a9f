//! Discrete images, forward-difference gradients, total variation and the
//! padding operators that relate measurements of an image to measurements of
//! its directional derivatives.
//!
//! Indexing is zero-based and row-major: pixel `(j, k)` is row `j`, column `k`.
//! The first index is the one differenced by the `x` derivative.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// A dense `rows × cols` grid of scalars stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T = f64> {
    rows: usize,
    cols: usize,
    pixels: Vec<T>,
}

impl<T: Scalar> Image<T> {
    /// Builds an image, rejecting shape mismatches and non-finite entries.
    pub fn new(rows: usize, cols: usize, pixels: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid(format!("image dimensions must be positive, got {rows}x{cols}"));
        }
        if pixels.len() != rows * cols {
            return invalid(format!(
                "expected {} pixels for a {rows}x{cols} image, got {}",
                rows * cols,
                pixels.len()
            ));
        }
        if let Some(pos) = pixels.iter().position(|p| !p.is_finite()) {
            return invalid(format!("non-finite pixel at flat index {pos}"));
        }
        Ok(Self { rows, cols, pixels })
    }

    /// Builds a square image from nested rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return invalid("ragged rows");
        }
        Self::new(n_rows, n_cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, pixels: vec![T::zero(); rows * cols] }
    }

    pub fn constant(rows: usize, cols: usize, value: T) -> Self {
        Self { rows, cols, pixels: vec![value; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut pixels = Vec::with_capacity(rows * cols);
        for j in 0..rows {
            for k in 0..cols {
                pixels.push(f(j, k));
            }
        }
        Self { rows, cols, pixels }
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, pixels: Vec<T>) -> Self {
        debug_assert_eq!(pixels.len(), rows * cols);
        Self { rows, cols, pixels }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Side length when the image is square.
    pub fn side(&self) -> Option<usize> {
        (self.rows == self.cols).then_some(self.rows)
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> T {
        self.pixels[j * self.cols + k]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: T) {
        self.pixels[j * self.cols + k] = v;
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [T] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<T> {
        self.pixels
    }

    /// Non-conjugate transpose.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |j, k| self.get(k, j))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Image<U> {
        Image { rows: self.rows, cols: self.cols, pixels: self.pixels.iter().map(|&p| f(p)).collect() }
    }

    pub fn scaled(&self, k: f64) -> Self {
        self.map(|p| p.scale(k))
    }

    pub fn norm_l2(&self) -> f64 {
        self.pixels.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.pixels.iter().map(|p| p.abs()).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.pixels.iter().fold(0.0, |m, p| m.max(p.abs()))
    }

    pub fn mean(&self) -> T {
        let mut acc = T::zero();
        for &p in &self.pixels {
            acc += p;
        }
        acc.scale(1.0 / self.len() as f64)
    }

    pub fn to_complex(&self) -> Image<Complex64> {
        self.map(Scalar::to_complex)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.shape(), other.shape(), "image shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            pixels: self.pixels.iter().zip(&other.pixels).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl Image<Complex64> {
    pub fn re(&self) -> Image<f64> {
        self.map(|c| c.re)
    }
}

impl<T: Scalar> Add for &Image<T> {
    type Output = Image<T>;
    fn add(self, rhs: Self) -> Image<T> {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<T: Scalar> Sub for &Image<T> {
    type Output = Image<T>;
    fn sub(self, rhs: Self) -> Image<T> {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl<T: Scalar> Mul<T> for &Image<T> {
    type Output = Image<T>;
    fn mul(self, rhs: T) -> Image<T> {
        self.map(|p| p * rhs)
    }
}

/// Image inner product `⟨a, b⟩ = trace(a b*) = Σ a_{jk} conj(b_{jk})`.
pub fn inner_product<T: Scalar>(a: &Image<T>, b: &Image<T>) -> Result<T> {
    if a.shape() != b.shape() {
        return invalid(format!("inner product of {:?} and {:?} images", a.shape(), b.shape()));
    }
    Ok(dot_conj(a.pixels(), b.pixels()))
}

/// `Σ a_i conj(b_i)` over equal-length slices.
pub(crate) fn dot_conj<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y.conj();
    }
    acc
}

/// Which pointwise magnitude the TV semi-norm sums.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvMode {
    /// `|gx| + |gy|` per pixel.
    #[default]
    Anisotropic,
    /// `sqrt(|gx|² + |gy|²)` per pixel.
    Isotropic,
}

/// Discrete gradient stored as two `N × N` planes.
///
/// `gx` holds the row differences `X[j+1,k] − X[j,k]` with its last row
/// forced to zero; `gy` holds the column differences `X[j,k+1] − X[j,k]`
/// with its last column forced to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField<T = f64> {
    n: usize,
    gx: Vec<T>,
    gy: Vec<T>,
}

impl<T: Scalar> GradientField<T> {
    /// Builds a field, checking the forced-zero boundary.
    pub fn new(n: usize, gx: Vec<T>, gy: Vec<T>) -> Result<Self> {
        if gx.len() != n * n || gy.len() != n * n {
            return invalid(format!("gradient planes must hold {} entries", n * n));
        }
        let zero = T::zero();
        for k in 0..n {
            if gx[(n - 1) * n + k] != zero {
                return invalid(format!("gx[{}, {k}] must be zero", n - 1));
            }
        }
        for j in 0..n {
            if gy[j * n + n - 1] != zero {
                return invalid(format!("gy[{j}, {}] must be zero", n - 1));
            }
        }
        Ok(Self { n, gx, gy })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, gx: vec![T::zero(); n * n], gy: vec![T::zero(); n * n] }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn gx(&self) -> &[T] {
        &self.gx
    }

    pub fn gy(&self) -> &[T] {
        &self.gy
    }

    pub(crate) fn planes_mut(&mut self) -> (&mut [T], &mut [T]) {
        (&mut self.gx, &mut self.gy)
    }

    /// All `2N²` entries, `gx` plane first, each plane row-major.
    pub fn entries(&self) -> impl Iterator<Item = T> + '_ {
        self.gx.iter().chain(&self.gy).copied()
    }

    /// The `(N−1) × N` row-difference matrix `X_x`.
    pub fn x_derivative(&self) -> Image<T> {
        let n = self.n;
        Image::from_vec_unchecked(n - 1, n, self.gx[..(n - 1) * n].to_vec())
    }

    /// The `N × (N−1)` column-difference matrix `X_y`.
    pub fn y_derivative(&self) -> Image<T> {
        let n = self.n;
        Image::from_fn(n, n - 1, |j, k| self.gy[j * n + k])
    }

    pub fn norm_l1(&self) -> f64 {
        self.entries().map(|g| g.abs()).sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.entries().map(|g| g.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Sum of per-pixel Euclidean magnitudes.
    pub fn norm_isotropic(&self) -> f64 {
        self.gx.iter().zip(&self.gy).map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt()).sum()
    }

    pub fn inner_product(&self, other: &Self) -> T {
        dot_conj(&self.gx, &other.gx) + dot_conj(&self.gy, &other.gy)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let diff = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x - y).collect::<Vec<_>>();
        Self { n: self.n, gx: diff(&self.gx, &other.gx), gy: diff(&self.gy, &other.gy) }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            n: self.n,
            gx: self.gx.iter().map(|g| g.scale(k)).collect(),
            gy: self.gy.iter().map(|g| g.scale(k)).collect(),
        }
    }
}

/// Forward differences of a square image with zero boundary.
pub fn discrete_gradient<T: Scalar>(x: &Image<T>) -> Result<GradientField<T>> {
    let Some(n) = x.side() else {
        return invalid(format!("gradient needs a square image, got {:?}", x.shape()));
    };
    if n < 2 {
        return invalid("gradient needs N >= 2");
    }
    let mut g = GradientField::zeros(n);
    gradient_into(x, &mut g);
    Ok(g)
}

/// Writes `∇x` into an existing field of matching side.
pub(crate) fn gradient_into<T: Scalar>(x: &Image<T>, g: &mut GradientField<T>) {
    let n = g.n;
    let p = x.pixels();
    for j in 0..n {
        let row = &p[j * n..(j + 1) * n];
        for k in 0..n {
            let here = row[k];
            g.gx[j * n + k] = if j + 1 < n { p[(j + 1) * n + k] - here } else { T::zero() };
            g.gy[j * n + k] = if k + 1 < n { row[k + 1] - here } else { T::zero() };
        }
    }
}

/// Adjoint of [`discrete_gradient`] (the negative discrete divergence).
///
/// Satisfies `⟨∇x, g⟩ = ⟨x, ∇*g⟩` for every image `x`.
pub fn gradient_adjoint<T: Scalar>(g: &GradientField<T>) -> Image<T> {
    let mut out = Image::zeros(g.n, g.n);
    gradient_adjoint_into(g, &mut out);
    out
}

pub(crate) fn gradient_adjoint_into<T: Scalar>(g: &GradientField<T>, out: &mut Image<T>) {
    let n = g.n;
    let o = out.pixels_mut();
    for j in 0..n {
        for k in 0..n {
            let mut v = T::zero();
            if j + 1 < n {
                v -= g.gx[j * n + k];
            }
            if j > 0 {
                v += g.gx[(j - 1) * n + k];
            }
            if k + 1 < n {
                v -= g.gy[j * n + k];
            }
            if k > 0 {
                v += g.gy[j * n + k - 1];
            }
            o[j * n + k] = v;
        }
    }
}

/// Total-variation semi-norm. Returns 0 for 1×1 and non-square inputs are
/// differenced along both axes the same way.
pub fn tv_norm<T: Scalar>(x: &Image<T>, mode: TvMode) -> f64 {
    let (rows, cols) = x.shape();
    let mut total = 0.0;
    for j in 0..rows {
        for k in 0..cols {
            let here = x.get(j, k);
            let dx = if j + 1 < rows { (x.get(j + 1, k) - here).norm_sqr() } else { 0.0 };
            let dy = if k + 1 < cols { (x.get(j, k + 1) - here).norm_sqr() } else { 0.0 };
            total += match mode {
                TvMode::Anisotropic => dx.sqrt() + dy.sqrt(),
                TvMode::Isotropic => (dx + dy).sqrt(),
            };
        }
    }
    total
}

/// Indices of the `s` largest magnitudes, ties broken by lower index first.
pub fn top_s_indices(magnitudes: &[f64], s: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..magnitudes.len()).collect();
    // sort_by is stable, so equal magnitudes keep index order
    order.sort_by(|&a, &b| magnitudes[b].total_cmp(&magnitudes[a]));
    order.truncate(s);
    order
}

/// `‖v − v_s‖₁` where `v_s` keeps the `s` largest-magnitude entries.
pub fn best_s_term_tail_l1(magnitudes: &[f64], s: usize) -> f64 {
    if s >= magnitudes.len() {
        return 0.0;
    }
    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted[s..].iter().sum()
}

/// `‖∇x − (∇x)_s‖₁`, the ℓ1 tail of the gradient after removing its `s`
/// largest entries.
pub fn best_s_term_gradient_error<T: Scalar>(x: &Image<T>, s: usize) -> Result<f64> {
    let g = discrete_gradient(x)?;
    let mags: Vec<f64> = g.entries().map(|v| v.abs()).collect();
    Ok(best_s_term_tail_l1(&mags, s))
}

/// Number of nonzero gradient entries.
pub fn gradient_support_size<T: Scalar>(x: &Image<T>) -> Result<usize> {
    let g = discrete_gradient(x)?;
    Ok(g.entries().filter(|v| *v != T::zero()).count())
}

/// Where the extra zero row goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Zero row on top (`Φ⁰`).
    TopZeros,
    /// Zero row at the bottom (`Φ₀`).
    BottomZeros,
}

/// An `(N−1) × N` matrix extended to `N × N` with a zero row.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedMatrix<T = f64> {
    pub source: Image<T>,
    pub placement: Placement,
    pub realized: Image<T>,
}

/// Extends `phi` by one zero row at the top or bottom.
pub fn pad<T: Scalar>(phi: &Image<T>, placement: Placement) -> Result<PaddedMatrix<T>> {
    let (r, c) = phi.shape();
    if r + 1 != c {
        return invalid(format!("pad expects an (N-1)xN matrix, got {r}x{c}"));
    }
    let n = c;
    let realized = match placement {
        Placement::TopZeros => {
            Image::from_fn(n, n, |j, k| if j == 0 { T::zero() } else { phi.get(j - 1, k) })
        }
        Placement::BottomZeros => {
            Image::from_fn(n, n, |j, k| if j == n - 1 { T::zero() } else { phi.get(j, k) })
        }
    };
    Ok(PaddedMatrix { source: phi.clone(), placement, realized })
}
