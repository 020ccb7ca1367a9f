//! Orthonormal bivariate Haar transform on `N × N` images, `N = 2ⁿ`.
//!
//! Coefficients use the usual pyramid layout: the DC term sits at `(0, 0)`,
//! and for each level `j = 0..n` (coarse to fine) the three detail bands
//! occupy `2ʲ × 2ʲ` blocks:
//!
//! | orientation | rows           | cols           |
//! |-------------|----------------|----------------|
//! | `Row`       | `2ʲ + k₁`      | `k₂`           |
//! | `Column`    | `k₁`           | `2ʲ + k₂`      |
//! | `Diagonal`  | `2ʲ + k₁`      | `2ʲ + k₂`      |
//!
//! A level-`j` wavelet is supported on the dyadic square of side `2ⁿ⁻ʲ`
//! pixels whose top-left pixel is `(k₁·2ⁿ⁻ʲ, k₂·2ⁿ⁻ʲ)`, with magnitude
//! `2ʲ⁻ⁿ` and sign `+` on the first half of the split axis.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::image::{tv_norm, Image, TvMode};
use crate::scalar::Scalar;

/// Detail orientation, named by which axis carries the sign change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Sign flips between the top and bottom halves; constant along a row.
    Row,
    /// Sign flips between the left and right halves.
    Column,
    /// Product of both: a checkerboard of four quadrants.
    Diagonal,
}

impl Orientation {
    pub const ALL: [Orientation; 3] = [Orientation::Column, Orientation::Row, Orientation::Diagonal];

    /// The tensor-product selector `(e₁, e₂)`: `1` where the univariate factor
    /// is the mother wavelet, `0` where it is the constant.
    pub fn selector(self) -> (u8, u8) {
        match self {
            Orientation::Row => (1, 0),
            Orientation::Column => (0, 1),
            Orientation::Diagonal => (1, 1),
        }
    }
}

/// Identifies one basis image of the discrete Haar system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaveletIndex {
    Dc,
    Detail { orientation: Orientation, level: u32, shift: (usize, usize) },
}

impl WaveletIndex {
    pub fn detail(orientation: Orientation, level: u32, shift: (usize, usize)) -> Self {
        WaveletIndex::Detail { orientation, level, shift }
    }

    /// Checks the index against a scale count `n`.
    pub fn validate(&self, n: u32) -> Result<()> {
        if let WaveletIndex::Detail { level, shift, .. } = *self {
            if level >= n {
                return invalid(format!("level {level} out of range for n = {n}"));
            }
            let width = 1usize << level;
            if shift.0 >= width || shift.1 >= width {
                return invalid(format!("shift {shift:?} out of range at level {level}"));
            }
        }
        Ok(())
    }

    /// Cell in the pyramid layout.
    pub fn position(&self) -> (usize, usize) {
        match *self {
            WaveletIndex::Dc => (0, 0),
            WaveletIndex::Detail { orientation, level, shift: (k1, k2) } => {
                let w = 1usize << level;
                match orientation {
                    Orientation::Row => (w + k1, k2),
                    Orientation::Column => (k1, w + k2),
                    Orientation::Diagonal => (w + k1, w + k2),
                }
            }
        }
    }

    /// Inverse of [`position`](Self::position).
    pub fn at(row: usize, col: usize) -> Self {
        if row == 0 && col == 0 {
            return WaveletIndex::Dc;
        }
        let top = row.max(col);
        let level = usize::BITS - 1 - top.leading_zeros();
        let w = 1usize << level;
        let (orientation, shift) = match (row >= w, col >= w) {
            (true, false) => (Orientation::Row, (row - w, col)),
            (false, true) => (Orientation::Column, (row, col - w)),
            _ => (Orientation::Diagonal, (row - w, col - w)),
        };
        WaveletIndex::Detail { orientation, level, shift }
    }

    /// Every index of the system for `N = 2ⁿ`, in row-major layout order.
    pub fn all(n: u32) -> impl Iterator<Item = WaveletIndex> {
        let side = 1usize << n;
        (0..side * side).map(move |i| WaveletIndex::at(i / side, i % side))
    }

    /// Value of the basis image at pixel `(r, c)`.
    pub fn value_at(&self, n: u32, r: usize, c: usize) -> f64 {
        let side = 1usize << n;
        match *self {
            WaveletIndex::Dc => 1.0 / side as f64,
            WaveletIndex::Detail { orientation, level, shift: (k1, k2) } => {
                let block = side >> level;
                if r / block != k1 || c / block != k2 {
                    return 0.0;
                }
                let half = block / 2;
                let upper = (r % block) < half;
                let left = (c % block) < half;
                let sign = match orientation {
                    Orientation::Row => upper,
                    Orientation::Column => left,
                    Orientation::Diagonal => upper == left,
                };
                let mag = (block as f64).recip();
                if sign {
                    mag
                } else {
                    -mag
                }
            }
        }
    }
}

/// `C₁ = 36(480√5 + 168√3)`: bound on `k·|c_(k)| / ‖X‖_TV` over all images.
pub fn haar_decay_constant() -> f64 {
    36.0 * (480.0 * 5f64.sqrt() + 168.0 * 3f64.sqrt())
}

/// Scale count `n` for a side length `2ⁿ`.
pub fn scale_count(side: usize) -> Result<u32> {
    if side == 0 || !side.is_power_of_two() {
        return invalid(format!("side {side} is not a power of two"));
    }
    Ok(side.trailing_zeros())
}

/// Haar coefficients of an `N × N` image in pyramid layout.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarCoeffs<T = f64> {
    n: u32,
    coeffs: Image<T>,
}

impl<T: Scalar> HaarCoeffs<T> {
    pub fn new(coeffs: Image<T>) -> Result<Self> {
        let Some(side) = coeffs.side() else {
            return invalid("Haar coefficients must be square");
        };
        let n = scale_count(side)?;
        Ok(Self { n, coeffs })
    }

    pub fn zeros(n: u32) -> Self {
        let side = 1usize << n;
        Self { n, coeffs: Image::zeros(side, side) }
    }

    pub fn scale_count(&self) -> u32 {
        self.n
    }

    pub fn side(&self) -> usize {
        1 << self.n
    }

    pub fn as_image(&self) -> &Image<T> {
        &self.coeffs
    }

    pub fn into_image(self) -> Image<T> {
        self.coeffs
    }

    pub fn get(&self, idx: WaveletIndex) -> T {
        let (r, c) = idx.position();
        self.coeffs.get(r, c)
    }

    pub fn set(&mut self, idx: WaveletIndex, v: T) {
        let (r, c) = idx.position();
        self.coeffs.set(r, c, v);
    }

    pub fn norm_l2(&self) -> f64 {
        self.coeffs.norm_l2()
    }

    pub fn norm_l1(&self) -> f64 {
        self.coeffs.norm_l1()
    }
}

const FRAC_1_2: f64 = 0.5;

/// Forward transform by repeated 2×2 averaging and differencing.
pub fn haar_forward<T: Scalar>(x: &Image<T>) -> Result<HaarCoeffs<T>> {
    let Some(side) = x.side() else {
        return invalid(format!("Haar transform needs a square image, got {:?}", x.shape()));
    };
    let n = scale_count(side)?;
    let mut buf = x.pixels().to_vec();
    let mut tmp = vec![T::zero(); side * side];
    forward_in_place(&mut buf, &mut tmp, side);
    Ok(HaarCoeffs { n, coeffs: Image::from_vec_unchecked(side, side, buf) })
}

pub(crate) fn forward_in_place<T: Scalar>(buf: &mut [T], tmp: &mut [T], side: usize) {
    let mut s = side;
    while s >= 2 {
        let h = s / 2;
        for p in 0..h {
            for q in 0..h {
                let a = buf[2 * p * side + 2 * q];
                let b = buf[2 * p * side + 2 * q + 1];
                let c = buf[(2 * p + 1) * side + 2 * q];
                let d = buf[(2 * p + 1) * side + 2 * q + 1];
                tmp[p * side + q] = (a + b + c + d).scale(FRAC_1_2);
                tmp[(h + p) * side + q] = (a + b - c - d).scale(FRAC_1_2);
                tmp[p * side + h + q] = (a - b + c - d).scale(FRAC_1_2);
                tmp[(h + p) * side + h + q] = (a - b - c + d).scale(FRAC_1_2);
            }
        }
        for r in 0..s {
            buf[r * side..r * side + s].copy_from_slice(&tmp[r * side..r * side + s]);
        }
        s = h;
    }
}

/// Inverse transform; exact inverse of [`haar_forward`] up to rounding.
pub fn haar_inverse<T: Scalar>(c: &HaarCoeffs<T>) -> Image<T> {
    let side = c.side();
    let mut buf = c.coeffs.pixels().to_vec();
    let mut tmp = vec![T::zero(); side * side];
    inverse_in_place(&mut buf, &mut tmp, side);
    Image::from_vec_unchecked(side, side, buf)
}

pub(crate) fn inverse_in_place<T: Scalar>(buf: &mut [T], tmp: &mut [T], side: usize) {
    let mut s = 2;
    while s <= side {
        let h = s / 2;
        for p in 0..h {
            for q in 0..h {
                let ll = buf[p * side + q];
                let rw = buf[(h + p) * side + q];
                let cl = buf[p * side + h + q];
                let dg = buf[(h + p) * side + h + q];
                tmp[2 * p * side + 2 * q] = (ll + rw + cl + dg).scale(FRAC_1_2);
                tmp[2 * p * side + 2 * q + 1] = (ll + rw - cl - dg).scale(FRAC_1_2);
                tmp[(2 * p + 1) * side + 2 * q] = (ll - rw + cl - dg).scale(FRAC_1_2);
                tmp[(2 * p + 1) * side + 2 * q + 1] = (ll - rw - cl + dg).scale(FRAC_1_2);
            }
        }
        for r in 0..s {
            buf[r * side..r * side + s].copy_from_slice(&tmp[r * side..r * side + s]);
        }
        s *= 2;
    }
}

/// The basis image for `idx` at `N = 2ⁿ`, built from its definition.
pub fn wavelet_image(idx: WaveletIndex, n: u32) -> Result<Image> {
    idx.validate(n)?;
    let side = 1usize << n;
    Ok(Image::from_fn(side, side, |r, c| idx.value_at(n, r, c)))
}

/// Coefficient magnitudes in non-increasing order.
pub fn sorted_coeff_magnitudes<T: Scalar>(c: &HaarCoeffs<T>) -> Vec<f64> {
    let mut mags: Vec<f64> = c.coeffs.pixels().iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    mags
}

/// `max_k k·|c_(k)| / ‖x‖_TV`, the empirical constant in the weak-ℓ1 decay
/// of Haar coefficients. Always at most [`haar_decay_constant`].
pub fn decay_ratio<T: Scalar>(x: &Image<T>) -> Result<f64> {
    let tv = tv_norm(x, TvMode::Anisotropic);
    if tv == 0.0 {
        return Err(Error::UndefinedRatio("image has zero total variation".into()));
    }
    let mags = sorted_coeff_magnitudes(&haar_forward(x)?);
    Ok(mags.iter().enumerate().fold(0.0f64, |m, (i, &c)| m.max((i + 1) as f64 * c)) / tv)
}

/// Number of basis images that take different values on two adjacent pixels.
///
/// Walks the (at most two) dyadic squares per level and orientation that
/// contain either pixel, so the cost is `O(n)`.
pub fn edge_nonconstant_count(a: (usize, usize), b: (usize, usize), n: u32) -> Result<usize> {
    let side = 1usize << n;
    if a.0 >= side || a.1 >= side || b.0 >= side || b.1 >= side {
        return invalid(format!("pixels {a:?}, {b:?} outside a {side}x{side} grid"));
    }
    if a.0.abs_diff(b.0) + a.1.abs_diff(b.1) != 1 {
        return invalid(format!("pixels {a:?} and {b:?} are not adjacent"));
    }
    let mut count = 0;
    for level in 0..n {
        let block = side >> level;
        let ka = (a.0 / block, a.1 / block);
        let kb = (b.0 / block, b.1 / block);
        let squares: &[(usize, usize)] = if ka == kb { &[ka][..] } else { &[ka, kb][..] };
        for &shift in squares {
            for orientation in Orientation::ALL {
                let w = WaveletIndex::detail(orientation, level, shift);
                if w.value_at(n, a.0, a.1) != w.value_at(n, b.0, b.1) {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

/// Anisotropic TV of a basis image; never exceeds 8.
pub fn wavelet_gradient_l1(idx: WaveletIndex, n: u32) -> Result<f64> {
    Ok(tv_norm(&wavelet_image(idx, n)?, TvMode::Anisotropic))
}
