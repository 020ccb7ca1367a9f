//! Empirical restricted-isometry estimation and numerical checks of the
//! cone/tube proposition and the strengthened Sobolev inequality.
//!
//! Certifying the RIP is intractable in general. The exhaustive estimator
//! is exact but limited to tiny dimensions; the sampled estimator only ever
//! produces a lower bound on `δ_s`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{haar_decay_constant, haar_forward};
use crate::image::{top_s_indices, tv_norm, Image, TvMode};
use crate::operators::{materialize, vec_norm, MeasurementOp};

/// Largest number of supports the exhaustive estimator will enumerate.
pub const EXHAUSTIVE_BUDGET: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RipMethod {
    Exhaustive,
    Sampled { trials: usize, seed: u64 },
}

/// Outcome of a restricted-isometry estimate of order `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RipEstimate {
    pub order_s: usize,
    /// `max(1 − min_ratio, max_ratio − 1)`; exact for the exhaustive method,
    /// a lower bound on `δ_s` otherwise.
    pub delta_lower: f64,
    pub method: RipMethod,
    /// Extremes of `‖op(x)‖² / ‖x‖²` over the probed `s`-sparse inputs.
    pub extremes: (f64, f64),
}

impl RipEstimate {
    fn from_extremes(order_s: usize, method: RipMethod, lo: f64, hi: f64) -> Self {
        Self { order_s, delta_lower: (1.0 - lo).max(hi - 1.0).max(0.0), method, extremes: (lo, hi) }
    }
}

/// `C(n, k)` without overflow for the sizes we care about.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Advances `comb` to the next `k`-combination of `0..n` in lexicographic
/// order. Returns `false` after the last one.
fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Column Gram data for an explicit matrix.
struct Columns {
    m: usize,
    d: usize,
    /// Column-major entries.
    cols: Vec<Complex64>,
    real: bool,
}

impl Columns {
    fn of(op: &dyn MeasurementOp) -> Result<Self> {
        let dense = materialize(op)?;
        let (m, d) = (dense.rows(), dense.input_len());
        let mut cols = vec![Complex64::default(); m * d];
        let mut real = true;
        for i in 0..m {
            for j in 0..d {
                let v = dense.entry(i, j);
                real &= v.im == 0.0;
                cols[j * m + i] = v;
            }
        }
        Ok(Self { m, d, cols, real })
    }

    fn col(&self, j: usize) -> &[Complex64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    fn gram_entry(&self, a: usize, b: usize) -> Complex64 {
        self.col(a).iter().zip(self.col(b)).map(|(x, y)| x.conj() * y).sum()
    }

    /// Extreme eigenvalues of `A_Sᴴ A_S`.
    fn extremes(&self, support: &[usize], gram: Option<&[Complex64]>) -> (f64, f64) {
        let s = support.len();
        let entry = |a: usize, b: usize| match gram {
            Some(g) => g[support[a] * self.d + support[b]],
            None => self.gram_entry(support[a], support[b]),
        };
        match s {
            1 => {
                let v = entry(0, 0).re;
                (v, v)
            }
            2 => {
                let (p, q, r) = (entry(0, 0).re, entry(1, 1).re, entry(0, 1));
                let mid = 0.5 * (p + q);
                let rad = (0.25 * (p - q) * (p - q) + r.norm_sqr()).sqrt();
                (mid - rad, mid + rad)
            }
            _ if self.real => {
                let g = DMatrix::from_fn(s, s, |a, b| entry(a, b).re);
                min_max(SymmetricEigen::new(g).eigenvalues.iter().copied())
            }
            _ => {
                let g = DMatrix::from_fn(s, s, entry);
                min_max(SymmetricEigen::new(g).eigenvalues.iter().copied())
            }
        }
    }
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Exact `δ_s` from the extreme squared singular values of every `m × s`
/// column submatrix.
pub fn estimate_rip_exhaustive(op: &dyn MeasurementOp, s: usize) -> Result<RipEstimate> {
    let (r, c) = op.input_shape();
    let d = r * c;
    if s == 0 || s > d {
        return crate::error::invalid(format!("order s = {s} must lie in 1..={d}"));
    }
    let supports = binomial(d, s);
    if supports > EXHAUSTIVE_BUDGET {
        return Err(Error::BudgetExceeded { supports, budget: EXHAUSTIVE_BUDGET });
    }
    let cols = Columns::of(op)?;
    let gram: Option<Vec<Complex64>> = (d <= 2048 && s > 1).then(|| {
        let mut g = vec![Complex64::default(); d * d];
        for a in 0..d {
            for b in a..d {
                let v = cols.gram_entry(a, b);
                g[a * d + b] = v;
                g[b * d + a] = v.conj();
            }
        }
        g
    });

    // parallel over the first support element; min/max reductions are order-free
    let (lo, hi) = (0..=d - s)
        .into_par_iter()
        .map(|first| {
            // tail enumerates (s−1)-combinations of first+1..d
            let rest = d - first - 1;
            let mut tail: Vec<usize> = (0..s - 1).collect();
            let mut support = vec![first; s];
            let mut acc = (f64::INFINITY, f64::NEG_INFINITY);
            loop {
                for (dst, &t) in support[1..].iter_mut().zip(&tail) {
                    *dst = first + 1 + t;
                }
                let (a, b) = cols.extremes(&support, gram.as_deref());
                acc = (acc.0.min(a), acc.1.max(b));
                if tail.is_empty() || !next_combination(&mut tail, rest) {
                    break;
                }
            }
            acc
        })
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    Ok(RipEstimate::from_extremes(s, RipMethod::Exhaustive, lo, hi))
}

/// Lower bound on `δ_s` from random `s`-sparse unit probes.
///
/// Probe `t` draws from its own stream `(seed, t)`, so results do not
/// depend on thread scheduling and grow monotonically with `trials`.
pub fn estimate_rip_sampled(op: &dyn MeasurementOp, s: usize, trials: usize, seed: u64) -> Result<RipEstimate> {
    let (r, c) = op.input_shape();
    let d = r * c;
    if s == 0 || s > d {
        return crate::error::invalid(format!("order s = {s} must lie in 1..={d}"));
    }
    if trials == 0 {
        return crate::error::invalid("need at least one trial");
    }
    let complex = !op.is_real();
    let (lo, hi) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let support = index::sample(&mut rng, d, s);
            let mut x = Image::<Complex64>::zeros(r, c);
            for j in support.iter() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = if complex { StandardNormal.sample(&mut rng) } else { 0.0 };
                x.pixels_mut()[j] = Complex64::new(re, im);
            }
            let norm2 = x.norm_l2().powi(2);
            if norm2 == 0.0 {
                return (1.0, 1.0);
            }
            let ratio = vec_norm(&op.apply(&x)).powi(2) / norm2;
            (ratio, ratio)
        })
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    Ok(RipEstimate::from_extremes(s, RipMethod::Sampled { trials, seed }, lo, hi))
}

/// Tube radius multiplier for the image error `‖M(D)‖ ≤ 2ε` of two feasible
/// points.
pub const TUBE_IMAGE: f64 = 2.0;
/// Tube radius multiplier for the stacked derivative error
/// `‖[A A′](L)‖² ≤ 8ε²`.
pub const TUBE_GRADIENT: f64 = 2.0 * std::f64::consts::SQRT_2;

/// A candidate error `D` together with the cone and tube parameters it is
/// claimed to satisfy.
#[derive(Clone, Debug)]
pub struct ConeTubeInstance {
    pub d: Image<Complex64>,
    pub support: Vec<usize>,
    /// Cardinality bound `k ≥ |S|`.
    pub k: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub eps: f64,
    /// Tube premise is `‖op(D)‖ ≤ tube_multiplier · eps`.
    pub tube_multiplier: f64,
}

impl ConeTubeInstance {
    /// Tightest `σ` and `ε` for which `d` satisfies both premises with the
    /// support `S` = its `k` largest entries.
    pub fn tightest(d: Image<Complex64>, op: &dyn MeasurementOp, k: usize, gamma: f64, tube_multiplier: f64) -> Self {
        let mags: Vec<f64> = d.pixels().iter().map(|v| v.norm()).collect();
        let support = top_s_indices(&mags, k);
        let (on, off) = split_l1(&mags, &support);
        let sigma = (off - gamma * on).max(0.0);
        let eps = vec_norm(&op.apply(&d)) / tube_multiplier;
        Self { d, support, k, gamma, sigma, eps, tube_multiplier }
    }
}

fn split_l1(mags: &[f64], support: &[usize]) -> (f64, f64) {
    let on: f64 = support.iter().map(|&i| mags[i]).sum();
    let total: f64 = mags.iter().sum();
    (on, (total - on).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Holds,
    Violated,
    PremiseViolation,
}

/// Both sides of every premise and conclusion of the cone/tube check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeTubeReport {
    pub cone_lhs: f64,
    pub cone_rhs: f64,
    pub tube_lhs: f64,
    pub tube_rhs: f64,
    /// `Some` when an RIP estimate was supplied: whether its order reaches
    /// `5kγ²` with `δ < 1/3`.
    pub rip_premise: Option<bool>,
    pub l2_lhs: f64,
    pub l2_rhs: f64,
    pub l1_lhs: f64,
    pub l1_rhs: f64,
    pub status: CheckStatus,
}

/// Relative slack for premise checks on values computed in floating point.
const PREMISE_RTOL: f64 = 1e-9;

/// Checks `‖D‖₂ ≤ 8r + 5σ/(γ√k)` and `‖D‖₁ ≤ 2γ√k(5r + 3σ/(γ√k)) + σ`
/// with tube radius `r = tube_multiplier · ε`, after verifying the cone and
/// tube premises numerically.
pub fn check_cone_tube(inst: &ConeTubeInstance, op: &dyn MeasurementOp, rip: Option<&RipEstimate>) -> ConeTubeReport {
    let mags: Vec<f64> = inst.d.pixels().iter().map(|v| v.norm()).collect();
    let (on, off) = split_l1(&mags, &inst.support);
    let cone_rhs = inst.gamma * on + inst.sigma;
    let radius = inst.tube_multiplier * inst.eps;
    let tube_lhs = vec_norm(&op.apply(&inst.d));
    let gk = inst.gamma * (inst.k as f64).sqrt();
    let l2_rhs = 8.0 * radius + 5.0 * inst.sigma / gk;
    let l1_rhs = 2.0 * gk * (5.0 * radius + 3.0 * inst.sigma / gk) + inst.sigma;
    let l2_lhs = inst.d.norm_l2();
    let l1_lhs = inst.d.norm_l1();

    let rip_premise = rip.map(|r| {
        let needed = (5.0 * inst.k as f64 * inst.gamma * inst.gamma).ceil() as usize;
        r.order_s >= needed && r.delta_lower < 1.0 / 3.0
    });
    let premises = inst.support.len() <= inst.k
        && inst.gamma >= 1.0
        && inst.sigma >= 0.0
        && off <= cone_rhs * (1.0 + PREMISE_RTOL) + f64::MIN_POSITIVE
        && tube_lhs <= radius * (1.0 + PREMISE_RTOL) + 1e-300
        && rip_premise != Some(false);
    let status = if !premises {
        CheckStatus::PremiseViolation
    } else if l2_lhs <= l2_rhs * (1.0 + PREMISE_RTOL) && l1_lhs <= l1_rhs * (1.0 + PREMISE_RTOL) {
        CheckStatus::Holds
    } else {
        CheckStatus::Violated
    };
    ConeTubeReport {
        cone_lhs: off,
        cone_rhs,
        tube_lhs,
        tube_rhs: radius,
        rip_premise,
        l2_lhs,
        l2_rhs,
        l1_lhs,
        l1_rhs,
        status,
    }
}

/// Constant in `‖D‖₂ ≤ C · [(‖D‖_TV/√s)·ln(N²/s) + ε]` obtained by chaining
/// the Haar decay bound through the RIP of `B H⁻¹` at level `delta`:
///
/// `‖Y_S‖₂ ≤ [ε + (1+δ)·C₁·ln(N²/s)·TV/√s] / (1−δ)` and
/// `‖Y_{Sᶜ}‖₂ ≤ C₁·TV/√s`, hence
/// `C = max(1/(1−δ), C₁·((1+δ)/(1−δ) + 1/ln(N²/s)))`.
pub fn strong_sobolev_constant(delta: f64, side: usize, s: usize) -> Result<f64> {
    let n2 = (side * side) as f64;
    if !(0.0..1.0).contains(&delta) {
        return crate::error::invalid(format!("need 0 <= delta < 1, got {delta}"));
    }
    if s == 0 || s as f64 >= n2 {
        return crate::error::invalid(format!("need 1 <= s < N², got s = {s}"));
    }
    let log = (n2 / s as f64).ln();
    let c1 = haar_decay_constant();
    Ok((1.0 / (1.0 - delta)).max(c1 * ((1.0 + delta) / (1.0 - delta) + 1.0 / log)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrongSobolevReport {
    pub eps: f64,
    pub l2: f64,
    pub tv: f64,
    /// `(‖D‖_TV/√s)·ln(N²/s) + ε`.
    pub rhs_core: f64,
    pub ratio: f64,
    pub constant: f64,
    /// `ℓ1` norm of the Haar coefficients outside the `s` largest.
    pub haar_tail_l1: f64,
    pub holds: bool,
}

/// Evaluates the strengthened Sobolev ratio for an error image `D` against
/// `B` with `ε = ‖B(D)‖₂`, asserting it against the constant for `delta`.
pub fn check_strong_sobolev(d: &Image<f64>, b: &dyn MeasurementOp, s: usize, delta: f64) -> Result<StrongSobolevReport> {
    let Some(side) = d.side() else {
        return crate::error::invalid("strong Sobolev check needs a square image");
    };
    let constant = strong_sobolev_constant(delta, side, s)?;
    let eps = vec_norm(&b.apply_real(d));
    let tv = tv_norm(d, TvMode::Anisotropic);
    let l2 = d.norm_l2();
    let log = ((side * side) as f64 / s as f64).ln();
    let rhs_core = tv / (s as f64).sqrt() * log + eps;
    let ratio = if l2 == 0.0 { 0.0 } else { l2 / rhs_core };
    let coeffs = haar_forward(d)?;
    let mags: Vec<f64> = coeffs.as_image().pixels().iter().map(|v| v.abs()).collect();
    let haar_tail_l1 = crate::image::best_s_term_tail_l1(&mags, s);
    Ok(StrongSobolevReport { eps, l2, tv, rhs_core, ratio, constant, haar_tail_l1, holds: ratio <= constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::DenseOp;

    #[test]
    fn binomials() {
        assert_eq!(binomial(16, 2), 120);
        assert_eq!(binomial(64, 10), 151_473_214_816);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut comb = vec![0, 1, 2];
        let mut count = 1;
        while next_combination(&mut comb, 6) {
            count += 1;
        }
        assert_eq!(count, 20);
    }

    #[test]
    fn identity_has_zero_delta() {
        let op = DenseOp::identity(4);
        for s in 1..=4 {
            assert_eq!(estimate_rip_exhaustive(&op, s).unwrap().delta_lower, 0.0);
            assert_eq!(estimate_rip_sampled(&op, s, 50, 1).unwrap().delta_lower, 0.0);
        }
    }

    #[test]
    fn diagonal_order_one() {
        let op = DenseOp::diagonal(&[1.0, 1.0, 1.0, 2.0]);
        let est = estimate_rip_exhaustive(&op, 1).unwrap();
        assert_eq!(est.delta_lower, 3.0);
        assert_eq!(est.extremes, (1.0, 4.0));
    }

    #[test]
    fn budget_is_enforced() {
        let op = DenseOp::identity(64);
        assert!(matches!(estimate_rip_exhaustive(&op, 10), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn strong_sobolev_zero_image() {
        let b =crate::operators::gaussian_op(10, 4, 4, 1).unwrap();
        let r = check_strong_sobolev(&Image::zeros(4, 4), &b, 2, 0.5).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert!(r.holds);
    }
}
