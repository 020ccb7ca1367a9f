//! Primal-dual decoders for
//!
//! * TV: `min ‖Z‖_TV  s.t. ‖op(Z) − y‖₂ ≤ ε`,
//! * ℓ1: `min ‖c‖₁   s.t. ‖op(c) − y‖₂ ≤ ε`,
//! * Haar-ℓ1: the ℓ1 program on Haar coefficients, `Z = H⁻¹c`.
//!
//! All three run Chambolle–Pock iterations with a fixed primal/dual step
//! ratio. Measurements are normalized by `‖y‖₂` internally, which
//! makes every decoder exactly scale-equivariant.
//!
//! A result counts as feasible when
//! `‖op(X̂) − y‖₂ ≤ max(ε, feas_slack·‖y‖₂/100)·(1 + feas_slack)`; the floor
//! lets `ε = 0` programs terminate.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::haar::{haar_inverse, HaarCoeffs};
use crate::image::{gradient_adjoint_into, gradient_into, tv_norm, GradientField, Image, TvMode};
use crate::operators::{compose_with_inverse_haar, vec_norm, Measurable, MeasurementOp, SharedOp};
use crate::scalar::Scalar;

/// Radius used in place of `ε = 0`, relative to `‖y‖₂`.
pub const ZERO_EPS_RADIUS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop once the relative change of the iterate falls below this.
    pub rel_tol: f64,
    pub feas_slack: f64,
    pub tv_mode: TvMode,
    /// Ratio `τ/σ` of primal to dual step, in units where `‖y‖₂ = 1`.
    /// Small values weight the measurement constraint heavily, which is what
    /// drives noisy programs onto the ε-sphere quickly.
    pub step_ratio: f64,
    pub power_iters: usize,
    pub power_seed: u64,
    /// Keep every per-iteration record (otherwise only every 10th).
    pub full_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            rel_tol: 1e-6,
            feas_slack: 1e-4,
            tv_mode: TvMode::Anisotropic,
            step_ratio: 1e-5,
            power_iters: 20,
            power_seed: 0,
            full_history: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.power_iters == 0 {
            return invalid("max_iters and power_iters must be positive");
        }
        if !(self.rel_tol > 0.0 && self.feas_slack > 0.0 && self.step_ratio > 0.0) {
            return invalid("rel_tol, feas_slack and step_ratio must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iteration: usize,
    pub objective: f64,
    pub residual: f64,
    /// Smallest objective among feasible iterates so far.
    pub best_feasible: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult<T: Scalar = f64> {
    pub estimate: Image<T>,
    pub iterations: usize,
    pub residual: f64,
    pub objective: f64,
    /// The ball radius `ε` the program was solved with.
    pub eps: f64,
    /// Residual bound a converged result satisfies.
    pub feas_tol: f64,
    pub converged: bool,
    pub history: Vec<IterRecord>,
}

impl<T: Scalar> ReconstructionResult<T> {
    fn rescaled(mut self, k: f64) -> Self {
        self.estimate = self.estimate.scaled(k);
        self.residual *= k;
        self.objective *= k;
        self.eps *= k;
        self.feas_tol *= k;
        for h in &mut self.history {
            h.objective *= k;
            h.residual *= k;
            h.best_feasible = h.best_feasible.map(|v| v * k);
        }
        self
    }
}

/// Estimate of `‖op‖₂` by power iteration from a seeded Gaussian start.
pub fn operator_norm<T: Measurable>(op: &dyn MeasurementOp, iters: usize, seed: u64) -> f64 {
    let (r, c) = op.input_shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Image::<T>::from_fn(r, c, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        T::from_complex(Complex64::new(re, im))
    });
    let mut est = 0.0;
    for _ in 0..iters {
        let nx = x.norm_l2();
        if nx == 0.0 {
            return 0.0;
        }
        x = x.scaled(1.0 / nx);
        let ax = T::measure(op, &x);
        est = vec_norm(&ax);
        x = T::back_project(op, &ax);
    }
    est
}

/// Projection of `v` onto the ball `B(center, radius)`.
fn project_ball(v: &mut [Complex64], center: &[Complex64], radius: f64) {
    let dist = v.iter().zip(center).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    if dist > radius {
        let k = radius / dist;
        for (a, b) in v.iter_mut().zip(center) {
            *a = b + (*a - b) * k;
        }
    }
}

/// Dual update for the ball indicator: `q ← v − σ·proj_B(v/σ)` with
/// `v = q + σ·op(x̄)`.
fn ball_dual_update(q: &mut [Complex64], ax_bar: &[Complex64], y: &[Complex64], radius: f64, sigma: f64) {
    let mut v: Vec<Complex64> = q.iter().zip(ax_bar).map(|(qi, ai)| qi + ai * sigma).collect();
    let mut p: Vec<Complex64> = v.iter().map(|vi| vi / sigma).collect();
    project_ball(&mut p, y, radius);
    for ((qi, vi), pi) in q.iter_mut().zip(v.iter_mut()).zip(&p) {
        *qi = *vi - pi * sigma;
    }
}

fn shrink<T: Scalar>(v: T, t: f64) -> T {
    let a = v.abs();
    if a <= t {
        T::zero()
    } else {
        v.scale(1.0 - t / a)
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (*x - *y).norm_sqr()).sum()
}

/// The nonsmooth part of the primal objective together with its linear map.
trait Regularizer<T: Scalar> {
    type Dual;
    fn zero_dual(&self) -> Self::Dual;
    /// Value of the regularizer at `x`.
    fn value(&self, x: &Image<T>) -> f64;
    /// `out = x − τ·(K_reg* dual + back)` followed by the regularizer's prox
    /// when it has no dual variable.
    fn primal_step(&self, x: &Image<T>, dual: &Self::Dual, back: &Image<T>, tau: f64, out: &mut Image<T>);
    /// Dual ascent and projection for the regularizer's own dual variable.
    fn dual_step(&self, dual: &mut Self::Dual, x_bar: &Image<T>, sigma: f64);
    /// Squared norm of the regularizer's linear map (0 when it is a prox).
    fn op_norm_sq(&self) -> f64;
}

struct TvReg {
    n: usize,
    mode: TvMode,
}

impl<T: Scalar> Regularizer<T> for TvReg {
    type Dual = GradientField<T>;

    fn zero_dual(&self) -> GradientField<T> {
        GradientField::zeros(self.n)
    }

    fn value(&self, x: &Image<T>) -> f64 {
        tv_norm(x, self.mode)
    }

    fn primal_step(&self, x: &Image<T>, dual: &GradientField<T>, back: &Image<T>, tau: f64, out: &mut Image<T>) {
        let mut div = Image::zeros(self.n, self.n);
        gradient_adjoint_into(dual, &mut div);
        for ((o, &xi), (&di, &bi)) in out.pixels_mut().iter_mut().zip(x.pixels()).zip(div.pixels().iter().zip(back.pixels())) {
            *o = xi - (di + bi).scale(tau);
        }
    }

    fn dual_step(&self, dual: &mut GradientField<T>, x_bar: &Image<T>, sigma: f64) {
        let mut g = GradientField::zeros(self.n);
        gradient_into(x_bar, &mut g);
        let (px, py) = dual.planes_mut();
        for (p, gv) in px.iter_mut().zip(g.gx()).chain(py.iter_mut().zip(g.gy())) {
            *p += gv.scale(sigma);
        }
        match self.mode {
            TvMode::Anisotropic => {
                for p in px.iter_mut().chain(py.iter_mut()) {
                    let a = p.abs();
                    if a > 1.0 {
                        *p = p.scale(1.0 / a);
                    }
                }
            }
            TvMode::Isotropic => {
                for (a, b) in px.iter_mut().zip(py.iter_mut()) {
                    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
                    if r > 1.0 {
                        *a = a.scale(1.0 / r);
                        *b = b.scale(1.0 / r);
                    }
                }
            }
        }
    }

    fn op_norm_sq(&self) -> f64 {
        8.0
    }
}

struct L1Reg;

impl<T: Scalar> Regularizer<T> for L1Reg {
    type Dual = ();

    fn zero_dual(&self) {}

    fn value(&self, x: &Image<T>) -> f64 {
        x.norm_l1()
    }

    fn primal_step(&self, x: &Image<T>, _: &(), back: &Image<T>, tau: f64, out: &mut Image<T>) {
        for ((o, &xi), &bi) in out.pixels_mut().iter_mut().zip(x.pixels()).zip(back.pixels()) {
            *o = shrink(xi - bi.scale(tau), tau);
        }
    }

    fn dual_step(&self, _: &mut (), _: &Image<T>, _: f64) {}

    fn op_norm_sq(&self) -> f64 {
        0.0
    }
}

/// Feasibility floor relative to `‖y‖₂`, as a multiple of `feas_slack`.
pub const FEAS_FLOOR: f64 = 1e-2;
/// Safety factor on the power-method norm estimate.
const NORM_SAFETY: f64 = 1.05;
/// Iterations before the relative-change test may stop the run.
const MIN_ITERS: usize = 10;

fn primal_dual<T: Measurable, R: Regularizer<T>>(
    reg: &R,
    op: &dyn MeasurementOp,
    y: &[Complex64],
    eps: f64,
    config: &SolverConfig,
) -> Result<ReconstructionResult<T>> {
    config.validate()?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return invalid(format!("eps must be finite and non-negative, got {eps}"));
    }
    if y.len() != op.output_len() {
        return invalid(format!("expected {} measurements, got {}", op.output_len(), y.len()));
    }
    if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return invalid("measurements must be finite");
    }
    let (rows, cols) = op.input_shape();
    let y_norm = vec_norm(y);
    if y_norm == 0.0 {
        return Ok(ReconstructionResult {
            estimate: Image::zeros(rows, cols),
            iterations: 0,
            residual: 0.0,
            objective: 0.0,
            eps,
            feas_tol: 0.0,
            converged: true,
            history: Vec::new(),
        });
    }

    // normalized program: ‖y‖ = 1
    let y: Vec<Complex64> = y.iter().map(|v| v / y_norm).collect();
    let eps_n = eps / y_norm;
    let radius = eps_n.max(ZERO_EPS_RADIUS);
    let feas_tol = eps_n.max(config.feas_slack * FEAS_FLOOR) * (1.0 + config.feas_slack);

    let m_norm = operator_norm::<T>(op, config.power_iters, config.power_seed) * NORM_SAFETY;
    if m_norm == 0.0 {
        return invalid("operator annihilates every probe; nothing to solve");
    }
    // scale the measurement block so both blocks have comparable norm
    let k_norm_sq = reg.op_norm_sq().max(1.0);
    let lambda = k_norm_sq.sqrt() / m_norm;
    let l_sq = reg.op_norm_sq() + (lambda * m_norm).powi(2);
    let tau = config.step_ratio.sqrt() / l_sq.sqrt() * 0.99;
    let sigma = 1.0 / (config.step_ratio.sqrt() * l_sq.sqrt()) * 0.99;

    // scaled block λ·op with data λ·y and radius λ·r
    let y_s: Vec<Complex64> = y.iter().map(|v| v * lambda).collect();
    let radius_s = radius * lambda;

    let mut x = Image::<T>::zeros(rows, cols);
    let mut x_new = Image::<T>::zeros(rows, cols);
    let mut p = reg.zero_dual();
    let mut q = vec![Complex64::default(); y.len()];
    let mut ax = vec![Complex64::default(); y.len()];
    let mut back = Image::<T>::zeros(rows, cols);

    let mut best: Option<(f64, Image<T>, f64)> = None;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=config.max_iters {
        iterations = it;
        // primal step
        reg.primal_step(&x, &p, &back, tau, &mut x_new);
        let ax_new: Vec<Complex64> = T::measure(op, &x_new).into_iter().map(|v| v * lambda).collect();
        let ax_bar: Vec<Complex64> = ax_new.iter().zip(&ax).map(|(a, b)| a * 2.0 - b).collect();
        let x_bar = &x_new.scaled(2.0) - &x;

        // dual steps
        reg.dual_step(&mut p, &x_bar, sigma);
        ball_dual_update(&mut q, &ax_bar, &y_s, radius_s, sigma);
        let back_new = T::back_project(op, &q).scaled(lambda);

        // residual bookkeeping on the normalized program
        let residual = vec_norm(&ax_new.iter().zip(&y_s).map(|(a, b)| a - b).collect::<Vec<_>>()) / lambda;
        let objective = reg.value(&x_new);
        let feasible = residual <= feas_tol;
        if feasible && best.as_ref().is_none_or(|b| objective < b.0) {
            best = Some((objective, x_new.clone(), residual));
        }
        if config.full_history || it % 10 == 0 || it == 1 {
            history.push(IterRecord { iteration: it, objective, residual, best_feasible: best.as_ref().map(|b| b.0) });
        }

        let dx = sq_dist(x.pixels(), x_new.pixels());
        let rel_change = (dx / x_new.norm_l2().powi(2).max(f64::MIN_POSITIVE)).sqrt();

        std::mem::swap(&mut x, &mut x_new);
        ax = ax_new;
        back = back_new;

        if it >= MIN_ITERS && rel_change < config.rel_tol && feasible {
            converged = true;
            break;
        }
    }

    let residual_of = |img: &Image<T>| vec_norm(&T::measure(op, img).iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
    let (estimate, residual) = if converged {
        let r = residual_of(&x);
        (x, r)
    } else if let Some((_, img, r)) = best {
        (img, r)
    } else {
        let r = residual_of(&x);
        (x, r)
    };
    let objective = reg.value(&estimate);
    let result = ReconstructionResult {
        estimate,
        iterations,
        residual,
        objective,
        eps: eps_n,
        feas_tol,
        converged,
        history,
    };
    Ok(result.rescaled(y_norm))
}

/// TV decoder over images of pixel type `T` (real images use `Re ∘ adjoint`).
pub fn solve_tv<T: Measurable>(op: &dyn MeasurementOp, y: &[Complex64], eps: f64, config: &SolverConfig) -> Result<ReconstructionResult<T>> {
    let (r, c) = op.input_shape();
    if r != c || r < 2 {
        return invalid(format!("TV decoding needs a square image of side >= 2, got {r}x{c}"));
    }
    primal_dual(&TvReg { n: r, mode: config.tv_mode }, op, y, eps, config)
}

/// Plain ℓ1 decoder on the operator's input array.
pub fn solve_l1_vector<T: Measurable>(op: &dyn MeasurementOp, y: &[Complex64], eps: f64, config: &SolverConfig) -> Result<ReconstructionResult<T>> {
    primal_dual(&L1Reg, op, y, eps, config)
}

/// ℓ1 decoder on Haar coefficients; the estimate is returned in the image
/// domain and the objective is `‖H(X̂)‖₁`.
pub fn solve_l1_haar<T: Measurable>(op: SharedOp, y: &[Complex64], eps: f64, config: &SolverConfig) -> Result<ReconstructionResult<T>> {
    let composed = compose_with_inverse_haar(op)?;
    let mut res = solve_l1_vector::<T>(&composed, y, eps, config)?;
    res.estimate = haar_inverse(&HaarCoeffs::new(res.estimate)?);
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{gaussian_op, DenseOp};

    #[test]
    fn power_method_on_diagonal() {
        let op = DenseOp::diagonal(&[1.0, 3.0, 2.0]);
        let est = operator_norm::<f64>(&op, 50, 0);
        assert!((est - 3.0).abs() < 1e-6, "{est}");
    }

    #[test]
    fn ball_projection() {
        let mut v = vec![Complex64::new(3.0, 4.0)];
        project_ball(&mut v, &[Complex64::default()], 1.0);
        assert!((v[0] - Complex64::new(0.6, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn zero_data_gives_zero() {
        let op = gaussian_op(5, 4, 4, 1).unwrap();
        let y = vec![Complex64::default(); 5];
        let r = solve_tv::<f64>(&op, &y, 0.0, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.estimate.norm_l2(), 0.0);
        let r = solve_l1_vector::<f64>(&op, &y, 0.0, &SolverConfig::default()).unwrap();
        assert_eq!(r.estimate.norm_l2(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let op = gaussian_op(5, 4, 4, 1).unwrap();
        let y = vec![Complex64::new(1.0, 0.0); 5];
        assert!(solve_tv::<f64>(&op, &y, -1.0, &SolverConfig::default()).is_err());
        assert!(solve_tv::<f64>(&op, &y[..3], 0.0, &SolverConfig::default()).is_err());
        let cfg = SolverConfig { rel_tol: 0.0, ..SolverConfig::default() };
        assert!(solve_tv::<f64>(&op, &y, 0.0, &cfg).is_err());
    }

    #[test]
    fn shrink_complex() {
        let v = shrink(Complex64::new(3.0, 4.0), 1.0);
        assert!((v - Complex64::new(2.4, 3.2)).norm() < 1e-15);
        assert_eq!(shrink(0.5, 1.0), 0.0);
    }
}
