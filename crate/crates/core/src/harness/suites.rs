use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::images::{phantom, synthetic_gradient_sparse};
use crate::error::{Error, Result};
use crate::haar::{decay_ratio, edge_nonconstant_count, haar_decay_constant, scale_count, wavelet_gradient_l1, WaveletIndex};
use crate::image::{inner_product, pad, tv_norm, Image, Placement, TvMode};
use crate::operators::{compose_with_inverse_haar, gaussian_op, materialize, DenseOp, MeasurementOp};
use crate::rip::{
    check_cone_tube, check_strong_sobolev, estimate_rip_exhaustive, estimate_rip_sampled, CheckStatus, ConeTubeInstance,
    RipEstimate, TUBE_IMAGE,
};

pub const SUITES: [&str; 7] = ["sobolev", "decay", "haar_lemmas", "padding", "cone_tube", "strong_sobolev", "rip"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteParams {
    /// Image side; each suite has its own default.
    pub n: Option<usize>,
    pub seed: u64,
    /// Number of random instances; each suite has its own default.
    pub trials: Option<usize>,
}

/// One asserted invariant: the worst value seen and the bound it must obey.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
    pub cases: usize,
    pub violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// Passes iff every value is `<= bound`; `measured` is the maximum.
    fn max_below(name: &str, values: impl IntoIterator<Item = f64>, bound: f64) -> Self {
        let (mut worst, mut cases, mut violations) = (f64::NEG_INFINITY, 0, 0);
        for v in values {
            cases += 1;
            worst = worst.max(v);
            if v.is_nan() || v > bound {
                violations += 1;
            }
        }
        Self { name: name.into(), passed: violations == 0 && cases > 0, measured: worst, bound, cases, violations, note: None }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub params: SuiteParams,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn run_property_suite(suite: &str, params: SuiteParams) -> Result<SuiteReport> {
    let checks = match suite {
        "sobolev" => sobolev(params)?,
        "decay" => decay(params)?,
        "haar_lemmas" => haar_lemmas(params)?,
        "padding" => padding(params)?,
        "cone_tube" => cone_tube(params)?,
        "strong_sobolev" => strong_sobolev(params)?,
        "rip" => rip(params)?,
        other => return Err(Error::UnknownSuite(other.to_string())),
    };
    Ok(SuiteReport { suite: suite.to_string(), params, passed: checks.iter().all(|c| c.passed), checks })
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// A random image from a rotating family: i.i.d. noise, sparse spikes,
/// rectangles, or a smooth ramp with noise.
pub fn random_test_image(n: usize, rng: &mut ChaCha8Rng, family: usize) -> Image {
    match family % 4 {
        0 => Image::from_fn(n, n, |_, _| gaussian(rng)),
        1 => {
            let mut img = Image::zeros(n, n);
            for _ in 0..rng.random_range(1..=4) {
                let (j, k) = (rng.random_range(0..n), rng.random_range(0..n));
                img.set(j, k, gaussian(rng));
            }
            img
        }
        2 => synthetic_gradient_sparse(n, rng.random_range(1..=n), rng.random()).expect("s <= n").0,
        _ => {
            let (a, b) = (gaussian(rng), gaussian(rng));
            let noise = 0.1 * rng.random::<f64>();
            Image::from_fn(n, n, |j, k| a * j as f64 / n as f64 + b * (k as f64 / n as f64).powi(2) + noise * gaussian(rng))
        }
    }
}

fn sobolev(p: SuiteParams) -> Result<Vec<Check>> {
    let n = p.n.unwrap_or(32);
    let trials = p.trials.unwrap_or(1000);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut border = Vec::with_capacity(trials);
    let mut centered = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut img = random_test_image(n, &mut rng, t);
        for i in 0..n {
            for (j, k) in [(0, i), (n - 1, i), (i, 0), (i, n - 1)] {
                img.set(j, k, 0.0);
            }
        }
        let tv = tv_norm(&img, TvMode::Anisotropic);
        border.push(if tv > 0.0 { img.norm_l2() / tv } else { 0.0 });

        let img = random_test_image(n, &mut rng, t + 1);
        let mean = img.mean();
        let img = img.map(|v| v - mean);
        let tv = tv_norm(&img, TvMode::Anisotropic);
        centered.push(if tv > 0.0 { img.norm_l2() / tv } else { 0.0 });
    }
    Ok(vec![
        Check::max_below("zero_border: ‖x‖₂/‖x‖_TV", border, 0.5),
        Check::max_below("mean_zero: ‖x‖₂/‖x‖_TV", centered, 1.0),
    ])
}

fn decay(p: SuiteParams) -> Result<Vec<Check>> {
    let n = p.n.unwrap_or(64);
    let trials = p.trials.unwrap_or(100);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut ratios = Vec::with_capacity(trials + 1);
    for t in 0..trials {
        let img = random_test_image(n, &mut rng, t);
        match decay_ratio(&img) {
            Ok(r) => ratios.push(r),
            Err(Error::UndefinedRatio(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if n >= 16 {
        ratios.push(decay_ratio(&phantom(n)?)?);
    }
    let c1 = haar_decay_constant();
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(vec![Check::max_below("max_k k·|c_(k)| / ‖x‖_TV", ratios, c1).with_note(format!("empirical max {max:.4}"))])
}

fn haar_lemmas(p: SuiteParams) -> Result<Vec<Check>> {
    let side = p.n.unwrap_or(32);
    let levels = scale_count(side)?;
    let grads: Result<Vec<f64>> = WaveletIndex::all(levels).map(|idx| wavelet_gradient_l1(idx, levels)).collect();
    let mut counts = Vec::new();
    for j in 0..side {
        for k in 0..side {
            if j + 1 < side {
                counts.push(edge_nonconstant_count((j, k), (j + 1, k), levels)? as f64);
            }
            if k + 1 < side {
                counts.push(edge_nonconstant_count((j, k), (j, k + 1), levels)? as f64);
            }
        }
    }
    Ok(vec![
        Check::max_below("wavelet ‖∇h‖₁", grads?, 8.0),
        Check::max_below("non-constant wavelets per edge", counts, 6.0 * levels as f64),
    ])
}

/// Relative defects of the two padded-matrix derivative identities.
pub fn padding_defects(phi: &Image<Complex64>, x: &Image<Complex64>) -> Result<(f64, f64)> {
    let top = pad(phi, Placement::TopZeros)?.realized;
    let bottom = pad(phi, Placement::BottomZeros)?.realized;
    let rel = |lhs: Complex64, a: Complex64, b: Complex64| {
        let scale = lhs.norm().max(a.norm()).max(b.norm()).max(f64::MIN_POSITIVE);
        (lhs - (a - b)).norm() / scale
    };
    let grad = crate::image::discrete_gradient(x)?;
    let xt = x.transpose();
    let first = rel(inner_product(phi, &grad.x_derivative())?, inner_product(&top, x)?, inner_product(&bottom, x)?);
    let second = rel(
        inner_product(phi, &grad.y_derivative().transpose())?,
        inner_product(&top, &xt)?,
        inner_product(&bottom, &xt)?,
    );
    Ok((first, second))
}

fn padding(p: SuiteParams) -> Result<Vec<Check>> {
    let n = p.n.unwrap_or(16);
    let trials = p.trials.unwrap_or(200);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut cplx = |r: usize, c: usize| Image::from_fn(r, c, |_, _| Complex64::new(gaussian(&mut rng), gaussian(&mut rng)));
    let mut first = Vec::with_capacity(trials);
    let mut second = Vec::with_capacity(trials);
    for _ in 0..trials {
        let phi = cplx(n - 1, n);
        let x = cplx(n, n);
        let (a, b) = padding_defects(&phi, &x)?;
        first.push(a);
        second.push(b);
    }
    Ok(vec![
        Check::max_below("⟨Φ, X_x⟩ = ⟨Φ⁰, X⟩ − ⟨Φ₀, X⟩", first, 1e-12),
        Check::max_below("⟨Φ, X_yᵀ⟩ = ⟨Φ⁰, Xᵀ⟩ − ⟨Φ₀, Xᵀ⟩", second, 1e-12),
    ])
}

/// Orthonormal basis of the null space of a real operator, from the
/// eigenvectors of `AᵀA` with negligible eigenvalues.
pub fn null_space_basis(op: &dyn MeasurementOp) -> Result<Vec<Vec<f64>>> {
    let dense = materialize(op)?;
    let (m, d) = (dense.rows(), dense.input_len());
    let a = DMatrix::from_fn(m, d, |i, j| dense.entry(i, j).re);
    let eig = SymmetricEigen::new(a.transpose() * &a);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    Ok((0..d)
        .filter(|&i| eig.eigenvalues[i] <= 1e-10 * top)
        .map(|i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect())
}

/// Random candidate errors for the cone/tube check with `σ`, `ε` set to the
/// tightest values satisfying the premises. Families rotate between pure
/// null-space vectors, sparse vectors pushed toward the cone boundary along
/// the null space, exactly `k`-sparse vectors and dense Gaussian vectors.
pub fn cone_tube_instances(op: &DenseOp, k: usize, gamma: f64, count: usize, seed: u64) -> Result<Vec<ConeTubeInstance>> {
    let d = op.input_len();
    let shape = op.input_shape();
    let null = null_space_basis(op)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for t in 0..count {
        let mut v = vec![0.0; d];
        let null_vec = |rng: &mut ChaCha8Rng| {
            let mut w = vec![0.0; d];
            for b in &null {
                let c = gaussian(rng);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi += c * bi;
                }
            }
            w
        };
        let sparse = |rng: &mut ChaCha8Rng, v: &mut [f64]| {
            for j in rand::seq::index::sample(rng, d, k.min(d)) {
                v[j] = gaussian(rng);
            }
        };
        match t % 4 {
            0 if !null.is_empty() => v = null_vec(&mut rng),
            1 if !null.is_empty() => {
                sparse(&mut rng, &mut v);
                let w = null_vec(&mut rng);
                let scale = v.iter().map(|a| a.abs()).sum::<f64>() / w.iter().map(|a| a.abs()).sum::<f64>().max(1e-300);
                let u = rng.random_range(0.0..1.5) * scale;
                for (vi, wi) in v.iter_mut().zip(&w) {
                    *vi += u * wi;
                }
            }
            2 => sparse(&mut rng, &mut v),
            _ => v.iter_mut().for_each(|x| *x = gaussian(&mut rng)),
        }
        let img = Image::from_fn(shape.0, shape.1, |r, c| Complex64::new(v[r * shape.1 + c], 0.0));
        out.push(ConeTubeInstance::tightest(img, op, k, gamma, TUBE_IMAGE));
    }
    Ok(out)
}

/// Exact RIP when the support count fits the budget, sampled lower bound otherwise.
pub fn estimate_rip_auto(op: &dyn MeasurementOp, s: usize, trials: usize, seed: u64) -> Result<RipEstimate> {
    match estimate_rip_exhaustive(op, s) {
        Err(Error::BudgetExceeded { .. }) => estimate_rip_sampled(op, s, trials, seed),
        other => other,
    }
}

fn cone_tube(p: SuiteParams) -> Result<Vec<Check>> {
    let d = p.n.unwrap_or(64);
    let trials = p.trials.unwrap_or(1000);
    let (m, k, gamma) = ((3 * d) / 4, 2, 1.0);
    let op = gaussian_op(m, d, 1, p.seed)?;
    let order = (5.0 * k as f64 * gamma * gamma).ceil() as usize;
    let rip = estimate_rip_auto(&op, order.min(d), 20_000, p.seed)?;
    let instances = cone_tube_instances(&op, k, gamma, trials, p.seed.wrapping_add(1))?;
    let reports: Vec<_> = instances.iter().map(|inst| check_cone_tube(inst, &op, None)).collect();
    let premise_violations = reports.iter().filter(|r| r.status == CheckStatus::PremiseViolation).count();
    let l2 = reports.iter().map(|r| r.l2_lhs / r.l2_rhs.max(f64::MIN_POSITIVE));
    let l1 = reports.iter().map(|r| r.l1_lhs / r.l1_rhs.max(f64::MIN_POSITIVE));
    let method = match rip.method {
        crate::rip::RipMethod::Exhaustive => "exhaustive".to_string(),
        crate::rip::RipMethod::Sampled { trials, .. } => format!("sampled lower bound, {trials} probes"),
    };
    Ok(vec![
        Check::max_below(&format!("RIP δ_{} of the {m}×{d} Gaussian", rip.order_s), [rip.delta_lower], 1.0 / 3.0)
            .with_note(method),
        Check::max_below("instance premises (violations)", [premise_violations as f64], 0.0),
        Check::max_below("‖D‖₂ / (8r + 5σ/(γ√k))", l2, 1.0),
        Check::max_below("‖D‖₁ / (2γ√k(5r + 3σ/(γ√k)) + σ)", l1, 1.0),
    ])
}

/// Pushes `d` toward the null space of a real operator by Landweber steps.
pub fn toward_null_space(op: &dyn MeasurementOp, d: &Image, steps: usize) -> Image {
    let norm_sq = crate::solver::operator_norm::<f64>(op, 30, 0).powi(2) * 1.05;
    let mut x = d.clone();
    for _ in 0..steps {
        let back = op.adjoint_real(&op.apply_real(&x));
        x = &x - &back.scaled(1.0 / norm_sq);
    }
    x
}

fn strong_sobolev(p: SuiteParams) -> Result<Vec<Check>> {
    let n = p.n.unwrap_or(32);
    let trials = p.trials.unwrap_or(50);
    let s = 8;
    let m = (0.3 * (n * n) as f64) as usize;
    let b = std::sync::Arc::new(gaussian_op(m, n, n, p.seed)?);
    let composed = compose_with_inverse_haar(b.clone())?;
    let rip = estimate_rip_sampled(&composed, 2 * s, 2000, p.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed.wrapping_add(7));
    let mut ratios = Vec::with_capacity(trials);
    let mut constant = 0.0;
    for t in 0..trials {
        let d = toward_null_space(b.as_ref(), &random_test_image(n, &mut rng, t), 20);
        let r = check_strong_sobolev(&d, b.as_ref(), s, rip.delta_lower)?;
        constant = r.constant;
        ratios.push(r.ratio);
    }
    Ok(vec![
        Check::max_below(&format!("RIP δ_{} of B∘H⁻¹ (sampled)", 2 * s), [rip.delta_lower], 1.0 - 1e-9),
        Check::max_below("‖D‖₂ / ((‖D‖_TV/√s)·ln(N²/s) + ε)", ratios, constant),
    ])
}

fn rip(p: SuiteParams) -> Result<Vec<Check>> {
    let d = p.n.unwrap_or(16);
    let ident = DenseOp::identity(d);
    let mut ident_deltas = Vec::new();
    for s in 1..=3.min(d) {
        ident_deltas.push(estimate_rip_exhaustive(&ident, s)?.delta_lower);
        ident_deltas.push(estimate_rip_sampled(&ident, s, 200, p.seed)?.delta_lower);
    }
    let diag = estimate_rip_exhaustive(&DenseOp::diagonal(&[1.0, 1.0, 1.0, 2.0]), 1)?.delta_lower;
    let trials = p.trials.unwrap_or(20);
    let mut gaps = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        let op = gaussian_op(12, d, 1, p.seed.wrapping_add(t))?;
        let s = 2 + (t as usize % 2);
        let exact = estimate_rip_exhaustive(&op, s)?.delta_lower;
        let sampled = estimate_rip_sampled(&op, s, 500, t)?.delta_lower;
        gaps.push(sampled - exact);
    }
    Ok(vec![
        Check::max_below("identity δ_s", ident_deltas, 0.0),
        Check::max_below("|δ₁(diag(1,1,1,2)) − 3|", [(diag - 3.0).abs()], 0.0),
        Check::max_below("sampled δ − exhaustive δ", gaps, 1e-12),
    ])
}
