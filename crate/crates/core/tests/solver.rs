use serde::Deserialize;
use tvrecover::harness::synthetic_gradient_sparse;
use tvrecover::image::{tv_norm, Image, TvMode};
use tvrecover::operators::{add_noise, fourier_signed_op, gaussian_op, vec_norm, DenseOp, MeasurementOp, NoiseModel};
use tvrecover::solver::{solve_l1_vector, solve_tv, SolverConfig};
use tvrecover::Complex64;

#[derive(Deserialize)]
struct OracleCase {
    m: usize,
    n: usize,
    matrix: Vec<f64>,
    y: Vec<f64>,
    eps: f64,
    tv_mode: TvMode,
    optimum: f64,
}

#[derive(Deserialize)]
struct OracleFile {
    cases: Vec<OracleCase>,
}

fn real_vec(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&a| Complex64::new(a, 0.0)).collect()
}

#[test]
fn matches_interior_point_optimum() {
    let file: OracleFile = serde_json::from_str(include_str!("fixtures/tv_oracle_n4.json")).unwrap();
    assert_eq!(file.cases.len(), 20);
    for (i, case) in file.cases.iter().enumerate() {
        let op = DenseOp::real(case.m, (case.n, case.n), case.matrix.clone()).unwrap();
        let cfg = SolverConfig { tv_mode: case.tv_mode, max_iters: 50_000, rel_tol: 1e-9, ..Default::default() };
        let res = solve_tv::<f64>(&op, &real_vec(&case.y), case.eps, &cfg).unwrap();
        let rel = (res.objective - case.optimum).abs() / case.optimum;
        assert!(rel <= 1e-3, "case {i}: objective {} vs optimum {} ({rel:e})", res.objective, case.optimum);
        assert!(res.residual <= res.feas_tol, "case {i}: residual {} > {}", res.residual, res.feas_tol);
        let recomputed = vec_norm(
            &op.apply_real(&res.estimate).iter().zip(&case.y).map(|(a, b)| a - b).collect::<Vec<_>>(),
        );
        assert!((recomputed - res.residual).abs() < 1e-9);
        assert!((tv_norm(&res.estimate, case.tv_mode) - res.objective).abs() < 1e-9);
    }
}

#[test]
fn recovers_constant_image_from_its_mean() {
    let n = 8;
    let op = DenseOp::real(1, (n, n), vec![1.0 / (n * n) as f64; n * n]).unwrap();
    let res = solve_tv::<f64>(&op, &[Complex64::new(0.7, 0.0)], 0.0, &SolverConfig::default()).unwrap();
    assert!(res.converged);
    assert!((&res.estimate - &Image::constant(n, n, 0.7)).norm_inf() < 1e-4);
    assert!(res.objective < 1e-3);
}

#[test]
fn inconsistent_data_does_not_converge() {
    let n = 4;
    let mut rows = vec![0.0; 2 * n * n];
    rows[0] = 1.0;
    rows[n * n] = 1.0;
    let op = DenseOp::real(2, (n, n), rows).unwrap();
    let y = real_vec(&[1.0, 2.0]);
    let cfg = SolverConfig { max_iters: 500, ..Default::default() };
    let res = solve_tv::<f64>(&op, &y, 0.0, &cfg).unwrap();
    assert!(!res.converged);
    assert_eq!(res.iterations, 500);
    assert!(res.residual > 0.5);
}

#[test]
fn best_feasible_envelope_is_monotone() {
    let n = 16;
    let (x, _) = synthetic_gradient_sparse(n, 3, 4).unwrap();
    let op = gaussian_op(120, n, n, 5).unwrap();
    let (y, eps) = add_noise(&op.apply_real(&x), &NoiseModel::gaussian(0.01, 6)).unwrap();
    let cfg = SolverConfig { full_history: true, ..Default::default() };
    let res = solve_tv::<f64>(&op, &y, eps, &cfg).unwrap();
    assert_eq!(res.history.len(), res.iterations);
    let envelope: Vec<f64> = res.history.iter().filter_map(|h| h.best_feasible).collect();
    assert!(!envelope.is_empty());
    assert!(envelope.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn scaling_the_data_scales_the_estimate() {
    let n = 16;
    let (x, _) = synthetic_gradient_sparse(n, 4, 7).unwrap();
    let op = fourier_signed_op(100, n, 8).unwrap();
    let y = op.apply_real(&x);
    let cfg = SolverConfig { max_iters: 300, ..Default::default() };
    let base = solve_tv::<f64>(&op, &y, 0.05, &cfg).unwrap();
    for k in [1e-3, 0.5, 7.0, 1e4] {
        let ky: Vec<Complex64> = y.iter().map(|v| v * k).collect();
        let scaled = solve_tv::<f64>(&op, &ky, 0.05 * k, &cfg).unwrap();
        assert_eq!(scaled.iterations, base.iterations);
        let gap = (&scaled.estimate - &base.estimate.scaled(k)).norm_l2();
        assert!(gap <= 1e-9 * k * base.estimate.norm_l2(), "k = {k}: gap {gap}");
    }
}

#[test]
fn exact_recovery_of_gradient_sparse_image() {
    let n = 16;
    let (x, _) = synthetic_gradient_sparse(n, 3, 11).unwrap();
    let op = gaussian_op(140, n, n, 12).unwrap();
    let res = solve_tv::<f64>(&op, &op.apply_real(&x), 0.0, &SolverConfig { max_iters: 5000, ..Default::default() }).unwrap();
    assert!(res.converged);
    assert!((&res.estimate - &x).norm_l2() <= 1e-3 * x.norm_l2());
}

#[test]
fn complex_images_are_recovered() {
    let n = 16;
    let (re, _) = synthetic_gradient_sparse(n, 2, 13).unwrap();
    let (im, _) = synthetic_gradient_sparse(n, 2, 14).unwrap();
    let x = Image::from_fn(n, n, |j, k| Complex64::new(re.get(j, k), im.get(j, k)));
    let op = fourier_signed_op(150, n, 15).unwrap();
    let cfg = SolverConfig { max_iters: 5000, tv_mode: TvMode::Isotropic, ..Default::default() };
    let res = solve_tv::<Complex64>(&op, &op.apply(&x), 0.0, &cfg).unwrap();
    assert!((&res.estimate - &x).norm_l2() <= 1e-3 * x.norm_l2());
}

#[test]
fn rejects_mismatched_measurements() {
    let op = gaussian_op(10, 4, 4, 0).unwrap();
    assert!(solve_tv::<f64>(&op, &real_vec(&[1.0; 9]), 0.0, &SolverConfig::default()).is_err());
    assert!(solve_tv::<f64>(&op, &real_vec(&[1.0; 10]), -1.0, &SolverConfig::default()).is_err());
    let bad = SolverConfig { rel_tol: 0.0, ..Default::default() };
    assert!(solve_tv::<f64>(&op, &real_vec(&[1.0; 10]), 0.0, &bad).is_err());
}

/// Fits the smallest `C` with `‖x̂ − x‖₂ ≤ C·ε` for 5-sparse vectors of
/// length 256 under Gaussian noise.
#[test]
fn sparse_vector_error_scales_with_noise() {
    let (d, s, m) = (256, 5, 100);
    let mut worst: f64 = 0.0;
    for seed in 0..3u64 {
        let op = gaussian_op(m, d, 1, seed).unwrap();
        let mut x = Image::zeros(d, 1);
        for i in 0..s {
            x.set((seed as usize * 37 + i * 51) % d, 0, if i % 2 == 0 { 1.0 } else { -1.5 });
        }
        for sigma in [1e-3, 1e-2] {
            let (y, eps) = add_noise(&op.apply_real(&x), &NoiseModel::gaussian(sigma, seed + 100)).unwrap();
            let cfg = SolverConfig { max_iters: 20_000, ..Default::default() };
            let res = solve_l1_vector::<f64>(&op, &y, eps, &cfg).unwrap();
            worst = worst.max((&res.estimate - &x).norm_l2() / eps);
        }
    }
    assert!(worst <= 20.0, "fitted constant {worst}");
}
