//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tvrecover::harness::{phantom, run_property_suite, synthetic_gradient_sparse, SuiteParams, SuiteReport};
use tvrecover::haar::{edge_nonconstant_count, haar_forward, haar_inverse, wavelet_gradient_l1, wavelet_image, WaveletIndex};
use tvrecover::image::{discrete_gradient, inner_product, pad, tv_norm, Image, Placement, TvMode};
use tvrecover::operators::{add_noise, vec_norm, NoiseModel, OperatorSpec, SampleCount, SharedOp};
use tvrecover::solver::{solve_l1_haar, solve_tv, ReconstructionResult, SolverConfig};
use tvrecover::Complex64;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn normal_image(n: usize, rng: &mut ChaCha8Rng) -> Image {
    Image::from_fn(n, n, |_, _| StandardNormal.sample(rng))
}

fn suite_outcome(report: &SuiteReport, elapsed: Duration, limit: Option<Duration>) -> Outcome {
    let mut parts: Vec<String> = report
        .checks
        .iter()
        .map(|c| {
            let mut s = format!("{} = {:.4e} (bound {:.4e}, {}/{} violations)", c.name, c.measured, c.bound, c.violations, c.cases);
            if let Some(note) = &c.note {
                s.push_str(&format!(" [{note}]"));
            }
            s
        })
        .collect();
    parts.push(format!("{:.1}s", elapsed.as_secs_f64()));
    let in_time = limit.is_none_or(|l| elapsed < l);
    outcome(report.passed && in_time, parts.join("; "))
}

fn haar_unitarity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut norm_gap, mut round_trip) = (0.0f64, 0.0f64);
    for n in [4, 16, 64] {
        for _ in 0..100 {
            let x = normal_image(n, &mut rng);
            let c = haar_forward(&x).unwrap();
            let xn = x.norm_l2();
            norm_gap = norm_gap.max((c.norm_l2() - xn).abs() / xn);
            round_trip = round_trip.max((&haar_inverse(&c) - &x).norm_l2() / xn);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        norm_gap <= 1e-10 && round_trip <= 1e-10 && secs < 5.0,
        format!("max norm gap {norm_gap:.2e}, max round trip {round_trip:.2e}, {secs:.2}s"),
    )
}

fn haar_basis() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut gram_err, mut def_err) = (0.0f64, 0.0f64);
    for levels in 1..=4u32 {
        let n = 1usize << levels;
        let basis: Vec<(WaveletIndex, Image)> =
            WaveletIndex::all(levels).map(|i| (i, wavelet_image(i, levels).unwrap())).collect();
        for (a, (_, ha)) in basis.iter().enumerate() {
            for (b, (_, hb)) in basis.iter().enumerate() {
                let expect = if a == b { 1.0 } else { 0.0 };
                gram_err = gram_err.max((inner_product(ha, hb).unwrap() - expect).abs());
            }
        }
        for _ in 0..5 {
            let x = normal_image(n, &mut rng);
            let c = haar_forward(&x).unwrap();
            for (idx, h) in &basis {
                def_err = def_err.max((c.get(*idx) - inner_product(&x, h).unwrap()).abs());
            }
        }
    }
    outcome(gram_err <= 1e-12 && def_err <= 1e-12, format!("Gram error {gram_err:.2e}, transform vs inner products {def_err:.2e}"))
}

fn padding_identity() -> Outcome {
    let n = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cplx = |rows: usize| {
        Image::from_fn(rows, n, |_, _| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
    };
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let phi = cplx(n - 1);
        let x = cplx(n);
        let g = discrete_gradient(&x).unwrap();
        let top = pad(&phi, Placement::TopZeros).unwrap().realized;
        let bottom = pad(&phi, Placement::BottomZeros).unwrap().realized;
        let xt = x.transpose();
        let pairs = [
            (inner_product(&phi, &g.x_derivative()).unwrap(), &x),
            (inner_product(&phi, &g.y_derivative().transpose()).unwrap(), &xt),
        ];
        for (lhs, target) in pairs {
            let rhs = inner_product(&top, target).unwrap() - inner_product(&bottom, target).unwrap();
            worst = worst.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()));
        }
    }
    outcome(worst <= 1e-12, format!("max relative defect {worst:.2e} over 200 pairs, both identities"))
}

fn haar_gradient_counts() -> Outcome {
    let start = Instant::now();
    let mut worst_tv = 0.0f64;
    let mut counts = Vec::new();
    let mut ok = true;
    for levels in [3u32, 4, 5] {
        let n = 1usize << levels;
        for idx in WaveletIndex::all(levels) {
            let tv = wavelet_gradient_l1(idx, levels).unwrap();
            let direct = tv_norm(&wavelet_image(idx, levels).unwrap(), TvMode::Anisotropic);
            ok &= (tv - direct).abs() < 1e-12 && tv <= 8.0 + 1e-12;
            worst_tv = worst_tv.max(tv);
        }
        let mut max_count = 0;
        for j in 0..n {
            for k in 0..n {
                for nb in [(j + 1, k), (j, k + 1)] {
                    if nb.0 < n && nb.1 < n {
                        max_count = max_count.max(edge_nonconstant_count((j, k), nb, levels).unwrap());
                    }
                }
            }
        }
        ok &= max_count <= 6 * levels as usize;
        counts.push(format!("N={n}: {max_count} <= {}", 6 * levels));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ok && secs < 60.0,
        format!("max wavelet TV {worst_tv:.4} (bound 8); max non-constant wavelets per edge {}; {secs:.2}s", counts.join(", ")),
    )
}

fn run_suite(name: &str, limit: Option<Duration>) -> Outcome {
    let start = Instant::now();
    let report = run_property_suite(name, SuiteParams::default()).unwrap();
    suite_outcome(&report, start.elapsed(), limit)
}

const SIDE: usize = 32;
const SUPPORT_RECTS: usize = 10;

fn composite_spec(seed: u64) -> OperatorSpec {
    OperatorSpec::CompositeTv {
        m1: 150,
        seed_a: 3 * seed + 1,
        seed_a_prime: 3 * seed + 2,
        b: Box::new(OperatorSpec::Gaussian { samples: SampleCount::M(300), seed: 3 * seed + 3 }),
    }
}

/// A recovery run from the sparse-gradient setup.
struct Run {
    noise_target: f64,
    eps: f64,
    support: usize,
    truth_norm: f64,
    err_l2: f64,
    err_grad: f64,
    err_tv: f64,
    residual: f64,
    converged: bool,
    secs: f64,
}

fn recovery_run(seed: u64, noise_target: f64) -> Run {
    let (truth, support) = synthetic_gradient_sparse(SIDE, SUPPORT_RECTS, 1000 + seed).unwrap();
    let op: SharedOp = composite_spec(seed).build(SIDE).unwrap();
    let clean = op.apply_real(&truth);
    let sigma = noise_target / (op.output_len() as f64).sqrt();
    let model = if noise_target == 0.0 { NoiseModel::none() } else { NoiseModel::gaussian(sigma, 5000 + seed) };
    let (y, eps) = add_noise(&clean, &model).unwrap();
    let cfg = SolverConfig { max_iters: 20_000, ..Default::default() };
    let start = Instant::now();
    let res: ReconstructionResult = solve_tv(op.as_ref(), &y, eps, &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let diff = &res.estimate - &truth;
    Run {
        noise_target,
        eps,
        support,
        truth_norm: truth.norm_l2(),
        err_l2: diff.norm_l2(),
        err_grad: discrete_gradient(&diff).unwrap().norm_l2(),
        err_tv: tv_norm(&diff, TvMode::Anisotropic),
        residual: res.residual,
        converged: res.converged,
        secs,
    }
}

fn noiseless_recovery(runs: &[Run]) -> Outcome {
    let good = runs.iter().filter(|r| r.err_l2 <= 1e-3 * r.truth_norm).count();
    let worst = runs.iter().map(|r| r.err_l2 / r.truth_norm).fold(0.0, f64::max);
    let slowest = runs.iter().map(|r| r.secs).fold(0.0, f64::max);
    outcome(
        good >= 18 && slowest < 120.0,
        format!("{good}/20 seeds with relative error <= 1e-3 (worst {worst:.2e}); slowest seed {slowest:.1}s"),
    )
}

const NOISE_TARGETS: [f64; 3] = [1e-3, 1e-2, 1e-1];
const NOISE_SEEDS: u64 = 3;

fn robustness(noisy: &[Run], noiseless: &[Run]) -> Outcome {
    let mut ratios = Vec::new();
    for target in NOISE_TARGETS {
        let cell: Vec<&Run> = noisy.iter().filter(|r| r.noise_target == target).collect();
        let mean = cell.iter().map(|r| r.err_l2 / r.eps).sum::<f64>() / cell.len() as f64;
        ratios.push(mean);
    }
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = noiseless.iter().take(NOISE_SEEDS as usize).map(|r| r.err_l2).fold(0.0, f64::max);
    let smallest = noisy.iter().filter(|r| r.noise_target == NOISE_TARGETS[0]).map(|r| r.err_l2).fold(f64::INFINITY, f64::min);
    let truth = noiseless[0].truth_norm;
    let converged = noisy.iter().filter(|r| r.converged).count();
    outcome(
        spread < 3.0 && floor < smallest && floor <= 1e-3 * truth,
        format!(
            "error/ε by decade {:.3} {:.3} {:.3} (spread {spread:.2}x, limit 3x); ε=0 error {floor:.2e} < ε=1e-3 error {smallest:.2e}; {converged}/{} runs met the stopping rule",
            ratios[0], ratios[1], ratios[2], noisy.len()
        ),
    )
}

/// `(‖∇D‖₂/ε, ‖D‖_TV/(√s·ε))` with zero tail and `ε` taken as the larger of
/// the noise level and the achieved residual.
fn gradient_ratios(r: &Run) -> (f64, f64) {
    let eps = r.eps.max(r.residual);
    (r.err_grad / eps, r.err_tv / ((r.support as f64).sqrt() * eps))
}

fn gradient_bounds(runs: &[&Run]) -> Outcome {
    let pilot: Vec<Run> = NOISE_TARGETS.iter().map(|&t| recovery_run(900, t)).chain([recovery_run(901, 0.0)]).collect();
    let pilot_max = pilot.iter().map(gradient_ratios).fold(0.0f64, |m, (a, b)| m.max(a).max(b));
    let c = 2.0 * pilot_max;
    let (mut worst_grad, mut worst_tv) = (0.0f64, 0.0f64);
    for r in runs {
        let (g, t) = gradient_ratios(r);
        worst_grad = worst_grad.max(g);
        worst_tv = worst_tv.max(t);
    }
    outcome(
        c <= 50.0 && worst_grad <= c && worst_tv <= c,
        format!(
            "C frozen at {c:.3} (twice pilot max {pilot_max:.3}); over {} runs: max ‖∇D‖₂/ε {worst_grad:.3}, max ‖D‖_TV/(√s·ε) {worst_tv:.3}",
            runs.len()
        ),
    )
}

fn phantom_comparison() -> Outcome {
    let start = Instant::now();
    let n = 64;
    let truth = phantom(n).unwrap();
    let op = OperatorSpec::FourierSigned { samples: SampleCount::Fraction(0.2), seed: 7 }.build(n).unwrap();
    let clean = op.apply_real(&truth);
    let sigma = 0.02 * vec_norm(&clean) / (op.output_len() as f64).sqrt();
    let tv_cfg = SolverConfig { max_iters: 5000, ..Default::default() };
    let haar_cfg = SolverConfig { max_iters: 20_000, ..Default::default() };
    let rel = |res: ReconstructionResult| (&res.estimate - &truth).norm_l2() / truth.norm_l2();
    let mut errs = Vec::new();
    for model in [NoiseModel::none(), NoiseModel::gaussian(sigma, 8)] {
        let (y, eps) = add_noise(&clean, &model).unwrap();
        let (tv, haar) = rayon::join(
            || rel(solve_tv(op.as_ref(), &y, eps, &tv_cfg).unwrap()),
            || rel(solve_l1_haar(op.clone(), &y, eps, &haar_cfg).unwrap()),
        );
        errs.push((tv, haar));
    }
    let secs = start.elapsed().as_secs_f64();
    let [(tv0, h0), (tv1, h1)] = [errs[0], errs[1]];
    outcome(
        tv0 < h0 && tv1 < h1 && tv0 <= 0.05 && secs < 300.0,
        format!("m = {}; noiseless TV {tv0:.2e} vs Haar-ℓ1 {h0:.3}; noisy TV {tv1:.3} vs Haar-ℓ1 {h1:.3}; {secs:.1}s", op.output_len()),
    )
}

fn report(id: usize, title: &str, o: &Outcome) {
    println!("criterion {id:>2} [{}] {title}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |id, title, o: Outcome| {
        report(id, title, &o);
        results.push((id, title, o));
    };
    record(1, "Haar unitarity", haar_unitarity());
    record(2, "Haar basis", haar_basis());
    record(3, "padded derivative identity", padding_identity());
    record(4, "wavelet gradient and edge counts", haar_gradient_counts());
    record(5, "Sobolev inequalities", run_suite("sobolev", None));
    record(6, "Haar coefficient decay", run_suite("decay", None));
    record(7, "cone and tube", run_suite("cone_tube", Some(Duration::from_secs(120))));
    record(8, "RIP estimator", run_suite("rip", None));

    let noiseless: Vec<Run> = (0..20).map(|seed| recovery_run(seed, 0.0)).collect();
    record(9, "noiseless sparse-gradient recovery", noiseless_recovery(&noiseless));
    let noisy: Vec<Run> =
        (0..NOISE_SEEDS).flat_map(|seed| NOISE_TARGETS.map(|t| recovery_run(seed, t))).collect();
    record(10, "robustness across noise decades", robustness(&noisy, &noiseless));
    record(11, "phantom TV vs Haar-ℓ1", phantom_comparison());
    let all: Vec<&Run> = noiseless.iter().chain(&noisy).collect();
    record(12, "gradient recovery bounds", gradient_bounds(&all));

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
