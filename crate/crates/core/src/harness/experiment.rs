use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::images::{phantom, synthetic_gradient_sparse};
use super::io::{read_pgm, write_atomic, write_metrics_csv, write_pgm, MetricsRow};
use crate::error::{invalid, Result};
use crate::image::{discrete_gradient, tv_norm, Image, TvMode};
use crate::operators::{add_noise, NoiseModel, OperatorDescriptor, OperatorSpec, SharedOp};
use crate::solver::{solve_l1_haar, solve_tv, ReconstructionResult, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ImageSource {
    Phantom { n: usize },
    /// A PGM file; relative paths resolve against the config's directory.
    File { path: PathBuf },
    SyntheticGradientSparse { n: usize, s: usize, seed: u64 },
}

impl ImageSource {
    /// The image plus, for synthetic sources, its gradient support size.
    pub fn load(&self, base: &Path) -> Result<(Image, Option<usize>)> {
        match self {
            ImageSource::Phantom { n } => Ok((phantom(*n)?, None)),
            ImageSource::File { path } => Ok((read_pgm(&base.join(path))?, None)),
            ImageSource::SyntheticGradientSparse { n, s, seed } => {
                let (img, support) = synthetic_gradient_sparse(*n, *s, *seed)?;
                Ok((img, Some(support)))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    Tv,
    HaarL1,
}

impl Decoder {
    pub fn id(self) -> &'static str {
        match self {
            Decoder::Tv => "tv",
            Decoder::HaarL1 => "haar_l1",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSet {
    pub tv: SolverConfig,
    pub haar_l1: SolverConfig,
}

impl SolverSet {
    pub fn for_decoder(&self, d: Decoder) -> &SolverConfig {
        match d {
            Decoder::Tv => &self.tv,
            Decoder::HaarL1 => &self.haar_l1,
        }
    }
}

/// A complete, replayable experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub image: ImageSource,
    pub operator: OperatorSpec,
    #[serde(default = "NoiseModel::none")]
    pub noise: NoiseModel,
    pub decoders: Vec<Decoder>,
    #[serde(default)]
    pub solvers: SolverSet,
    /// Output directory relative to the output root; defaults to `name`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return invalid("experiment name must be a non-empty single path component");
        }
        if self.decoders.is_empty() {
            return invalid("at least one decoder is required");
        }
        let mut seen = self.decoders.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.decoders.len() {
            return invalid("decoders must not repeat");
        }
        self.solvers.tv.validate()?;
        self.solvers.haar_l1.validate()
    }
}

/// Which recovery guarantee the chosen measurement ensemble falls under.
pub fn guarantee_label(spec: &OperatorSpec) -> &'static str {
    match spec {
        OperatorSpec::Gaussian { .. } => "gaussian: RIP in every orthonormal basis; Haar-ℓ1 and TV guarantees apply",
        OperatorSpec::FourierSigned { .. } => {
            "fourier_signed: randomized signs make rows incoherent with Haar; TV guarantee applies"
        }
        OperatorSpec::FourierPlain { .. } => {
            "fourier_plain: uniform subsampling is coherent with Haar; no guarantee, empirical only"
        }
        OperatorSpec::CompositeTv { .. } => "composite_tv: gradient-probing blocks plus Haar-incoherent block; stable TV guarantee",
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub output_dir: PathBuf,
    pub eps: f64,
    pub measurement_norm: f64,
    pub gradient_support: Option<usize>,
    pub guarantee: String,
    pub rows: Vec<MetricsRow>,
}

/// Error metrics of `estimate` against `truth`.
pub fn metrics_row(decoder: &str, truth: &Image, res: &ReconstructionResult, wall_time_s: f64) -> Result<MetricsRow> {
    let diff = &res.estimate - truth;
    let truth_norm = truth.norm_l2();
    let rel = if truth_norm > 0.0 { diff.norm_l2() / truth_norm } else { diff.norm_l2() };
    let gradient_error = discrete_gradient(&diff)?.norm_l2();
    Ok(MetricsRow {
        decoder: decoder.to_string(),
        rel_l2_error: rel,
        gradient_error,
        tv_error: tv_norm(&diff, TvMode::Anisotropic),
        residual: res.residual,
        eps: res.eps,
        iterations: res.iterations,
        converged: res.converged,
        wall_time_s,
    })
}

fn decode(decoder: Decoder, op: &SharedOp, y: &[crate::Complex64], eps: f64, cfg: &SolverConfig) -> Result<ReconstructionResult> {
    match decoder {
        Decoder::Tv => solve_tv::<f64>(op.as_ref(), y, eps, cfg),
        Decoder::HaarL1 => solve_l1_haar::<f64>(op.clone(), y, eps, cfg),
    }
}

/// Runs every decoder of `config` and writes `truth.pgm`, one
/// `<decoder>.pgm` per decoder (with JSON sidecars), `metrics.csv`,
/// `timings.json`, `operator.json` and `report.json` under
/// `out_root/<output_dir>`. `base` resolves relative image paths.
pub fn run_experiment(config: &ExperimentConfig, base: &Path, out_root: &Path) -> Result<ExperimentReport> {
    config.validate()?;
    let dir = out_root.join(config.output_dir.clone().unwrap_or_else(|| PathBuf::from(&config.name)));
    let (truth, support) = config.image.load(base)?;
    let Some(n) = truth.side() else {
        return invalid(format!("experiments need square images, got {:?}", truth.shape()));
    };
    let op = config.operator.build(n)?;
    let clean = op.apply_real(&truth);
    let (y, eps) = add_noise(&clean, &config.noise)?;
    let descriptor: OperatorDescriptor = op.descriptor();

    let outcomes: Vec<Result<(ReconstructionResult, f64)>> = config
        .decoders
        .par_iter()
        .map(|&d| {
            let start = Instant::now();
            let res = decode(d, &op, &y, eps, config.solvers.for_decoder(d))?;
            Ok((res, start.elapsed().as_secs_f64()))
        })
        .collect();

    write_pgm(&dir.join("truth.pgm"), &truth)?;
    let mut rows = Vec::with_capacity(outcomes.len());
    for (&d, outcome) in config.decoders.iter().zip(outcomes) {
        let (res, secs) = outcome?;
        write_pgm(&dir.join(format!("{}.pgm", d.id())), &res.estimate)?;
        rows.push(metrics_row(d.id(), &truth, &res, secs)?);
    }
    write_metrics_csv(&dir.join("metrics.csv"), &rows)?;
    let timings: Vec<(&str, f64)> = rows.iter().map(|r| (r.decoder.as_str(), r.wall_time_s)).collect();
    write_atomic(&dir.join("timings.json"), serde_json::to_string_pretty(&timings)?.as_bytes())?;
    write_atomic(&dir.join("operator.json"), serde_json::to_string(&descriptor)?.as_bytes())?;

    let report = ExperimentReport {
        name: config.name.clone(),
        output_dir: dir.clone(),
        eps,
        measurement_norm: crate::operators::vec_norm(&clean),
        gradient_support: support,
        guarantee: guarantee_label(&config.operator).to_string(),
        rows,
    };
    write_atomic(&dir.join("report.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}
