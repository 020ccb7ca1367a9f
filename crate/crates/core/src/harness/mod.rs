//! Test images, PGM and CSV I/O, experiment runner and property suites.

mod experiment;
mod images;
mod io;
mod suites;

use std::sync::Arc;

pub use experiment::{
    guarantee_label, metrics_row, run_experiment, Decoder, ExperimentConfig, ExperimentReport, ImageSource, SolverSet,
};
pub use images::{phantom, synthetic_gradient_sparse};
pub use io::{
    decode_pgm, encode_metrics_csv, encode_pgm, read_metrics_csv, read_pgm, sidecar_path, write_metrics_csv, write_pgm,
    MetricsRow, PgmSidecar, METRICS_COLUMNS, METRICS_SCHEMA,
};
pub use suites::{
    cone_tube_instances, estimate_rip_auto, null_space_basis, padding_defects, random_test_image, run_property_suite,
    toward_null_space, Check, SuiteParams, SuiteReport, SUITES,
};

use crate::error::{invalid, Result};
use crate::operators::{fourier_plain_op, fourier_signed_op, gaussian_op, DenseOp, SharedOp};

/// Operator families selectable by name from the command line.
pub const OPERATOR_KINDS: [&str; 4] = ["identity", "gaussian", "fourier_signed", "fourier_plain"];

/// Builds a named operator on `n × n` images (`identity` acts on `n²`
/// columns and ignores `m`).
pub fn operator_by_kind(kind: &str, n: usize, m: usize, seed: u64) -> Result<SharedOp> {
    Ok(match kind {
        "identity" => Arc::new(DenseOp::identity(n * n)),
        "gaussian" => Arc::new(gaussian_op(m, n, n, seed)?),
        "fourier_signed" => Arc::new(fourier_signed_op(m, n, seed)?),
        "fourier_plain" => Arc::new(fourier_plain_op(m, n, seed)?),
        other => return invalid(format!("unknown operator kind `{other}`; expected one of {OPERATOR_KINDS:?}")),
    })
}
