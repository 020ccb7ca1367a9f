use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use tvrecover::harness::{
    estimate_rip_auto, operator_by_kind, phantom, run_experiment, run_property_suite, write_pgm, ExperimentConfig,
    SuiteParams, SuiteReport, SUITES,
};

/// Total-variation reconstruction experiments and property checks.
///
/// Outputs go under the directory named by `RECOVER_OUT`
/// (default `recover-out`).
#[derive(Parser, Debug)]
#[command(name = "recover", version, about)]
struct Cli {
    /// Root directory for all outputs
    #[arg(long, env = "RECOVER_OUT", default_value = "recover-out", global = true)]
    out_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a JSON config
    Run { config: PathBuf },
    /// Run a property suite (or `all`); exits 1 if any check fails
    Suite {
        name: String,
        /// Image side (or vector length for `cone_tube` and `rip`)
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Write the Shepp-Logan phantom as a 16-bit PGM
    Phantom {
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the restricted isometry constant of a named operator
    Rip {
        /// One of identity, gaussian, fourier_signed, fourier_plain
        #[arg(long)]
        kind: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        s: usize,
        /// Image side; the operator acts on n² pixels
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probes for the sampled estimator when exhaustive search is too large
        #[arg(long, default_value_t = 20_000)]
        trials: usize,
    },
}

fn print_suite(report: &SuiteReport) {
    println!("suite {} [{}]", report.suite, if report.passed { "PASS" } else { "FAIL" });
    for c in &report.checks {
        let mark = if c.passed { "ok  " } else { "FAIL" };
        print!("  {mark} {}: {:.6e} (bound {:.6e}, {}/{} violations)", c.name, c.measured, c.bound, c.violations, c.cases);
        match &c.note {
            Some(note) => println!(" [{note}]"),
            None => println!(),
        }
    }
}

fn suite(out: &Path, name: &str, params: SuiteParams) -> Result<bool> {
    let names: Vec<&str> = match name {
        "all" => SUITES.to_vec(),
        n if SUITES.contains(&n) => vec![n],
        _ => bail!("unknown suite `{name}`; expected all or one of {}", SUITES.join(", ")),
    };
    let dir = out.join("suites");
    fs::create_dir_all(&dir)?;
    let mut passed = true;
    for name in names {
        let report = run_property_suite(name, params)?;
        print_suite(&report);
        fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&report)?)?;
        passed &= report.passed;
    }
    Ok(passed)
}

fn run(out: &Path, config: &Path) -> Result<()> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", config.display()))?;
    let base = config.parent().unwrap_or(Path::new("."));
    let report = run_experiment(&cfg, base, out)?;
    println!("{} -> {}", report.name, report.output_dir.display());
    println!("  {}", report.guarantee);
    println!("  eps {:.6e}, ‖y‖ {:.6e}", report.eps, report.measurement_norm);
    for r in &report.rows {
        println!(
            "  {:<8} rel_l2 {:.4e}  grad {:.4e}  tv {:.4e}  iters {}{}",
            r.decoder,
            r.rel_l2_error,
            r.gradient_error,
            r.tv_error,
            r.iterations,
            if r.converged { "" } else { " (not converged)" }
        );
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config } => run(&cli.out_root, &config).map(|_| true),
        Command::Suite { name, n, seed, trials } => suite(&cli.out_root, &name, SuiteParams { n, seed, trials }),
        Command::Phantom { n, out } => {
            let side = write_pgm(&out, &phantom(n)?)?;
            println!("wrote {} ({}x{}, range [{}, {}])", out.display(), side.rows, side.cols, side.min, side.max);
            Ok(true)
        }
        Command::Rip { kind, m, s, n, seed, trials } => {
            let op = operator_by_kind(&kind, n, m, seed)?;
            let est = estimate_rip_auto(op.as_ref(), s, trials, seed)?;
            println!("{}", serde_json::to_string_pretty(&est)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
