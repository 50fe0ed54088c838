use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use eh_glue::config::{load_config, Resolver};
use eh_glue::report::{write_atomic, Report};
use eh_glue::suites::{self, Context};
use eh_glue::{RunError, EXIT_BUDGET, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "eh-glue", version, about = "Numerical checks for Eguchi-Hanson gluing on T⁴/ℤ₂")]
struct Cli {
    /// key = value file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report path (stdout when absent).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// CSV path for time-series tables.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Worker threads; reports do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Lattice cache directory, overriding EH_GLUE_CACHE_DIR.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Record wall-clock time in the report (makes it run-dependent).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cube partial sums of the obstruction constant and their extrapolation.
    Omega(suites::OmegaArgs),
    /// Build (or reuse) the cached background on the projection grid.
    Background(suites::BackgroundArgs),
    /// Flux integral over the sphere |x| = δ.
    Flux(suites::GlueArgs),
    /// Flux of the gauge term.
    Zterm(suites::GlueArgs),
    /// Volume projections of Ric onto ō₁ and ḡ.
    Project(suites::ProjectArgs),
    /// Distributional Laplacian of the x_i x_j / r⁶ kernels.
    DistLaplace(suites::DistArgs),
    /// Decay exponents in the outer region.
    GlueScan(suites::GlueScanArgs),
    /// Torus heat kernels Γ₊ and Γ₋.
    Heat(suites::HeatArgs),
    /// Modulation dynamics of the scale and the curvature predictions.
    Flow(suites::FlowArgs),
    /// Pointwise identity suites.
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
    /// Summarize existing reports.
    Report {
        inputs: Vec<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum VerifyTarget {
    Eh(suites::VerifyArgs),
    Glue(suites::VerifyArgs),
    All(suites::VerifyArgs),
}

fn run(cli: &Cli) -> Result<Report, RunError> {
    let file = match &cli.config {
        Some(p) => load_config(p)?,
        None => Default::default(),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(RunError::config("threads", "must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::config("threads", e.to_string()))?;
    }
    let ctx = Context {
        cache_dir: cli.cache_dir.clone().or_else(|| std::env::var_os("EH_GLUE_CACHE_DIR").map(PathBuf::from)),
        csv: cli.csv.clone(),
    };
    let mut r = Resolver::new(file);
    match &cli.command {
        Command::Omega(a) => suites::omega(&mut r, a),
        Command::Background(a) => suites::background(&ctx, &mut r, a),
        Command::Flux(a) => suites::flux(&mut r, a),
        Command::Zterm(a) => suites::zterm(&mut r, a),
        Command::Project(a) => suites::project(&ctx, &mut r, a),
        Command::DistLaplace(a) => suites::dist_laplace(&mut r, a),
        Command::GlueScan(a) => suites::glue_scan(&mut r, a),
        Command::Heat(a) => suites::heat(&mut r, a),
        Command::Flow(a) => suites::flow(&ctx, &mut r, a),
        Command::Verify { target } => match target {
            VerifyTarget::Eh(a) => suites::verify_eh(&mut r, a),
            VerifyTarget::Glue(a) => suites::verify_glue(&mut r, a),
            VerifyTarget::All(a) => suites::verify_all(&mut r, a),
        },
        Command::Report { inputs } => suites::summarize(inputs),
    }
}

/// Lets negative numbers reach the value parsers, so `--cutoff -3` is reported against `--cutoff`.
fn negative_numbers(cmd: clap::Command) -> clap::Command {
    cmd.allow_negative_numbers(true).mut_subcommands(negative_numbers)
}

fn main() -> ExitCode {
    let matches = negative_numbers(Cli::command()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let start = Instant::now();
    let mut report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("eh-glue: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    eprintln!("{}: {:.2} s", report.task, elapsed);
    if cli.timing {
        report.wall_clock = Some(elapsed);
    }
    let text = report.encode();
    match &cli.output {
        Some(p) => {
            if let Err(e) = write_atomic(p, text.as_bytes()) {
                eprintln!("eh-glue: {e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        }
        None => print!("{text}"),
    }
    if report.pass() {
        ExitCode::from(EXIT_OK as u8)
    } else {
        eprintln!("eh-glue: suite {} exceeded its budget in: {}", report.task, report.failing().join(", "));
        ExitCode::from(EXIT_BUDGET as u8)
    }
}
