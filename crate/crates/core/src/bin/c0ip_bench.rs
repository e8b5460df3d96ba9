//! Benchmark driver: reproduces the three solver tables and the
//! manufactured-solution convergence study, writing csv, markdown or json.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use c0ip_bddc::bench::{
    mms_convergence, run_table, ExperimentConfig, RhsMode, DEFAULT_SUBDOMAINS, DEFAULT_SWEEP,
};
use c0ip_bddc::error::{Error, Result};
use c0ip_bddc::report::{emit_mms, emit_report, Format};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RhsArg {
    /// All-ones coefficient vector.
    Unit,
    /// Load vector of the manufactured source.
    Mms,
    /// Seeded uniform random coefficients.
    Random,
}

impl From<RhsArg> for RhsMode {
    fn from(a: RhsArg) -> RhsMode {
        match a {
            RhsArg::Unit => RhsMode::Unit,
            RhsArg::Mms => RhsMode::Manufactured,
            RhsArg::Random => RhsMode::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Md,
    Json,
}

impl From<FormatArg> for Format {
    fn from(a: FormatArg) -> Format {
        match a {
            FormatArg::Csv => Format::Csv,
            FormatArg::Md => Format::Md,
            FormatArg::Json => Format::Json,
        }
    }
}

/// Biharmonic interior penalty benchmarks with a BDDC-preconditioned solver.
///
/// Runs a sweep over mesh resolutions at a fixed subdomain grid and reports
/// one row per resolution. Identical configurations produce byte-identical
/// output unless --timings is given.
#[derive(Parser, Debug)]
#[command(name = "c0ip-bench", version)]
struct Cli {
    /// Table to reproduce: 1 = interface preconditioner spectrum,
    /// 2 = full preconditioner spectrum, 3 = iteration counts.
    #[arg(long, required_unless_present = "mms", conflicts_with = "mms")]
    table: Option<u8>,

    /// Run the manufactured-solution convergence study instead of a table.
    #[arg(long)]
    mms: bool,

    /// Mesh resolutions in elements per side (comma separated or repeated).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    n: Option<Vec<usize>>,

    /// Subdomains per side.
    #[arg(long, default_value_t = DEFAULT_SUBDOMAINS)]
    m: usize,

    /// Penalty parameter of the bilinear form.
    #[arg(long, default_value_t = 5.0)]
    eta: f64,

    /// Relative residual tolerance of the conjugate gradient runs.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,

    /// Iteration cap of the conjugate gradient runs.
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,

    /// Right-hand side used by table 3.
    #[arg(long, value_enum, default_value_t = RhsArg::Unit)]
    rhs: RhsArg,

    /// Seed of the random right-hand side.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Record wall-clock seconds per row (makes output run-dependent).
    #[arg(long)]
    timings: bool,
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = ExperimentConfig {
        n_list: cli.n.clone().unwrap_or_else(|| DEFAULT_SWEEP.to_vec()),
        m: cli.m,
        eta: cli.eta,
        tol: cli.tol,
        max_iter: cli.max_iter,
        rhs: cli.rhs.into(),
        seed: cli.seed,
        timings: cli.timings,
    };
    let out = cli.out.as_deref();
    if cli.mms {
        emit_mms(&mms_convergence(&cfg)?, cli.format.into(), out)
    } else {
        let table = cli.table.expect("clap requires --table without --mms");
        emit_report(&run_table(table, &cfg)?, cli.format.into(), out)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            match e {
                Error::NoRows
                | Error::InvalidParameter(_)
                | Error::Misaligned { .. }
                | Error::TooCoarse { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
