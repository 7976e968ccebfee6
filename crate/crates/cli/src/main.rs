//! `sponge-lab`: build sponge specs, run verification suites and emit
//! JSON or CSV reports.
//!
//! Exit codes: 0 when no record failed, 1 when a check failed, 2 for usage,
//! parse and input errors, 3 when the report cannot be written.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use spongelab::report::Report;
use spongelab::rng::DEFAULT_SEED;
use spongelab_cli::output::{self, Format};

#[derive(Parser, Debug)]
#[command(name = "sponge-lab", version, about = "Generalized Sierpinski sponge verification toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Args, Debug)]
pub struct Global {
    /// Sponge spec JSON file: {"d": 2, "n": [3, 3], "K": 2}.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Dimension, when no spec file is given.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Comma-separated sequence n_1,n_2,... when no spec file is given.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    /// Verification depth (defaults to the spec truncation depth).
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads.
    #[arg(long, global = true, env = "SPONGELAB_THREADS")]
    pub threads: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub max_tiles: usize,
    #[arg(long, global = true, default_value_t = 100_000)]
    pub max_vertices: usize,
    /// Record wall time in the report (makes it non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Subcommand, Debug)]
pub enum Verb {
    /// Live tile counts, scales and removed boxes per level.
    Build,
    /// Exact volumes, slices, separation and density checks.
    Measure(commands::MeasureArgs),
    /// Quasiconvexity, penalized paths and the exponent upgrade.
    Connect(commands::ConnectArgs),
    /// Projection and weak-type maximal inequalities.
    Isoperim(commands::IsoperimArgs),
    /// Cigar-condition curves and bounded turning.
    Uniform(commands::UniformArgs),
    /// Heisenberg group identities, volume and net sparsity.
    Heis(commands::HeisArgs),
    /// Closed-form constants tau, C_S, Lambda and filling parameters.
    Constants(commands::ConstantsArgs),
    /// Every verification suite with its default parameters.
    Suite,
}

pub enum CliError {
    Usage(String),
    Io(String),
}

impl From<spongelab::Error> for CliError {
    fn from(e: spongelab::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Arguments echoed into the report: everything except output location and
/// thread count, which do not affect results.
fn command_echo() -> Vec<String> {
    let mut out = Vec::new();
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--out" || a == "--threads" {
            args.next();
            continue;
        }
        if a.starts_with("--out=") || a.starts_with("--threads=") {
            continue;
        }
        out.push(a);
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.global.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let start = Instant::now();
    let mut report = Report::new(command_echo());
    let run = commands::run(&cli, &mut report).and_then(|()| {
        if cli.global.timing {
            report.wall_time_ms = Some(start.elapsed().as_millis() as u64);
        }
        let bytes = output::render(&report, cli.global.format).map_err(CliError::Io)?;
        output::emit(&bytes, cli.global.out.as_deref()).map_err(|e| CliError::Io(e.to_string()))
    });
    match run {
        Ok(()) if report.any_failed() => ExitCode::from(1),
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Io(m)) => {
            eprintln!("I/O error: {m}");
            ExitCode::from(3)
        }
    }
}
