//! Command-line entry points. Every command reads a JSON [`RunConfig`],
//! writes its outputs plus a `<output>.manifest.json` sidecar, and maps
//! failures to exit codes: 0 success, 1 runtime error, 2 usage error.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{parse_config, RunConfig};

use crate::canonical::to_canonical_json;
use crate::error::Result;
use crate::eval::ScoreSource;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "duetgraph", version, about = "Knowledge-graph completion with dual-pathway scoring")]
pub struct Cli {
    /// Worker threads for evaluation and Monte-Carlo trials (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Ordered reductions everywhere; results are byte-identical across runs.
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; absent keys take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the first-stage scorer and write its checkpoint.
    TrainCoarse {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the dual-pathway model; one JSON line per epoch on stdout.
    TrainFine {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the epoch lines to this file.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Rank the test queries and write canonical metrics JSON.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        coarse: Option<PathBuf>,
        #[arg(long)]
        fine: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one JSON line per test query with the decision and top 10.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        coarse: PathBuf,
        #[arg(long)]
        fine: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stop after this many queries.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Spectral diagnostics of a trained model on a dataset subgraph.
    Diagnose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        fine: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Bound-curve CSV (defaults next to the report).
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Normalized score-gap histogram over the test queries, as CSV.
    GapHist {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        fine: Option<PathBuf>,
        #[arg(long)]
        coarse: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "fine")]
        source: SourceArg,
        /// One histogram per query instead of the pooled one.
        #[arg(long)]
        per_query: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SourceArg {
    Fine,
    Coarse,
}

impl From<SourceArg> for ScoreSource {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Fine => ScoreSource::Fine,
            SourceArg::Coarse => ScoreSource::Coarse,
        }
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    commands::dispatch(cli)
}

/// Sidecar written next to every output artifact.
#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    output: String,
    config: &'a RunConfig,
    seed: u64,
    version: &'a str,
    threads: usize,
    deterministic: bool,
}

/// `<path>.manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_manifest(cli: &Cli, command: &str, output: &Path, config: &RunConfig) -> Result<()> {
    let m = Manifest {
        command,
        output: output
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        config,
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION"),
        threads: cli.threads,
        deterministic: cli.deterministic,
    };
    std::fs::write(manifest_path(output), to_canonical_json(&m)?)?;
    Ok(())
}
