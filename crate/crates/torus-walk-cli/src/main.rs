//! `torus-walk`: command-line front end.
//!
//! Every artifact embeds the resolved configuration and the tool version.
//! Wall-clock time goes to stderr, and into the artifact only with
//! `--timing`, so that equal seeds and configurations give equal bytes.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use torus_walk::Error;

#[derive(Parser, Debug)]
#[command(name = "torus-walk", version, about = "Random walks on periodic height functions on the discrete torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// `a,b` as a pair of integers.
pub fn parse_pair(s: &str) -> Result<[i64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected `a,b`, got `{s}`"));
    }
    let a = parts[0].parse().map_err(|e| format!("{e}"))?;
    let b = parts[1].parse().map_err(|e| format!("{e}"))?;
    Ok([a, b])
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Output {
    /// Root seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Artifact path; stdout when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Include the wall-clock duration in the artifact.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Torus {
    /// Up steps per line, `p1,p2`.
    #[arg(long, value_parser = parse_pair)]
    pub p: [i64; 2],
    /// Down steps per line, `n1,n2`.
    #[arg(long, value_parser = parse_pair, default_value = "1,1")]
    pub n: [i64; 2],
    /// Largest loop space enumerated when shapes are listed.
    #[arg(long, default_value_t = 2_000_000)]
    pub loop_cap: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Auto,
    Rational,
    Float,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Solve {
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    pub mode: Mode,
    /// Largest shape count solved exactly in auto mode.
    #[arg(long, default_value_t = torus_walk::chain::RATIONAL_CAP)]
    pub rational_cap: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteArg {
    NeighbourTest,
    Volume,
    ClosedForm,
    StripDrift,
    Corrector,
    Bijection,
    Counts,
    All,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeSource {
    /// `shapes[--index]` of the enumerated list.
    Index,
    /// Fracture loops drawn uniformly and kept when compatible.
    Random,
    /// `--file`: JSON `{"edges": [...]}` or the hex form.
    File,
    /// The staircase shape with all down steps near the axes.
    Canonical,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Derived parameters of the torus.
    Params {
        #[command(flatten)]
        torus: Torus,
        #[command(flatten)]
        out: Output,
    },
    /// List all shapes.
    Enumerate {
        #[command(flatten)]
        torus: Torus,
        #[command(flatten)]
        out: Output,
    },
    /// Shape graph sizes and connectivity.
    Graph {
        #[command(flatten)]
        torus: Torus,
        #[command(flatten)]
        out: Output,
    },
    /// Exact diffusivity from the corrector.
    ExactSigma {
        #[command(flatten)]
        torus: Torus,
        #[command(flatten)]
        solve: Solve,
        #[command(flatten)]
        out: Output,
    },
    /// Exact diffusivity over a list of `p`, as CSV by default.
    Sweep {
        /// `p1,p2;p1,p2;...`
        #[arg(long)]
        p_list: String,
        #[arg(long, value_parser = parse_pair, default_value = "1,1")]
        n: [i64; 2],
        #[arg(long, default_value_t = 2_000_000)]
        loop_cap: u64,
        #[command(flatten)]
        solve: Solve,
        #[command(flatten)]
        out: Output,
    },
    /// Monte Carlo diffusivity by batch means.
    Simulate {
        #[command(flatten)]
        torus: Torus,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, default_value_t = 4)]
        runs: u32,
        /// Defaults to 50 |S| when the shapes are cheap to count, else 10^5.
        #[arg(long)]
        burn_in: Option<u64>,
        /// Batch length; defaults to the square root of the steps.
        #[arg(long)]
        batch: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
    /// Strip widths, centres and disjointness of uniform loops.
    SampleLoops {
        #[command(flatten)]
        torus: Torus,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Comma-separated thresholds for the normalised width.
        #[arg(long, default_value = "0.1,0.25,0.5")]
        eps: String,
        #[command(flatten)]
        out: Output,
    },
    /// Exhaustive identity checks.
    Verify {
        #[command(flatten)]
        torus: Torus,
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[command(flatten)]
        out: Output,
    },
    /// Simplex integral and, optionally, the alternation probability of loop
    /// families.
    IntegralCheck {
        #[arg(long, default_value_t = 1)]
        g: u32,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Accepted loop tuples for the alternation estimate; 0 skips it.
        #[arg(long, default_value_t = 0)]
        family_samples: u64,
        /// Side of the torus used for the alternation estimate.
        #[arg(long, default_value_t = 800)]
        family_t: u32,
        #[command(flatten)]
        out: Output,
    },
    /// SVG picture of a shape and its fracture loops.
    Render {
        #[command(flatten)]
        torus: Torus,
        #[arg(long, value_enum, default_value_t = ShapeSource::Canonical)]
        shape: ShapeSource,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        file: Option<PathBuf>,
        /// Draws allowed for `--shape random`.
        #[arg(long, default_value_t = 1_000_000)]
        attempts: u64,
        #[command(flatten)]
        out: Output,
    },
}

/// Exit statuses beyond 0 and 1.
pub const EXIT_PARAM: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

pub enum Failure {
    Lib(Error),
    Io(String),
    /// Verification failed; the artifact with the failure locus is written.
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("TORUS_WALK_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(EXIT_VERIFY),
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Param(_) | Error::Shape(_) | Error::Domain(_) | Error::Geometry(_) => ExitCode::from(EXIT_PARAM),
                Error::Budget { .. } => ExitCode::from(EXIT_BUDGET),
                Error::Solver { .. } | Error::Estimation(_) => ExitCode::FAILURE,
            }
        }
    }
}
