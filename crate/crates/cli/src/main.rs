//! `grnconv`: evaluate generalized Rayleigh-normal curves, rate regions,
//! finite-size conversion sweeps, the storage ratio analysis, and the
//! randomized self-check battery.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric non-convergence,
//! 4 verification failure.

mod commands;
mod output;

use clap::{Args, Parser, Subcommand};
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Verification(String),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
            CliError::Verification(m) => write!(f, "verification failure: {m}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "grnconv",
    about = "Random-number conversion via restricted storage: distribution curves, rate regions, finite-size sweeps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by commands that take a source/target pair, either as
/// distribution JSON (`--source`/`--target`) or as pure-state JSON
/// (`--psi`/`--phi`, converted to squared Schmidt coefficients).
#[derive(Args, Debug)]
struct PairArgs {
    /// Source distribution JSON file ({"probs": [...]} or {"levels": [[p, m], ...]})
    #[arg(long, conflicts_with = "psi")]
    source: Option<PathBuf>,
    /// Target distribution JSON file
    #[arg(long, conflicts_with = "phi")]
    target: Option<PathBuf>,
    /// Source pure bipartite state JSON file ({"amplitudes": ...} or {"schmidt_sq": [...]})
    #[arg(long)]
    psi: Option<PathBuf>,
    /// Target pure bipartite state JSON file
    #[arg(long)]
    phi: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Emit CSV curves of the generalized Rayleigh-normal family over mu,
    /// one column per (v, s) pair (the cross product of --v and --s)
    ZCurve {
        /// Variance-ratio parameters v >= 0 (comma separated)
        #[arg(long, value_delimiter = ',', default_value = "0.3333333333333333")]
        v: Vec<f64>,
        /// Truncation parameters s ("inf" for the plain family)
        #[arg(long, value_delimiter = ',', value_parser = parse_s, allow_hyphen_values = true, default_value = "-0.5,0,0.5,1,inf")]
        s: Vec<f64>,
        #[arg(long, allow_hyphen_values = true, default_value_t = -3.0)]
        mu_min: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 3.0)]
        mu_max: f64,
        /// Number of grid intervals over [mu_min, mu_max]
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Output CSV path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit rate-region boundary samples with admissibility classification
    Region {
        #[command(flatten)]
        pair: PairArgs,
        /// Confidence in (0,1)
        #[arg(long)]
        nu: f64,
        /// Region order: 1 (per-copy rates) or 2 (per-sqrt-copy rates)
        #[arg(long, default_value_t = 2)]
        order: u8,
        /// First-order storage rate for order 2 (defaults to the source entropy)
        #[arg(long)]
        s1: Option<f64>,
        #[arg(long, allow_hyphen_values = true, default_value_t = -2.0)]
        s2_min: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
        s2_max: f64,
        #[arg(long, default_value_t = 40)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the second-order expansion of the maximal convertible number
    /// against the exact finite-n value where the type-class budget allows
    Expand {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        nu: f64,
        /// First-order storage rate (defaults to the source entropy)
        #[arg(long)]
        s1: Option<f64>,
        /// Second-order storage rate
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        s2: f64,
        /// Copy counts to evaluate
        #[arg(long, value_delimiter = ',', default_value = "256,1024,4096")]
        n: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact finite-n storage-restricted fidelity next to its second-order
    /// prediction
    FidelityFiniteN {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        s2: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        t2: f64,
        #[arg(long, value_delimiter = ',', default_value = "256,1024,4096")]
        n: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the restricted-vs-unrestricted fidelity ratio over an s2 grid,
    /// one column per t2 ("NA" where the unrestricted fidelity vanishes)
    Ratio {
        #[command(flatten)]
        pair: PairArgs,
        /// Second-order copy rates (columns)
        #[arg(long, value_delimiter = ',', default_value = "0,-3,-6", allow_hyphen_values = true)]
        t2: Vec<f64>,
        #[arg(long, allow_hyphen_values = true, default_value_t = -6.0)]
        s2_min: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 6.0)]
        s2_max: f64,
        #[arg(long, default_value_t = 60)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized oracle battery; nonzero exit on any failure
    Verify {
        /// Seed for the randomized instances
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Variational-oracle grid resolution
        #[arg(long, default_value_t = 400)]
        grid: usize,
        /// Scale factor applied to every check tolerance
        #[arg(long, default_value_t = 1.0)]
        tol: f64,
    },
}

fn parse_s(raw: &str) -> Result<f64, String> {
    if raw.trim() == "inf" {
        return Ok(f64::INFINITY);
    }
    raw.trim().parse::<f64>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ZCurve {
            v,
            s,
            mu_min,
            mu_max,
            grid,
            out,
        } => commands::z_curve(&v, &s, mu_min, mu_max, grid, &out),
        Command::Region {
            pair,
            nu,
            order,
            s1,
            s2_min,
            s2_max,
            grid,
            out,
        } => commands::region(&pair, nu, order, s1, s2_min, s2_max, grid, &out),
        Command::Expand {
            pair,
            nu,
            s1,
            s2,
            n,
            out,
        } => commands::expand(&pair, nu, s1, s2, &n, &out),
        Command::FidelityFiniteN { pair, s2, t2, n, out } => {
            commands::fidelity_finite_n(&pair, s2, t2, &n, &out)
        }
        Command::Ratio {
            pair,
            t2,
            s2_min,
            s2_max,
            grid,
            out,
        } => commands::ratio(&pair, &t2, s2_min, s2_max, grid, &out),
        Command::Verify { seed, grid, tol } => commands::verify(seed, grid, tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("grnconv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
