//! `projgeo` command-line front end.

mod commands;
mod doc;
mod report;
mod specs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use projgeo::batch::Execution;
use projgeo::ToleranceProfile;
use serde::Serialize;

use commands::{Context, RandomArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] projgeo::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use projgeo::Error as E;
        match self {
            CliError::Core(E::NoGeodesic { .. } | E::TooFar { .. }) => 3,
            CliError::Core(E::Internal(_) | E::InvariantViolation { .. }) => 1,
            _ => 2,
        }
    }
}

const DEFAULT_TOL: ToleranceProfile = ToleranceProfile::DEFAULT;

#[derive(Debug, Parser)]
#[command(
    name = "projgeo",
    version,
    about = "Geodesics between orthogonal projections"
)]
struct Cli {
    /// Tolerance for Hermiticity, idempotency and unitarity checks.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL.atol_structure)]
    tol_structure: f64,
    /// Spectral gap tolerance (branch cuts, meets, separation guard).
    #[arg(long, global = true, default_value_t = DEFAULT_TOL.atol_spectral)]
    tol_spectral: f64,
    /// Relative rank cutoff.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL.atol_rank)]
    tol_rank: f64,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Halmos decomposition, principal angles and geodesic verdicts.
    Decompose { p: PathBuf, q: PathBuf },
    /// Minimal geodesic from P to Q with sampled points.
    Geodesic {
        p: PathBuf,
        q: PathBuf,
        /// Sample times.
        #[arg(
            long = "t",
            value_delimiter = ',',
            default_value = "0,0.5,1",
            allow_hyphen_values = true
        )]
        times: Vec<f64>,
        /// ρ values for trace-norm lengths.
        #[arg(long, value_delimiter = ',')]
        rho: Vec<f64>,
        /// Write the exponent and samples to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the partial isometry between the wedge parts.
        #[arg(long, env = "PROJGEO_SEED")]
        seed: Option<u64>,
    },
    /// Distances of the index pair in M_{km} with τ = 1/m.
    Jones {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_delimiter = ',')]
        rho: Vec<f64>,
    },
    /// Path of conditional expectations and its parallel transport.
    Transport {
        /// e.g. `diag:2`, `blocks:2,1`, `tensor:2,2`, `span:file.json`,
        /// with an optional `@pi/8` rotation.
        #[arg(long)]
        spec0: String,
        #[arg(long)]
        spec1: String,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Random initial conditions for the ODE check.
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, env = "PROJGEO_SEED", default_value_t = 0)]
        seed: u64,
        /// Skip the ‖e0 − e1‖ < 1 guard and only report residuals.
        #[arg(long)]
        unguarded: bool,
    },
    /// Batch of seeded random pairs with aggregated invariant checks.
    Random {
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Ranks cycled over trials; random when omitted.
        #[arg(long, value_delimiter = ',')]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, env = "PROJGEO_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        force_wedge: bool,
        #[arg(long, default_value_t = 64)]
        max_n: usize,
        /// Run trials on the calling thread.
        #[arg(long)]
        sequential: bool,
    },
}

fn render<T: Serialize>(r: report::Report<T>, json: bool) -> String {
    r.render(json)
}

fn run(cli: Cli) -> Result<String, CliError> {
    let tol = ToleranceProfile::new(cli.tol_structure, cli.tol_spectral, cli.tol_rank)?;
    let ctx = Context {
        tol,
        command: std::env::args().skip(1).collect(),
    };
    let json = cli.json;
    Ok(match cli.command {
        Command::Decompose { p, q } => render(commands::decompose(&ctx, &p, &q)?, json),
        Command::Geodesic {
            p,
            q,
            times,
            rho,
            out,
            seed,
        } => render(
            commands::geodesic(&ctx, &p, &q, &times, &rho, out.as_deref(), seed)?,
            json,
        ),
        Command::Jones { m, k, rho } => render(commands::jones(&ctx, m, k, &rho)?, json),
        Command::Transport {
            spec0,
            spec1,
            steps,
            trials,
            seed,
            unguarded,
        } => render(
            commands::transport(&ctx, &spec0, &spec1, steps, trials, seed, unguarded)?,
            json,
        ),
        Command::Random {
            n,
            ranks,
            trials,
            seed,
            force_wedge,
            max_n,
            sequential,
        } => {
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::default()
            };
            let args = RandomArgs {
                n,
                ranks: &ranks,
                trials,
                seed,
                force_wedge,
                max_n,
                exec,
            };
            render(commands::random(&ctx, args)?, json)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
