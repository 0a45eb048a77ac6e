//! Command-line front end: argument parsing, file formats and dispatch.

pub mod commands;
pub mod error;
pub mod format;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use expoly_core::ideal::DEFAULT_RANK_TOL;
use expoly_core::stirling::StirlingKind;
use expoly_core::zeros::DEFAULT_CLUSTER_TOL;

use crate::commands::RunConfig;
use crate::error::{CliError, EXIT_VERIFY_FAIL};

#[derive(Debug, Parser)]
#[command(name = "expoly", version, about = "Reconstruct multivariate exponential polynomials from grid samples")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate a model over a box of integer points.
    Synth {
        #[arg(long)]
        model: PathBuf,
        /// `box:lo..hi[,lo..hi]...`; one range applies to every coordinate.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the model, its ideal and its zeros from samples.
    Reconstruct {
        #[arg(long)]
        samples: PathBuf,
        /// Upper bound N on the total multiplicity.
        #[arg(long)]
        mult_bound: usize,
        /// Relative rank tolerance.
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        /// Eigenvalue clustering tolerance.
        #[arg(long, default_value_t = DEFAULT_CLUSTER_TOL)]
        cluster_tol: f64,
        /// Seed for the random eigenvalue combination; defaults to
        /// $EXPOLY_SEED or a fixed value.
        #[arg(long)]
        seed: Option<u64>,
        /// Skip the final least-squares polishing of zeros and coefficients.
        #[arg(long)]
        no_refine: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check kernel polynomials and a model against samples.
    Verify {
        #[arg(long)]
        samples: PathBuf,
        /// Model JSON; its components are resynthesized and any recorded
        /// kernel is checked.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Extra kernel polynomial as `re,im:e1,..,es;...`.
        #[arg(long, allow_hyphen_values = true)]
        kernel: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print one multivariate Stirling number, or dump a table as CSV.
    Stirling {
        /// 1 for the first kind (signed), 2 for the second kind.
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Upper argument ν as `a,b,...`.
        #[arg(long, required_unless_present = "table", conflicts_with = "table")]
        nu: Option<String>,
        /// Lower argument κ as `c,d,...`.
        #[arg(long, required_unless_present = "table", conflicts_with = "table")]
        kappa: Option<String>,
        /// Dump all pairs over {0..max}^dim.
        #[arg(long, requires_all = ["dim", "max"])]
        table: bool,
        #[arg(long)]
        dim: Option<usize>,
        /// Largest entry of ν and κ in the table.
        #[arg(long)]
        max: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    #[value(name = "1", alias = "first")]
    First,
    #[value(name = "2", alias = "second")]
    Second,
}

fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

/// Runs one command and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("expoly: {e}");
            if let Some(hint) = e.coverage_hint() {
                eprintln!("expoly: {hint}");
            }
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Synth { model, grid, out } => {
            emit(out.as_ref(), &commands::synth(&model, &grid)?)?;
        }
        Command::Reconstruct {
            samples,
            mult_bound,
            tol,
            cluster_tol,
            seed,
            no_refine,
            out,
        } => {
            let config = RunConfig {
                samples,
                mult_bound,
                rank_tol: tol,
                cluster_tol,
                seed: match seed {
                    Some(s) => s,
                    None => commands::default_seed()?,
                },
                refine: !no_refine,
            };
            emit(out.as_ref(), &commands::reconstruct(&config)?)?;
        }
        Command::Verify {
            samples,
            model,
            kernel,
            out,
        } => {
            let v = commands::verify(&samples, model.as_deref(), &kernel)?;
            emit(out.as_ref(), v.report.as_bytes())?;
            if !v.pass {
                return Ok(EXIT_VERIFY_FAIL);
            }
        }
        Command::Stirling {
            kind,
            nu,
            kappa,
            table,
            dim,
            max,
            out,
        } => {
            let kind = match kind {
                KindArg::First => StirlingKind::First,
                KindArg::Second => StirlingKind::Second,
            };
            let bytes = match (table, dim, max, nu, kappa) {
                (true, Some(dim), Some(max), _, _) => commands::stirling_table(kind, dim, max)?,
                (false, _, _, Some(nu), Some(kappa)) => commands::stirling_value(kind, &nu, &kappa)?,
                _ => return Err(CliError::parse("give --nu and --kappa, or --table --dim --max")),
            };
            emit(out.as_ref(), &bytes)?;
        }
    }
    Ok(0)
}
