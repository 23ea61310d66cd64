//! `sketchmul` command-line interface.
//!
//! Exit codes: 0 on success, 1 on usage or validation errors, 2 on I/O
//! errors, 3 when a verification run finds violations.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use sketchmul::bounds::DEFAULT_PLANNER_C;
use sketchmul::{Error, SamplingScheme};

mod commands;

#[derive(Parser)]
#[command(
    name = "sketchmul",
    version,
    about = "Randomized approximate matrix multiplication by outer-product sampling",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a CSV matrix with a prescribed stable rank
    Gen {
        rows: usize,
        cols: usize,
        /// Target stable rank, between 1 and min(rows, cols)
        target_sr: f64,
        seed: u64,
        /// Output CSV path
        out: PathBuf,
    },
    /// Print the sampling distribution of a scheme for a matrix pair
    Dist {
        a: PathBuf,
        b: PathBuf,
        /// proposed, dkm, or uniform
        scheme: SamplingScheme,
    },
    /// Draw one sketch of A B^T and report its error and certificate
    Sketch {
        a: PathBuf,
        b: PathBuf,
        /// proposed, dkm, or uniform
        scheme: SamplingScheme,
        /// Number of sampled outer products
        m: usize,
        seed: u64,
        /// Output CSV path for the estimate
        out: PathBuf,
    },
    /// Evaluate the sample-size planner and the competing complexity bounds
    Bounds {
        sr_a: f64,
        sr_b: f64,
        /// Target relative accuracy, in (0, 1)
        epsilon: f64,
        /// Planner constant
        #[arg(default_value_t = DEFAULT_PLANNER_C)]
        c: f64,
        /// Column count used by the rotation-scheme bound
        #[arg(default_value_t = 1024)]
        n: usize,
    },
    /// Verify the estimator's certificate inequalities on a matrix pair
    Verify {
        a: PathBuf,
        b: PathBuf,
        /// Optional probability CSV to validate against the pair
        #[arg(long)]
        dist: Option<PathBuf>,
    },
    /// Run a Monte Carlo benchmark from a JSON config
    Bench {
        config: PathBuf,
        /// Directory receiving report.json, quantiles.csv, exceedance.csv
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{err}");
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 2,
        _ => 1,
    }
}
