//! `avtorus`: Melnikov functions, guiding cycles and invariant tori from the
//! command line.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_list, parse_number};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "avtorus", version, about = "Higher-order averaging: Melnikov functions, guiding cycles, invariant tori")]
#[command(after_help = "Any subcommand also accepts --config FILE: a TOML table of long flag names.\n\
Exit codes: 0 ok, 1 internal, 2 usage, 3 hypothesis violated, 4 solver failure, 5 validity guard.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the partial Bell polynomial B_{n,k}.
    Bell(BellArgs),
    /// Evaluate Melnikov functions f_i, or the averaged field g_i.
    Melnikov(MelnikovArgs),
    /// Find a hyperbolic cycle of a guiding system.
    Cycle(CycleArgs),
    /// Detect the invariant torus over a grid of eps values.
    Torus(TorusArgs),
    /// Reproduce the section plot of the 4D example.
    Fig1(Fig1Args),
}

/// Comma-separated numbers; fractions like `1/15` are accepted.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NumList(pub Vec<f64>);

fn num_list(s: &str) -> Result<NumList, String> {
    parse_list(s).map(NumList)
}

/// `lo:hi:count` per dimension, comma-separated.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<(f64, f64, usize)>);

fn grid(s: &str) -> Result<Grid, String> {
    s.split(',')
        .map(|part| {
            let f: Vec<&str> = part.split(':').collect();
            match f[..] {
                [lo, hi, n] => {
                    let n: usize = n.trim().parse().map_err(|_| format!("bad count in '{part}'"))?;
                    if n == 0 {
                        return Err(format!("zero count in '{part}'"));
                    }
                    Ok((parse_number(lo)?, parse_number(hi)?, n))
                }
                _ => Err(format!("expected lo:hi:count, got '{part}'")),
            }
        })
        .collect::<Result<_, _>>()
        .map(Grid)
}

/// `lo:hi` per dimension, comma-separated.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Bounds(pub Vec<(f64, f64)>);

fn bounds(s: &str) -> Result<Bounds, String> {
    s.split(',')
        .map(|part| match part.split_once(':') {
            Some((lo, hi)) => Ok((parse_number(lo)?, parse_number(hi)?)),
            None => Err(format!("expected lo:hi, got '{part}'")),
        })
        .collect::<Result<_, _>>()
        .map(Bounds)
}

fn number(s: &str) -> Result<f64, String> {
    parse_number(s)
}

#[derive(Args, Debug, Serialize)]
pub struct BellArgs {
    pub n: usize,
    pub k: usize,
    /// The n-k+1 arguments x_1, x_2, ...
    #[arg(allow_negative_numbers = true)]
    pub args: Vec<String>,
}

/// Where the system comes from.
#[derive(Args, Debug, Serialize)]
pub struct Source {
    /// TOML system file.
    #[arg(long, conflicts_with = "builtin")]
    #[serde(skip)]
    pub system: Option<PathBuf>,
    /// Built-in system.
    #[arg(long)]
    pub builtin: Option<String>,
    /// N of the built-in 4D example.
    #[arg(long = "big-n", alias = "bigN", default_value_t = 2)]
    pub big_n: usize,
    /// mu of the built-in 4D example (+1 or -1).
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub mu: i32,
    /// SHA-256 of the system file, filled in after parsing.
    #[arg(skip)]
    pub system_sha256: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct MelnikovArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    /// Order i.
    #[arg(long)]
    pub order: usize,
    /// Evaluation point; repeatable.
    #[arg(long, value_parser = num_list)]
    pub point: Vec<NumList>,
    /// Evaluation grid, lo:hi:count per dimension.
    #[arg(long, value_parser = grid)]
    pub grid: Option<Grid>,
    /// Output g_i = f_i / T, after checking that lower orders vanish.
    #[arg(long)]
    pub averaged: bool,
    /// Box for the vanishing check, lo:hi per dimension (default: hull of the points).
    #[arg(long, value_parser = bounds)]
    pub check_box: Option<Bounds>,
    /// Sample points per dimension in the vanishing check.
    #[arg(long, default_value_t = 5)]
    pub check_points: usize,
    #[arg(long, value_parser = number, default_value = "1e-8")]
    pub tol_vanish: f64,
    #[arg(long, value_parser = number, default_value = "1e-10")]
    pub tol_quad_abs: f64,
    #[arg(long, value_parser = number, default_value = "1e-12")]
    pub tol_quad_rel: f64,
    /// CSV output file (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct CycleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    /// Averaging order of the guiding system, for --system.
    #[arg(long)]
    pub order: Option<usize>,
    /// Initial guess for a point on the cycle.
    #[arg(long, value_parser = num_list)]
    pub guess: Option<NumList>,
    /// Initial guess for the period.
    #[arg(long, value_parser = number)]
    pub period: Option<f64>,
    /// Box for the vanishing check, lo:hi per dimension (default: guess +- 1).
    #[arg(long, value_parser = bounds)]
    pub check_box: Option<Bounds>,
    #[arg(long, default_value_t = 5)]
    pub check_points: usize,
    #[arg(long, value_parser = number, default_value = "1e-8")]
    pub tol_vanish: f64,
    /// Newton tolerance on the shooting residual.
    #[arg(long, value_parser = number, default_value = "1e-10")]
    pub tol_newton: f64,
    /// Integrator tolerance (absolute and relative).
    #[arg(long, value_parser = number, default_value = "1e-13")]
    pub tol_ode: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    /// JSON output file (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct TorusArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    /// eps values, comma-separated.
    #[arg(long, value_parser = num_list)]
    pub eps_grid: NumList,
    /// Seeds along the unperturbed trace (built-in only).
    #[arg(long, default_value_t = 8)]
    pub seeds: usize,
    /// Seed point; repeatable (system files only).
    #[arg(long, value_parser = num_list)]
    pub seed_point: Vec<NumList>,
    /// RK4 steps per period.
    #[arg(long, default_value_t = 32)]
    pub steps: usize,
    /// Discarded iterates per seed (default: from --transient-time).
    #[arg(long)]
    pub transient: Option<usize>,
    /// Kept iterates per seed (default: from --keep-time).
    #[arg(long)]
    pub iters: Option<usize>,
    /// Transient in slow time eps^(N+1) t (built-in only).
    #[arg(long, value_parser = number, default_value = "4")]
    pub transient_time: f64,
    #[arg(long, value_parser = number, default_value = "2")]
    pub keep_time: f64,
    #[arg(long, value_parser = number, default_value = "4*pi")]
    pub rotation_time: f64,
    /// Iterates for the rotation number (system files; at least 1000).
    #[arg(long, default_value_t = 4000)]
    pub rotation_iters: usize,
    /// Run the stability probe around each curve.
    #[arg(long)]
    pub probe: bool,
    /// Probe around the unperturbed trace instead of the detected curve (built-in only).
    #[arg(long)]
    pub probe_trace: bool,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, value_parser = number, default_value = "0.1")]
    pub radius: f64,
    #[arg(long, default_value_t = 4000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// Output directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct Fig1Args {
    #[arg(long, value_parser = number, default_value = "1/15")]
    pub eps: f64,
    /// Section iterates per seed.
    #[arg(long, default_value_t = 10345)]
    pub iters: usize,
    /// RK4 steps per 2 pi.
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    /// Iterates dropped before fitting.
    #[arg(long, default_value_t = 3000)]
    pub transient: usize,
    /// Iterates per seed checked against the tube.
    #[arg(long, default_value_t = 500)]
    pub tail: usize,
    /// Output directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

fn run(args: Vec<String>) -> Result<(), CliError> {
    let args = config::expand(args)?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                Err(CliError::usage("invalid arguments"))
            } else {
                Ok(())
            };
        }
    };
    match cli.command {
        Command::Bell(a) => commands::bell(a),
        Command::Melnikov(a) => commands::melnikov::run(a),
        Command::Cycle(a) => commands::cycle::run(a),
        Command::Torus(a) => commands::torus::run(a),
        Command::Fig1(a) => commands::fig1::run(a),
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("avtorus: {e}");
            ExitCode::from(e.kind.code())
        }
    }
}
