use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lapsira::inner::{PrecondKind, SolverKind};
use lapsira::sira::{DeltaPolicy, DEFAULT_SEED};
use lapsira::TrimPolicy;

#[derive(Parser, Debug)]
#[command(name = "lapsira", version, about = "Smallest positive eigenpairs of graph Laplacians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute eigenpairs of the largest connected component.
    Solve(SolveArgs),
    /// Solve, then check the result against a dense eigendecomposition.
    Verify(SolveArgs),
    /// Compare the sparse solver with the dense baselines.
    Bench(SolveArgs),
    /// Run the solver under every trimming policy.
    Ablate(SolveArgs),
    /// Connected component statistics.
    Components(InputArgs),
    /// Write a synthetic edge list.
    Generate(GenerateArgs),
    /// Write the Laplacian in MatrixMarket coordinate format.
    Laplacian(InputArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Edge list: `u v [w]` per line, `%` or `#` comments.
    pub input: PathBuf,
    /// Write the main output here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub io: InputArgs,
    /// Per-iteration history as CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Eigenvectors as little-endian f64, column-major, after a 16-byte header.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Number of smallest positive eigenpairs.
    #[arg(long = "num-eigs", default_value_t = 10)]
    pub num_eigs: usize,
    /// Outer tolerance on `||L v - lambda v||_2`.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Maximum search space dimension (default 30, larger when many pairs are wanted).
    #[arg(long = "max-subspace")]
    pub max_subspace: Option<usize>,
    /// Dimension kept on restart (default max(num-eigs + 5, 15)).
    #[arg(long = "restart-size")]
    pub restart_size: Option<usize>,
    /// Relative residual target of the inner solver.
    #[arg(long = "inner-tol", default_value_t = 1e-2)]
    pub inner_tol: f64,
    #[arg(long = "inner-maxit", default_value_t = 500)]
    pub inner_maxit: usize,
    #[arg(long, value_enum, default_value_t = SolverArg::Cg)]
    pub solver: SolverArg,
    #[arg(long, value_enum, default_value_t = PrecondArg::Deflated)]
    pub precond: PrecondArg,
    /// `auto` (= `max-degree`), `min-degree`, or a vertex index of the solved component.
    #[arg(long, default_value = "auto", value_parser = parse_trim)]
    pub trim: TrimPolicy,
    /// `auto` (twice the largest degree) or a positive value.
    #[arg(long, default_value = "auto", value_parser = parse_delta)]
    pub delta: DeltaPolicy,
    #[arg(long, default_value_t = 0.0)]
    pub sigma0: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Outer iteration cap (default 100 * num-eigs * max-subspace).
    #[arg(long = "max-outer")]
    pub max_outer: Option<usize>,
    /// Shift-invert steps on the random vector added after each converged pair.
    #[arg(long = "probe-steps", default_value_t = 2)]
    pub probe_steps: usize,
    /// Assert subspace invariants every iteration.
    #[arg(long)]
    pub validate: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverArg {
    Cg,
    Minres,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Cg => SolverKind::Cg,
            SolverArg::Minres => SolverKind::Minres,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecondArg {
    None,
    Jacobi,
    Deflated,
}

impl From<PrecondArg> for PrecondKind {
    fn from(p: PrecondArg) -> Self {
        match p {
            PrecondArg::None => PrecondKind::None,
            PrecondArg::Jacobi => PrecondKind::Jacobi,
            PrecondArg::Deflated => PrecondKind::Deflated,
        }
    }
}

pub fn parse_trim(s: &str) -> Result<TrimPolicy, String> {
    match s {
        "auto" | "max-degree" => Ok(TrimPolicy::MaxDegree),
        "min-degree" => Ok(TrimPolicy::MinDegree),
        _ => s
            .parse::<usize>()
            .map(TrimPolicy::Fixed)
            .map_err(|_| format!("expected auto, max-degree, min-degree or a vertex index, got {s:?}")),
    }
}

pub fn parse_delta(s: &str) -> Result<DeltaPolicy, String> {
    if s == "auto" {
        return Ok(DeltaPolicy::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(DeltaPolicy::Fixed(v)),
        _ => Err(format!("expected auto or a positive number, got {s:?}")),
    }
}

#[derive(Args, Debug, Clone)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: GraphKind,
    /// Vertex count (ignored for grids).
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub rows: usize,
    #[arg(long, default_value_t = 10)]
    pub cols: usize,
    /// Average degree of Erdos-Renyi graphs.
    #[arg(long = "avg-degree", default_value_t = 10.0)]
    pub avg_degree: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Path,
    Cycle,
    Star,
    Complete,
    Grid,
    Er,
}
