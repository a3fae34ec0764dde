//! Smallest positive eigenpairs of sparse graph Laplacians.
//!
//! The solver never factorizes the (singular) Laplacian and never adds a
//! diagonal regularization. Instead it combines four pieces:
//!
//! * **trimming**: one row/column `i` of `L` is masked out, which makes the
//!   remaining `(n-1)x(n-1)` block symmetric positive definite, and the trimmed
//!   solution is lifted back to an `n`-vector orthogonal to the all-ones kernel;
//! * **deflation**: converged pairs are pushed away with `L + delta * V V^T`;
//! * **shift-invert**: the inner systems are shifted by a target `sigma`
//!   that follows the next wanted eigenvalue;
//! * **inexact residual Arnoldi**: the outer projection method expands its
//!   search space with loosely solved (preconditioned CG / MINRES) systems.
//!
//! ```
//! use lapsira::{fixtures, graph, sira};
//!
//! let g = fixtures::path(3);
//! let l = graph::laplacian(&g);
//! let res = sira::isira_solve(&l, &sira::SiraConfig::new(2)).unwrap();
//! assert!((res.lambdas[0] - 1.0).abs() < 1e-8);
//! assert!((res.lambdas[1] - 3.0).abs() < 1e-8);
//! ```

pub mod fixtures;
pub mod graph;
pub mod inner;
pub mod linalg;
pub mod ops;
pub mod sira;

pub use graph::{EdgeList, Graph, LaplacianMatrix};
pub use inner::{InnerOptions, Preconditioner, SolveReport};
pub use ops::{DeflationSet, ShiftedDeflatedOperator, TrimContext, TrimPolicy};
pub use sira::{isira_solve, EigenResult, SiraConfig};
