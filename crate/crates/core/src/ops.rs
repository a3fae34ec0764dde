//! Trimmed, shifted and deflated operator algebra.
//!
//! Removing row/column `i` of a connected Laplacian leaves a nonsingular
//! M-matrix `L_hat`. A solution `z_hat` of a trimmed system is lifted back to
//! `n`-space by re-inserting a zero at `i` and subtracting the mean taken with
//! respect to `n`, which lands exactly on the kernel complement `1_n^perp`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::LaplacianMatrix;
use crate::linalg::{axpy, dot, sum, LinearOperator};

#[derive(Debug, Error, PartialEq)]
pub enum OpsError {
    #[error("vector length {got} does not match expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("trim index {index} out of range for order {n}")]
    TrimIndexOutOfRange { index: usize, n: usize },

    #[error("operator needs at least {min} vertices, matrix has {n}")]
    TooSmall { min: usize, n: usize },

    #[error("deflation weight must be positive, got {0}")]
    NonPositiveDelta(f64),
}

/// Orders at or below this keep the `(sigma/n) 1 1^T` term by default.
pub const RANK1_AUTO_LIMIT: usize = 100_000;

pub fn default_include_rank1(n: usize) -> bool {
    n <= RANK1_AUTO_LIMIT
}

/// Which row/column of `L` is trimmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrimPolicy {
    /// Smallest index attaining the maximum degree.
    MaxDegree,
    /// Smallest index attaining the minimum degree.
    MinDegree,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrimContext {
    pub index: usize,
    pub n: usize,
}

impl TrimContext {
    pub fn new(index: usize, n: usize) -> Result<Self, OpsError> {
        if index >= n {
            return Err(OpsError::TrimIndexOutOfRange { index, n });
        }
        Ok(Self { index, n })
    }

    /// Position of full index `j != index` inside a trimmed vector.
    #[inline]
    pub fn hat(&self, j: usize) -> usize {
        if j > self.index {
            j - 1
        } else {
            j
        }
    }
}

pub fn select_trim_index(l: &LaplacianMatrix, policy: TrimPolicy) -> Result<TrimContext, OpsError> {
    let n = l.n();
    let d = l.diag();
    let index = match policy {
        TrimPolicy::Fixed(i) => i,
        TrimPolicy::MaxDegree | TrimPolicy::MinDegree => {
            if n == 0 {
                return Err(OpsError::TooSmall { min: 1, n });
            }
            let mut best = 0;
            for (i, &v) in d.iter().enumerate() {
                let better = match policy {
                    TrimPolicy::MaxDegree => v > d[best],
                    _ => v < d[best],
                };
                if better {
                    best = i;
                }
            }
            best
        }
    };
    TrimContext::new(index, n)
}

fn check_len(got: usize, expected: usize) -> Result<(), OpsError> {
    if got != expected {
        return Err(OpsError::LengthMismatch { expected, got });
    }
    Ok(())
}

/// Drops entry `trim.index`.
pub fn restrict(v: &[f64], trim: &TrimContext) -> Result<Vec<f64>, OpsError> {
    check_len(v.len(), trim.n)?;
    let mut out = Vec::with_capacity(trim.n - 1);
    out.extend_from_slice(&v[..trim.index]);
    out.extend_from_slice(&v[trim.index + 1..]);
    Ok(out)
}

/// Lifts a trimmed solution: insert `0` at `trim.index`, then subtract
/// `(1^T z_hat / n) 1_n`. The result sums to zero up to rounding.
pub fn enlarge_solution(z_hat: &[f64], trim: &TrimContext) -> Result<Vec<f64>, OpsError> {
    check_len(z_hat.len(), trim.n - 1)?;
    let shift = sum(z_hat) / trim.n as f64;
    let mut z = Vec::with_capacity(trim.n);
    z.extend(z_hat[..trim.index].iter().map(|v| v - shift));
    z.push(-shift);
    z.extend(z_hat[trim.index..].iter().map(|v| v - shift));
    Ok(z)
}

/// Converged eigenpairs and the weight they are deflated with.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflationSet {
    lambdas: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    delta: f64,
}

impl DeflationSet {
    pub fn new(delta: f64) -> Result<Self, OpsError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(OpsError::NonPositiveDelta(delta));
        }
        Ok(Self { lambdas: Vec::new(), vectors: Vec::new(), delta })
    }

    pub fn with_pairs(delta: f64, pairs: impl IntoIterator<Item = (f64, Vec<f64>)>) -> Result<Self, OpsError> {
        let mut d = Self::new(delta)?;
        for (l, v) in pairs {
            d.push(l, v)?;
        }
        Ok(d)
    }

    pub fn push(&mut self, lambda: f64, v: Vec<f64>) -> Result<(), OpsError> {
        if let Some(first) = self.vectors.first() {
            check_len(v.len(), first.len())?;
        }
        self.lambdas.push(lambda);
        self.vectors.push(v);
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `(max |V^T V - I|, max |V^T 1|)`.
    pub fn defects(&self) -> (f64, f64) {
        let mut orth = 0.0_f64;
        let mut kernel = 0.0_f64;
        for (a, va) in self.vectors.iter().enumerate() {
            kernel = kernel.max(sum(va).abs());
            for (b, vb) in self.vectors.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                orth = orth.max((dot(va, vb) - target).abs());
            }
        }
        (orth, kernel)
    }

    /// `y += delta * V (V^T x)`
    pub fn add_to(&self, x: &[f64], y: &mut [f64]) {
        for v in &self.vectors {
            let c = dot(v, x);
            if c != 0.0 {
                axpy(self.delta * c, v, y);
            }
        }
    }
}

/// `(L + delta V V^T) x`
pub fn deflated_matvec(l: &LaplacianMatrix, defl: &DeflationSet, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; l.n()];
    l.matvec(x, &mut y);
    defl.add_to(x, &mut y);
    y
}

/// `2 * max(diag(L))`: places deflated eigenvalues beyond the Gershgorin
/// bound of the spectrum.
pub fn choose_delta(l: &LaplacianMatrix) -> Result<f64, OpsError> {
    if l.n() == 0 {
        return Err(OpsError::TooSmall { min: 1, n: 0 });
    }
    let delta = 2.0 * l.max_diag();
    if delta > 0.0 {
        Ok(delta)
    } else {
        Err(OpsError::NonPositiveDelta(delta))
    }
}

/// The trimmed system matrix
/// `(L_hat - sigma I) + [sigma/n 1 1^T] + delta V_hat V_hat^T`, applied
/// matrix-free on `(n-1)`-vectors.
#[derive(Debug, Clone)]
pub struct ShiftedDeflatedOperator<'a> {
    l: &'a LaplacianMatrix,
    trim: TrimContext,
    sigma: f64,
    delta: f64,
    vhat: Vec<Vec<f64>>,
    include_rank1: bool,
}

impl<'a> ShiftedDeflatedOperator<'a> {
    pub fn new(
        l: &'a LaplacianMatrix,
        trim: TrimContext,
        sigma: f64,
        defl: &DeflationSet,
        include_rank1: bool,
    ) -> Result<Self, OpsError> {
        if l.n() < 2 {
            return Err(OpsError::TooSmall { min: 2, n: l.n() });
        }
        check_len(trim.n, l.n())?;
        let vhat = defl.vectors().iter().map(|v| restrict(v, &trim)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { l, trim, sigma, delta: defl.delta(), vhat, include_rank1 })
    }

    pub fn trim(&self) -> TrimContext {
        self.trim
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn vhat(&self) -> &[Vec<f64>] {
        &self.vhat
    }

    pub fn include_rank1(&self) -> bool {
        self.include_rank1
    }

    pub fn laplacian(&self) -> &LaplacianMatrix {
        self.l
    }
}

impl LinearOperator for ShiftedDeflatedOperator<'_> {
    fn dim(&self) -> usize {
        self.trim.n - 1
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.l.matvec_trimmed(self.trim.index, x, y);
        if self.sigma != 0.0 {
            axpy(-self.sigma, x, y);
            if self.include_rank1 {
                let c = self.sigma / self.trim.n as f64 * sum(x);
                for yi in y.iter_mut() {
                    *yi += c;
                }
            }
        }
        for v in &self.vhat {
            let c = dot(v, x);
            if c != 0.0 {
                axpy(self.delta * c, v, y);
            }
        }
    }
}
