//! Independent checks of a computed eigen-result.

use lapsira::{EigenResult, LaplacianMatrix};
use serde::{Deserialize, Serialize};

use crate::dense::{dense_eigh, to_dense, MAX_DENSE};

/// Eigenvalue agreement required when pairing a result with the oracle.
pub const MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// `||L v_j - lambda_j v_j||_2` against the original `L`.
    pub residuals: Vec<f64>,
    /// `max |V^T V - I|`.
    pub orthogonality_defect: f64,
    /// `max_j |1_n^T v_j| / sqrt(n)`.
    pub kernel_defect: f64,
    /// `max_j |lambda_j - mu_j|` against the dense spectrum; `None` above the
    /// dense size limit.
    pub eigenvalue_error: Option<f64>,
    /// Some oracle eigenvalue in `(0, lambda_d]` has no partner.
    pub skipped_eigenvalue: bool,
    /// Every residual is below `eps`.
    pub residuals_ok: bool,
}

impl VerificationReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, &r| m.max(r))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Residuals and orthogonality always; above that, for `n <= MAX_DENSE`,
/// pairs the sorted result with the sorted positive oracle spectrum.
pub fn verify_eigresult(l: &LaplacianMatrix, result: &EigenResult, eps: f64) -> VerificationReport {
    let n = l.n();
    let mut residuals = Vec::with_capacity(result.lambdas.len());
    for (lam, v) in result.lambdas.iter().zip(&result.vectors) {
        let mut y = vec![0.0; n];
        l.matvec(v, &mut y);
        let r: f64 = y.iter().zip(v).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
        residuals.push(r);
    }
    let mut orth = 0.0_f64;
    for (a, va) in result.vectors.iter().enumerate() {
        for vb in &result.vectors[a..] {
            let target = if std::ptr::eq(va, vb) { 1.0 } else { 0.0 };
            orth = orth.max((dot(va, vb) - target).abs());
        }
    }
    let sqrt_n = (n as f64).sqrt();
    let kernel = result.vectors.iter().map(|v| v.iter().sum::<f64>().abs() / sqrt_n).fold(0.0, f64::max);

    let (eigenvalue_error, skipped_eigenvalue) =
        if n <= MAX_DENSE { compare_with_oracle(l, &result.lambdas) } else { (None, false) };
    VerificationReport {
        residuals_ok: residuals.iter().all(|&r| r <= eps),
        residuals,
        orthogonality_defect: orth,
        kernel_defect: kernel,
        eigenvalue_error,
        skipped_eigenvalue,
    }
}

fn compare_with_oracle(l: &LaplacianMatrix, lambdas: &[f64]) -> (Option<f64>, bool) {
    let Ok(eig) = dense_eigh(&to_dense(l)) else {
        return (None, false);
    };
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    // the smallest oracle value is the kernel of a connected Laplacian
    let positive = &eig.values[1.min(eig.values.len())..];
    let mut err = 0.0_f64;
    let mut skipped = false;
    for (j, &lam) in sorted.iter().enumerate() {
        match positive.get(j) {
            Some(&mu) => {
                err = err.max((lam - mu).abs());
                if mu < lam - MATCH_TOL {
                    skipped = true;
                }
            }
            None => err = f64::INFINITY,
        }
    }
    (Some(err), skipped)
}
