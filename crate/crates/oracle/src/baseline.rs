//! Dense baselines that remove the Laplacian kernel by other means: a small
//! diagonal shift, or a rank-two correction that moves `1_n` to eigenvalue
//! `n`.

use lapsira::LaplacianMatrix;

use crate::dense::{dense_eigh, guard, to_dense, DenseSymmetric};
use crate::OracleError;

pub const DEFAULT_TAU: f64 = 1e-8;

/// Eigenvalues of `L + tau I` with the shifted kernel `tau` dropped, the
/// next `d` returned minus `tau`.
pub fn baseline_perturbed(l: &LaplacianMatrix, tau: f64, d: usize) -> Result<Vec<f64>, OracleError> {
    guard(l.n())?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(OracleError::BadShift(tau));
    }
    let eig = dense_eigh(&to_dense(l).shifted(tau))?;
    let mut vals = eig.values;
    remove_closest(&mut vals, tau);
    take_smallest(vals, d, |v| v - tau)
}

/// `L_d + [e_1 1_n][-e_1^T; 1_n^T]` with `L_d = L + e_1 e_1^T`, assembled
/// term by term.
pub fn rank_two_corrected(l: &LaplacianMatrix) -> DenseSymmetric {
    let n = l.n();
    let mut a = to_dense(l);
    a.add(0, 0, 1.0);
    let ones = vec![1.0; n];
    let mut e1 = vec![0.0; n];
    if n > 0 {
        e1[0] = 1.0;
    }
    a.add_outer(-1.0, &e1);
    a.add_outer(1.0, &ones);
    a
}

/// `d` smallest eigenvalues of [`rank_two_corrected`] once the displaced
/// kernel eigenvalue `n` is removed.
pub fn baseline_nullspace_deflated(l: &LaplacianMatrix, d: usize) -> Result<Vec<f64>, OracleError> {
    guard(l.n())?;
    let eig = dense_eigh(&rank_two_corrected(l))?;
    let mut vals = eig.values;
    remove_closest(&mut vals, l.n() as f64);
    take_smallest(vals, d, |v| v)
}

fn remove_closest(vals: &mut Vec<f64>, target: f64) {
    if let Some(k) = (0..vals.len()).min_by(|&a, &b| (vals[a] - target).abs().total_cmp(&(vals[b] - target).abs())) {
        vals.remove(k);
    }
}

fn take_smallest(vals: Vec<f64>, d: usize, f: impl Fn(f64) -> f64) -> Result<Vec<f64>, OracleError> {
    if d > vals.len() {
        return Err(OracleError::NotEnoughEigenvalues { wanted: d, available: vals.len() });
    }
    Ok(vals.into_iter().take(d).map(f).collect())
}
