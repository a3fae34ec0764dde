//! Small vector kernels shared by the solvers.

use std::sync::atomic::{AtomicUsize, Ordering};

static LARGEST_DENSE: AtomicUsize = AtomicUsize::new(0);

/// Notes that a dense `k x k` matrix was factorized or diagonalized.
pub fn record_dense_dim(k: usize) {
    LARGEST_DENSE.fetch_max(k, Ordering::Relaxed);
}

/// Largest dense matrix order factorized or diagonalized so far in this
/// process. Only projected `k x k` and deflation `c x c` problems qualify.
pub fn largest_dense_dim() -> usize {
    LARGEST_DENSE.load(Ordering::Relaxed)
}

/// A symmetric linear map on `R^dim`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y <- A x`. `y` is fully overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl<F> LinearOperator for (usize, F)
where
    F: Fn(&[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.1)(x, y)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y <- y + alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

pub fn sum(x: &[f64]) -> f64 {
    x.iter().sum()
}

/// Removes the mean, i.e. projects onto the orthogonal complement of `1_n`.
pub fn project_out_ones(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let mean = sum(x) / x.len() as f64;
    for xi in x.iter_mut() {
        *xi -= mean;
    }
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Linear combination of columns: `sum_j cols[j] * coeffs[j]`.
pub fn combine(cols: &[Vec<f64>], coeffs: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (c, &a) in cols.iter().zip(coeffs) {
        if a != 0.0 {
            axpy(a, c, &mut out);
        }
    }
    out
}
