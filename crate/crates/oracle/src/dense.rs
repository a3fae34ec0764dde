//! Small dense matrices, a cyclic Jacobi eigensolver and an LU solve.
//!
//! Deliberately naive: these are the reference implementations the sparse
//! solver is checked against, so they share no code with it.

use lapsira::ops::{DeflationSet, TrimContext};
use lapsira::LaplacianMatrix;

use crate::OracleError;

/// Size guard for every dense routine.
pub const MAX_DENSE: usize = 2000;

const MAX_SWEEPS: usize = 100;

pub(crate) fn guard(n: usize) -> Result<(), OracleError> {
    if n > MAX_DENSE {
        Err(OracleError::TooLarge { n, limit: MAX_DENSE })
    } else {
        Ok(())
    }
}

/// Row-major `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    a: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(n: usize, a: Vec<f64>) -> Result<Self, OracleError> {
        if a.len() != n * n {
            return Err(OracleError::DimensionMismatch { expected: n * n, got: a.len() });
        }
        Ok(Self { n, a })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let a = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Self { n, a }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.a.chunks(self.n.max(1)).take(self.n).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += aik * other.a[k * n + j];
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { n: self.n, a: self.a.iter().zip(&other.a).map(|(x, y)| x - y).collect() }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }
}

/// Symmetric matrix; symmetry holds exactly because every write goes to
/// both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric(DenseMatrix);

impl DenseSymmetric {
    pub fn zeros(n: usize) -> Self {
        Self(DenseMatrix::zeros(n))
    }

    /// Symmetrizes `(A + A^T) / 2` on load.
    pub fn from_matrix(a: &DenseMatrix) -> Self {
        Self(DenseMatrix::from_fn(a.n, |i, j| 0.5 * (a.get(i, j) + a.get(j, i))))
    }

    /// `f` is only evaluated for `j <= i`.
    pub fn from_lower(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut s = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                s.set(i, j, f(i, j));
            }
        }
        s
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0.set(i, j, v);
        self.0.set(j, i, v);
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.0.matvec(x)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.frobenius()
    }

    pub fn as_matrix(&self) -> &DenseMatrix {
        &self.0
    }

    /// `A + s * I`
    pub fn shifted(&self, s: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n() {
            out.add(i, i, s);
        }
        out
    }

    /// Adds `w * x x^T`.
    pub fn add_outer(&mut self, w: f64, x: &[f64]) {
        for i in 0..self.n() {
            for j in 0..=i {
                self.add(i, j, w * x[i] * x[j]);
            }
        }
    }
}

/// Dense copy of `L`.
pub fn to_dense(l: &LaplacianMatrix) -> DenseSymmetric {
    let n = l.n();
    let mut a = DenseSymmetric::zeros(n);
    for i in 0..n {
        a.set(i, i, l.diag()[i]);
        for (j, v) in l.row_offdiag(i) {
            a.set(i, j, v);
        }
    }
    a
}

/// Dense copy of `L` with row and column `trim.index` deleted.
pub fn trimmed_dense(l: &LaplacianMatrix, trim: &TrimContext) -> DenseSymmetric {
    let full = to_dense(l);
    let keep: Vec<usize> = (0..l.n()).filter(|&j| j != trim.index).collect();
    DenseSymmetric::from_lower(keep.len(), |a, b| full.get(keep[a], keep[b]))
}

/// Dense `L + delta V V^T`.
pub fn deflated_dense(l: &LaplacianMatrix, defl: &DeflationSet) -> DenseSymmetric {
    let mut a = to_dense(l);
    for v in defl.vectors() {
        a.add_outer(defl.delta(), v);
    }
    a
}

/// Eigenvalues ascending; `vectors` column `k` pairs with `values[k]`.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

fn off_norm(a: &DenseMatrix) -> f64 {
    let n = a.n;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j).powi(2);
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi: sweeps of plane rotations over every `(p, q)` pair until
/// the off-diagonal Frobenius norm is at most `1e-12 ||A||_F`. Eigenvectors
/// are signed so their largest-magnitude entry is positive.
pub fn dense_eigh(a: &DenseSymmetric) -> Result<DenseEigen, OracleError> {
    let n = a.n();
    guard(n)?;
    let mut m = a.as_matrix().clone();
    let mut q = DenseMatrix::identity(n);
    let target = 1e-12 * a.frobenius();
    let mut sweeps = 0;
    while off_norm(&m) > target {
        if sweeps == MAX_SWEEPS {
            return Err(OracleError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for r in p + 1..n {
                let apr = m.get(p, r);
                if apr == 0.0 {
                    continue;
                }
                let theta = (m.get(r, r) - m.get(p, p)) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- J^T A J, with J the rotation in the (p, r) plane
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akr = m.get(k, r);
                    m.set(k, p, c * akp - s * akr);
                    m.set(k, r, s * akp + c * akr);
                }
                for k in 0..n {
                    let apk = m.get(p, k);
                    let ark = m.get(r, k);
                    m.set(p, k, c * apk - s * ark);
                    m.set(r, k, s * apk + c * ark);
                }
                for k in 0..n {
                    let qkp = q.get(k, p);
                    let qkr = q.get(k, r);
                    q.set(k, p, c * qkp - s * qkr);
                    q.set(k, r, s * qkp + c * qkr);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m.get(x, x).total_cmp(&m.get(y, y)).then(x.cmp(&y)));
    let values = order.iter().map(|&k| m.get(k, k)).collect();
    let mut vectors = DenseMatrix::zeros(n);
    for (t, &k) in order.iter().enumerate() {
        let col = q.column(k);
        let pivot = (0..n).fold(0, |best, i| if col[i].abs() > col[best].abs() { i } else { best });
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (i, c) in col.iter().enumerate() {
            vectors.set(i, t, sign * c);
        }
    }
    Ok(DenseEigen { values, vectors })
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, OracleError> {
    let n = a.n();
    guard(n)?;
    if b.len() != n {
        return Err(OracleError::DimensionMismatch { expected: n, got: b.len() });
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = a.max_abs();
    for col in 0..n {
        let piv = (col..n).fold(col, |best, i| if m.get(i, col).abs() > m.get(best, col).abs() { i } else { best });
        if m.get(piv, col).abs() <= f64::EPSILON * scale * n as f64 || scale == 0.0 {
            return Err(OracleError::Singular { column: col });
        }
        if piv != col {
            for j in 0..n {
                let t = m.get(col, j);
                m.set(col, j, m.get(piv, j));
                m.set(piv, j, t);
            }
            x.swap(col, piv);
        }
        let d = m.get(col, col);
        for i in col + 1..n {
            let f = m.get(i, col) / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m.set(i, j, m.get(i, j) - f * m.get(col, j));
            }
            x[i] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for (j, xj) in x.iter().enumerate().skip(col + 1) {
            s -= m.get(col, j) * xj;
        }
        x[col] = s / m.get(col, col);
    }
    Ok(x)
}
