//! Inexact solves of the trimmed, shifted, deflated systems.
//!
//! The trimmed matrix is SPD for `sigma = 0` and stays SPD while `sigma` is
//! below the smallest eigenvalue of the deflated operator; past that point the
//! system is symmetric indefinite and MINRES takes over from CG.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::LaplacianMatrix;
use crate::linalg::{axpy, dot, norm2, project_out_ones, record_dense_dim, sum, LinearOperator};
use crate::ops::{
    default_include_rank1, enlarge_solution, restrict, DeflationSet, OpsError, ShiftedDeflatedOperator, TrimContext,
};

/// Fraction of `min(diag(L_hat))` a Jacobi shift may reach.
pub const SIGMA_SAFETY: f64 = 0.95;

#[derive(Debug, Error, PartialEq)]
pub enum InnerError {
    #[error(transparent)]
    Ops(#[from] OpsError),

    #[error("diagonal entry {index} of the shifted matrix is {value}; lower the shift")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("Sherman-Morrison-Woodbury core is not positive definite (degenerate deflation basis)")]
    SingularCore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Cg,
    Minres,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecondKind {
    None,
    Jacobi,
    /// Jacobi plus the deflation term, inverted by Sherman-Morrison-Woodbury.
    Deflated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerOptions {
    /// Relative residual target `||r - A z|| / ||r||`.
    pub tol: f64,
    pub maxit: usize,
    pub solver: SolverKind,
    pub precond: PrecondKind,
    /// Keep the `(sigma/n) 1 1^T` term. `None` decides from `n`.
    pub include_rank1: Option<bool>,
    /// Retry with MINRES when CG detects indefiniteness.
    pub minres_fallback: bool,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-2,
            maxit: 500,
            solver: SolverKind::Cg,
            precond: PrecondKind::Deflated,
            include_rank1: None,
            minres_fallback: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    pub breakdown: Option<String>,
    pub solver: SolverKind,
    /// Size of the `1_n` component removed from the right-hand side.
    pub rhs_projection: f64,
}

impl SolveReport {
    fn trivial(solver: SolverKind) -> Self {
        Self { iterations: 0, relative_residual: 0.0, converged: true, breakdown: None, solver, rhs_projection: 0.0 }
    }
}

/// Symmetric positive definite preconditioner, applied as `y = M^{-1} x`.
#[derive(Debug, Clone)]
pub enum Preconditioner {
    Identity,
    Jacobi { inv_diag: Vec<f64> },
    Deflated(Box<DeflatedPreconditioner>),
}

impl Preconditioner {
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Preconditioner::Identity => y.copy_from_slice(x),
            Preconditioner::Jacobi { inv_diag } => {
                for ((yi, xi), di) in y.iter_mut().zip(x).zip(inv_diag) {
                    *yi = xi * di;
                }
            }
            Preconditioner::Deflated(d) => d.apply(x, y),
        }
    }
}

/// `(M + delta V V^T)^{-1}` through the Sherman-Morrison-Woodbury identity
/// `(I - delta M^{-1} V (I_c + delta V^T M^{-1} V)^{-1} V^T) M^{-1}`.
/// The `c x c` core is factorized once at construction.
#[derive(Debug, Clone)]
pub struct DeflatedPreconditioner {
    base: Preconditioner,
    vhat: Vec<Vec<f64>>,
    delta: f64,
    base_inv_v: Vec<Vec<f64>>,
    core: Cholesky<f64, Dyn>,
}

impl DeflatedPreconditioner {
    pub fn new(base: Preconditioner, vhat: Vec<Vec<f64>>, delta: f64) -> Result<Self, InnerError> {
        let c = vhat.len();
        let base_inv_v: Vec<Vec<f64>> = vhat
            .iter()
            .map(|v| {
                let mut y = vec![0.0; v.len()];
                base.apply(v, &mut y);
                y
            })
            .collect();
        let mut core = DMatrix::<f64>::identity(c, c);
        for a in 0..c {
            for b in 0..=a {
                let s = delta * 0.5 * (dot(&vhat[a], &base_inv_v[b]) + dot(&vhat[b], &base_inv_v[a]));
                core[(a, b)] += s;
                if a != b {
                    core[(b, a)] += s;
                }
            }
        }
        record_dense_dim(c);
        let core = Cholesky::new(core).ok_or(InnerError::SingularCore)?;
        Ok(Self { base, vhat, delta, base_inv_v, core })
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.base.apply(x, y);
        if self.vhat.is_empty() {
            return;
        }
        let t = DVector::from_iterator(self.vhat.len(), self.vhat.iter().map(|v| dot(v, y)));
        let s = self.core.solve(&t);
        for (k, col) in self.base_inv_v.iter().enumerate() {
            axpy(-self.delta * s[k], col, y);
        }
    }
}

/// Stand-alone SMW application for an arbitrary base preconditioner.
pub fn smw_apply(base: &Preconditioner, vhat: &[Vec<f64>], delta: f64, x: &[f64]) -> Result<Vec<f64>, InnerError> {
    let p = DeflatedPreconditioner::new(base.clone(), vhat.to_vec(), delta)?;
    let mut y = vec![0.0; x.len()];
    p.apply(x, &mut y);
    Ok(y)
}

/// `min(diag(L_hat))` for the given trim.
pub fn trimmed_min_diag(l: &LaplacianMatrix, trim: &TrimContext) -> f64 {
    l.diag().iter().enumerate().filter(|&(j, _)| j != trim.index).map(|(_, &d)| d).fold(f64::INFINITY, f64::min)
}

/// Reciprocal diagonal of `L_hat - sigma I`.
pub fn build_jacobi(l: &LaplacianMatrix, trim: &TrimContext, sigma: f64) -> Result<Preconditioner, InnerError> {
    let mut inv_diag = Vec::with_capacity(trim.n - 1);
    for (j, &d) in l.diag().iter().enumerate() {
        if j == trim.index {
            continue;
        }
        let v = d - sigma;
        if v <= 0.0 {
            return Err(InnerError::NonPositiveDiagonal { index: j, value: v });
        }
        inv_diag.push(1.0 / v);
    }
    Ok(Preconditioner::Jacobi { inv_diag })
}

/// Preconditioned conjugate gradients from a zero initial guess.
///
/// Stops when the true relative residual is at most `tol`. A non-positive
/// curvature `p^T A p <= 0` aborts with a breakdown report and the last iterate.
pub fn pcg<A: LinearOperator + ?Sized>(
    a: &A,
    rhs: &[f64],
    m: &Preconditioner,
    tol: f64,
    maxit: usize,
) -> (Vec<f64>, SolveReport) {
    let n = rhs.len();
    let mut report = SolveReport::trivial(SolverKind::Cg);
    let mut x = vec![0.0; n];
    let bnorm = norm2(rhs);
    if bnorm == 0.0 {
        return (x, report);
    }
    let mut r = rhs.to_vec();
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    report.converged = false;

    for it in 1..=maxit {
        report.iterations = it;
        if rz <= 0.0 {
            report.breakdown = Some(format!("preconditioned residual norm {rz:e} is not positive"));
            break;
        }
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            report.breakdown = Some(format!("non-positive curvature p^T A p = {pq:e}"));
            break;
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        rel = norm2(&r) / bnorm;
        if rel <= tol {
            // recompute the true residual before trusting the recurrence
            a.apply(&x, &mut q);
            for ((ri, bi), qi) in r.iter_mut().zip(rhs).zip(&q) {
                *ri = bi - qi;
            }
            rel = norm2(&r) / bnorm;
            if rel <= tol {
                report.converged = true;
                break;
            }
            m.apply(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    if !report.converged {
        a.apply(&x, &mut q);
        let res: Vec<f64> = rhs.iter().zip(&q).map(|(b, v)| b - v).collect();
        rel = norm2(&res) / bnorm;
    }
    report.relative_residual = rel;
    (x, report)
}

/// Preconditioned MINRES (Paige-Saunders) from a zero initial guess.
///
/// `a` may be indefinite; `m` must be SPD. Convergence is declared on the true
/// 2-norm relative residual.
pub fn minres<A: LinearOperator + ?Sized>(
    a: &A,
    rhs: &[f64],
    m: &Preconditioner,
    tol: f64,
    maxit: usize,
) -> (Vec<f64>, SolveReport) {
    let n = rhs.len();
    let mut report = SolveReport::trivial(SolverKind::Minres);
    let mut x = vec![0.0; n];
    let bnorm = norm2(rhs);
    if bnorm == 0.0 {
        return (x, report);
    }
    report.converged = false;

    let true_rel = |x: &[f64], buf: &mut [f64]| -> f64 {
        a.apply(x, buf);
        let s: f64 = rhs.iter().zip(buf.iter()).map(|(b, v)| (b - v) * (b - v)).sum();
        s.sqrt() / bnorm
    };

    let mut r1 = rhs.to_vec();
    let mut y = vec![0.0; n];
    m.apply(&r1, &mut y);
    let beta1_sq = dot(&r1, &y);
    if beta1_sq <= 0.0 {
        report.breakdown = Some("preconditioner is not positive definite".into());
        report.relative_residual = 1.0;
        return (x, report);
    }
    let beta1 = beta1_sq.sqrt();
    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut buf = vec![0.0; n];

    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0_f64, 0.0_f64);
    let mut rel = 1.0;

    for it in 1..=maxit {
        report.iterations = it;
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        a.apply(&v, &mut y);
        if it >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        m.apply(&r2, &mut y);
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        if beta_sq < 0.0 {
            report.breakdown = Some("preconditioner is not positive definite".into());
            break;
        }
        beta = beta_sq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for k in 0..n {
            w[k] = (v[k] - oldeps * w1[k] - delta * w2[k]) / gamma;
        }
        axpy(phi, &w, &mut x);

        if phibar / beta1 <= tol || beta == 0.0 {
            rel = true_rel(&x, &mut buf);
            if rel <= tol {
                report.converged = true;
                break;
            }
            if beta == 0.0 {
                break;
            }
        }
    }
    if !report.converged {
        rel = true_rel(&x, &mut buf);
    }
    report.relative_residual = rel;
    (x, report)
}

/// Operator, preconditioner and solver choice for one `(sigma, V)` pair.
/// Build once, solve many right-hand sides.
pub struct InnerSystem<'a> {
    op: ShiftedDeflatedOperator<'a>,
    precond: Preconditioner,
    solver: SolverKind,
    opts: InnerOptions,
}

impl<'a> InnerSystem<'a> {
    pub fn new(
        l: &'a LaplacianMatrix,
        defl: &DeflationSet,
        sigma: f64,
        trim: TrimContext,
        opts: &InnerOptions,
    ) -> Result<Self, InnerError> {
        let include_rank1 = opts.include_rank1.unwrap_or_else(|| default_include_rank1(l.n()));
        let op = ShiftedDeflatedOperator::new(l, trim, sigma, defl, include_rank1)?;
        // Jacobi needs a positive shifted diagonal; beyond the clamp the
        // operator itself may be indefinite, so MINRES is preferred.
        let clamp = SIGMA_SAFETY * trimmed_min_diag(l, &trim);
        let mut solver = opts.solver;
        let precond_sigma = if sigma > clamp {
            solver = SolverKind::Minres;
            clamp.max(0.0)
        } else {
            sigma
        };
        let precond = match opts.precond {
            PrecondKind::None => Preconditioner::Identity,
            PrecondKind::Jacobi => build_jacobi(l, &trim, precond_sigma)?,
            PrecondKind::Deflated => {
                let base = build_jacobi(l, &trim, precond_sigma)?;
                if defl.is_empty() {
                    base
                } else {
                    Preconditioner::Deflated(Box::new(DeflatedPreconditioner::new(
                        base,
                        op.vhat().to_vec(),
                        defl.delta(),
                    )?))
                }
            }
        };
        Ok(Self { op, precond, solver, opts: *opts })
    }

    pub fn operator(&self) -> &ShiftedDeflatedOperator<'a> {
        &self.op
    }

    pub fn preconditioner(&self) -> &Preconditioner {
        &self.precond
    }

    pub fn solver(&self) -> SolverKind {
        self.solver
    }

    /// Solves `(L + delta V V^T - sigma I) z = r` with `1^T z = 0` through
    /// the trimmed system.
    pub fn solve(&self, r: &[f64]) -> Result<(Vec<f64>, SolveReport), InnerError> {
        let trim = self.op.trim();
        if r.len() != trim.n {
            return Err(OpsError::LengthMismatch { expected: trim.n, got: r.len() }.into());
        }
        let rnorm = norm2(r);
        if rnorm == 0.0 {
            return Ok((vec![0.0; trim.n], SolveReport::trivial(self.solver)));
        }
        // consistency needs 1^T r = 0; project rounding drift away
        let mut rhs_projection = 0.0;
        let ones_component = sum(r) / (trim.n as f64).sqrt();
        let r_owned;
        let r = if ones_component.abs() > 1e-8 * rnorm {
            let mut p = r.to_vec();
            project_out_ones(&mut p);
            rhs_projection = ones_component.abs();
            r_owned = p;
            &r_owned[..]
        } else {
            r
        };

        let r_hat = restrict(r, &trim)?;
        let run = |kind: SolverKind| match kind {
            SolverKind::Cg => pcg(&self.op, &r_hat, &self.precond, self.opts.tol, self.opts.maxit),
            SolverKind::Minres => minres(&self.op, &r_hat, &self.precond, self.opts.tol, self.opts.maxit),
        };
        let (mut z_hat, mut report) = run(self.solver);
        if report.breakdown.is_some() && self.solver == SolverKind::Cg && self.opts.minres_fallback {
            let first = report.iterations;
            let (z2, mut rep2) = run(SolverKind::Minres);
            rep2.iterations += first;
            z_hat = z2;
            report = rep2;
        }
        report.rhs_projection = rhs_projection;
        let z = enlarge_solution(&z_hat, &trim)?;
        Ok((z, report))
    }
}

/// One-shot constrained solve; see [`InnerSystem::solve`].
pub fn solve_constrained(
    l: &LaplacianMatrix,
    defl: &DeflationSet,
    sigma: f64,
    trim: TrimContext,
    r: &[f64],
    opts: &InnerOptions,
) -> Result<(Vec<f64>, SolveReport), InnerError> {
    InnerSystem::new(l, defl, sigma, trim, opts)?.solve(r)
}
