//! The outer eigensolver: residual Arnoldi with trimming, deflation,
//! restart, purging and a moving shift.
//!
//! One sweep per wanted eigenpair. Inside a sweep the search space `U`
//! (orthonormal, orthogonal to `1_n` and to every converged vector) is
//! expanded by inexact solutions of the shifted, deflated, trimmed system
//! with the current Ritz residual as right-hand side. A converged pair is
//! deflated to `lambda + delta`, its direction is purged from `U`, and the
//! shift moves just below the next Ritz value.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::LaplacianMatrix;
use crate::inner::{trimmed_min_diag, InnerError, InnerOptions, InnerSystem, SIGMA_SAFETY};
use crate::linalg::{axpy, combine, dot, norm2, record_dense_dim, scale, sum};
use crate::ops::{choose_delta, deflated_matvec, select_trim_index, DeflationSet, OpsError, TrimPolicy};

#[derive(Debug, Error)]
pub enum SiraError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Ops(#[from] OpsError),

    #[error("inner solve failed in sweep {sweep}: {source}")]
    Inner {
        sweep: usize,
        #[source]
        source: InnerError,
    },

    #[error("search space stagnated: new direction lies in the current subspace")]
    ExpansionBreakdown,

    #[error("could not draw a random start vector outside the current subspace")]
    DegenerateStart,

    #[error("no convergence within {iterations} outer iterations; {converged} of {wanted} pairs found")]
    NonConvergence { converged: usize, wanted: usize, iterations: usize, partial: Box<EigenResult> },

    #[error("validation failed: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaPolicy {
    /// `2 * max(diag(L))`
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiraConfig {
    /// Number of wanted eigenpairs.
    pub d: usize,
    /// Maximum search space dimension.
    pub m: usize,
    /// Dimension kept on restart.
    pub q: usize,
    /// Initial dimension.
    pub k0: usize,
    /// Outer tolerance on `||L v - lambda v||_2`.
    pub eps: f64,
    pub inner: InnerOptions,
    pub trim: TrimPolicy,
    pub delta: DeltaPolicy,
    pub sigma0: f64,
    pub seed: u64,
    /// Outer iteration cap; `None` means `100 * d * m`.
    pub max_outer: Option<usize>,
    /// Shift-invert steps applied to a fresh random vector that is added to
    /// the search space after every purge. A Krylov space started from a
    /// single vector holds one direction per eigenspace, so without this a
    /// repeated eigenvalue can be skipped when inner solves are accurate.
    pub probe_steps: usize,
    /// Check subspace and residual invariants every iteration.
    pub validate: bool,
}

pub const DEFAULT_SEED: u64 = 20170301;

impl SiraConfig {
    pub fn new(d: usize) -> Self {
        let q = (d + 5).max(15);
        let m = if q < 30 { 30 } else { q + 15 };
        Self {
            d,
            m,
            q,
            k0: 1,
            eps: 1e-8,
            inner: InnerOptions::default(),
            trim: TrimPolicy::MaxDegree,
            delta: DeltaPolicy::Auto,
            sigma0: 0.0,
            seed: DEFAULT_SEED,
            max_outer: None,
            probe_steps: 2,
            validate: false,
        }
    }

    pub fn validate(&self) -> Result<(), SiraError> {
        let bad = |m: String| Err(SiraError::InvalidConfig(m));
        if self.d == 0 {
            return bad("number of eigenpairs must be at least 1".into());
        }
        if !(self.d <= self.q && self.q < self.m) {
            return bad(format!("need d <= q < m, got d={} q={} m={}", self.d, self.q, self.m));
        }
        if self.k0 == 0 || self.k0 >= self.m {
            return bad(format!("need 1 <= k0 < m, got k0={}", self.k0));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return bad(format!("tolerance must be positive, got {}", self.eps));
        }
        if !(self.inner.tol > 0.0 && self.inner.tol < 1.0) {
            return bad(format!("inner tolerance must lie in (0, 1), got {}", self.inner.tol));
        }
        if self.inner.maxit == 0 {
            return bad("inner iteration limit must be at least 1".into());
        }
        if !(self.sigma0 >= 0.0 && self.sigma0.is_finite()) {
            return bad(format!("initial shift must be nonnegative, got {}", self.sigma0));
        }
        if let DeltaPolicy::Fixed(v) = self.delta {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("deflation weight must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn outer_cap(&self) -> usize {
        self.max_outer.unwrap_or(100 * self.d * self.m)
    }
}

/// Orthonormal basis `U`, its image `W = (L + delta V V^T) U` and the
/// Rayleigh quotient `H = U^T W`.
#[derive(Debug, Clone)]
pub struct SearchSubspace {
    u: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    h: DMatrix<f64>,
}

impl SearchSubspace {
    pub fn k(&self) -> usize {
        self.u.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.u
    }

    pub fn image(&self) -> &[Vec<f64>] {
        &self.w
    }

    pub fn rayleigh_quotient(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Builds a subspace from vectors that are already orthonormal and
    /// orthogonal to `1_n` and `V`.
    pub fn from_orthonormal(l: &LaplacianMatrix, defl: &DeflationSet, u: Vec<Vec<f64>>) -> Self {
        let mut ss = Self { u, w: Vec::new(), h: DMatrix::zeros(0, 0) };
        ss.refresh(l, defl);
        ss
    }

    /// Recomputes `W` and `H` from `U`.
    pub fn refresh(&mut self, l: &LaplacianMatrix, defl: &DeflationSet) {
        self.w = self.u.iter().map(|u| deflated_matvec(l, defl, u)).collect();
        let k = self.k();
        let mut h = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in 0..=a {
                let v = 0.5 * (dot(&self.u[a], &self.w[b]) + dot(&self.u[b], &self.w[a]));
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        self.h = h;
    }

    /// `max |U^T U - I|`
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (a, ua) in self.u.iter().enumerate() {
            for (b, ub) in self.u.iter().enumerate().skip(a) {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot(ua, ub) - target).abs());
            }
        }
        worst
    }

    fn keep_ritz_columns(&mut self, rd: &RitzDecomposition, cols: std::ops::Range<usize>) {
        let n = self.u.first().map_or(0, Vec::len);
        let mut u = Vec::with_capacity(cols.len());
        let mut w = Vec::with_capacity(cols.len());
        for c in cols.clone() {
            let s: Vec<f64> = rd.s.column(c).iter().copied().collect();
            u.push(combine(&self.u, &s, n));
            w.push(combine(&self.w, &s, n));
        }
        self.u = u;
        self.w = w;
        self.h = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(cols.len(), rd.thetas[cols].iter().copied()));
    }
}

/// Eigen-decomposition of the Rayleigh quotient, ascending.
#[derive(Debug, Clone)]
pub struct RitzDecomposition {
    pub thetas: Vec<f64>,
    /// Column `t` is the unit eigenvector for `thetas[t]`.
    pub s: DMatrix<f64>,
}

/// Full symmetric eigendecomposition of a small `k x k` matrix. Columns are
/// signed so that their largest-magnitude entry is positive.
pub fn ritz_decompose(h: &DMatrix<f64>) -> RitzDecomposition {
    let k = h.nrows();
    if k == 0 {
        return RitzDecomposition { thetas: Vec::new(), s: DMatrix::zeros(0, 0) };
    }
    record_dense_dim(k);
    let sym = (h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let thetas = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut s = DMatrix::zeros(k, k);
    for (t, &i) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(i);
        let mut pivot = 0;
        for r in 0..k {
            if col[r].abs() > col[pivot].abs() {
                pivot = r;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..k {
            s[(r, t)] = sign * col[r];
        }
    }
    RitzDecomposition { thetas, s }
}

/// Ritz residual of the smallest Ritz pair.
#[derive(Debug, Clone)]
pub struct RitzResidual {
    pub r: Vec<f64>,
    pub theta: f64,
    pub y: Vec<f64>,
}

/// `r = W s_1 - theta_1 U s_1`, together with `theta_1` and `y_1 = U s_1`.
pub fn compute_residual(ss: &SearchSubspace, rd: &RitzDecomposition) -> RitzResidual {
    let n = ss.u.first().map_or(0, Vec::len);
    let s1: Vec<f64> = rd.s.column(0).iter().copied().collect();
    let theta = rd.thetas[0];
    let y = combine(&ss.u, &s1, n);
    let mut r = combine(&ss.w, &s1, n);
    axpy(-theta, &y, &mut r);
    RitzResidual { r, theta, y }
}

/// Orthogonalizes `z` against `1_n`, `V` and `U` (two modified Gram-Schmidt
/// passes), normalizes it and appends it together with its image.
pub fn expand(ss: &mut SearchSubspace, z: Vec<f64>, defl: &DeflationSet, l: &LaplacianMatrix) -> Result<(), SiraError> {
    let u = orthonormalize_against(z, &ss.u, defl)?;
    let w = deflated_matvec(l, defl, &u);
    let k = ss.k();
    let mut h = DMatrix::zeros(k + 1, k + 1);
    h.view_mut((0, 0), (k, k)).copy_from(&ss.h);
    for a in 0..k {
        let v = 0.5 * (dot(&ss.u[a], &w) + dot(&u, &ss.w[a]));
        h[(a, k)] = v;
        h[(k, a)] = v;
    }
    h[(k, k)] = dot(&u, &w);
    ss.u.push(u);
    ss.w.push(w);
    ss.h = h;
    Ok(())
}

fn orthonormalize_against(mut z: Vec<f64>, basis: &[Vec<f64>], defl: &DeflationSet) -> Result<Vec<f64>, SiraError> {
    let n = z.len();
    let before = norm2(&z);
    if before == 0.0 || !before.is_finite() {
        return Err(SiraError::ExpansionBreakdown);
    }
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    for _pass in 0..2 {
        let c = sum(&z) * inv_sqrt_n;
        for zi in z.iter_mut() {
            *zi -= c * inv_sqrt_n;
        }
        for v in defl.vectors().iter().chain(basis) {
            let c = dot(v, &z);
            axpy(-c, v, &mut z);
        }
    }
    let after = norm2(&z);
    if after < 1e-12 * before {
        return Err(SiraError::ExpansionBreakdown);
    }
    scale(1.0 / after, &mut z);
    Ok(z)
}

/// Keeps the `q` smallest Ritz directions: `U <- U S(:, 1:q)`,
/// `W <- W S(:, 1:q)`, `H <- diag(theta_1..theta_q)`.
pub fn restart(ss: &mut SearchSubspace, rd: &RitzDecomposition, q: usize) {
    let q = q.min(ss.k());
    ss.keep_ritz_columns(rd, 0..q);
}

/// Drops the smallest Ritz direction: `U <- U S(:, 2:k)`, and likewise for
/// `W` and `H`. A one-dimensional subspace becomes empty.
pub fn purge(ss: &mut SearchSubspace, rd: &RitzDecomposition) {
    let k = ss.k();
    ss.keep_ritz_columns(rd, 1.min(k)..k);
}

/// `min(0.95 theta_2, 0.95 min diag(L_hat))`, floored at zero. Without a
/// second Ritz value the shift is left unchanged.
pub fn update_shift(rd: &RitzDecomposition, trimmed_diag_min: f64, current: f64) -> f64 {
    match rd.thetas.get(1) {
        Some(&theta2) => (SIGMA_SAFETY * theta2).min(SIGMA_SAFETY * trimmed_diag_min).max(0.0),
        None => current,
    }
}

fn random_direction(
    n: usize,
    basis: &[Vec<f64>],
    defl: &DeflationSet,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, SiraError> {
    for _ in 0..16 {
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        match orthonormalize_against(z, basis, defl) {
            Ok(u) => return Ok(u),
            Err(SiraError::ExpansionBreakdown) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(SiraError::DegenerateStart)
}

fn draw_subspace(
    l: &LaplacianMatrix,
    defl: &DeflationSet,
    k0: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SearchSubspace, SiraError> {
    let mut u: Vec<Vec<f64>> = Vec::with_capacity(k0);
    for _ in 0..k0 {
        let v = random_direction(l.n(), &u, defl, rng)?;
        u.push(v);
    }
    Ok(SearchSubspace::from_orthonormal(l, defl, u))
}

/// `k0` seeded Gaussian vectors, orthogonalized against `1_n` and `V` and
/// orthonormalized.
pub fn init_subspace(
    l: &LaplacianMatrix,
    defl: &DeflationSet,
    k0: usize,
    seed: u64,
) -> Result<SearchSubspace, SiraError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_subspace(l, defl, k0, &mut rng)
}

/// One outer iteration, as written to histories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based index of the eigenpair being sought.
    pub sweep: usize,
    /// Global outer iteration count.
    pub iter: usize,
    /// Subspace dimension at extraction.
    pub k: usize,
    pub theta1: f64,
    pub resnorm: f64,
    pub sigma: f64,
    /// Inner solver iterations spent expanding after this extraction.
    pub inner_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Ascending.
    pub lambdas: Vec<f64>,
    /// `vectors[j]` belongs to `lambdas[j]`.
    pub vectors: Vec<Vec<f64>>,
    pub history: Vec<IterationRecord>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub trim_index: usize,
    pub delta: f64,
}

impl EigenResult {
    fn sort_ascending(&mut self) {
        let mut idx: Vec<usize> = (0..self.lambdas.len()).collect();
        idx.sort_by(|&a, &b| self.lambdas[a].total_cmp(&self.lambdas[b]).then(a.cmp(&b)));
        self.lambdas = idx.iter().map(|&i| self.lambdas[i]).collect();
        self.vectors = idx.iter().map(|&i| self.vectors[i].clone()).collect();
    }
}

/// What an observer sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// After Ritz extraction, before expansion.
    Extracted,
    /// After a converged direction was deflated and purged.
    Purged,
    Restarted,
}

pub struct IterationView<'a> {
    pub event: Event,
    pub sweep: usize,
    pub theta1: f64,
    pub resnorm: f64,
    pub sigma: f64,
    pub subspace: &'a SearchSubspace,
    pub deflation: &'a DeflationSet,
}

/// Computes the `cfg.d` smallest positive eigenpairs of a connected
/// Laplacian.
pub fn isira_solve(l: &LaplacianMatrix, cfg: &SiraConfig) -> Result<EigenResult, SiraError> {
    isira_solve_observed(l, cfg, &mut |_| {})
}

/// [`isira_solve`] with a callback invoked at every extraction, restart and
/// purge.
pub fn isira_solve_observed(
    l: &LaplacianMatrix,
    cfg: &SiraConfig,
    observer: &mut dyn FnMut(&IterationView<'_>),
) -> Result<EigenResult, SiraError> {
    cfg.validate()?;
    let n = l.n();
    if n < 2 || cfg.d > n - 1 {
        return Err(SiraError::InvalidConfig(format!(
            "a Laplacian of order {n} has at most {} positive eigenvalues, {} requested",
            n.saturating_sub(1),
            cfg.d
        )));
    }
    let trim = select_trim_index(l, cfg.trim)?;
    let delta = match cfg.delta {
        DeltaPolicy::Auto => choose_delta(l)?,
        DeltaPolicy::Fixed(v) => v,
    };
    let diag_min = trimmed_min_diag(l, &trim);
    let eps_scale = 64.0 * f64::EPSILON * (n as f64).sqrt() * (l.max_diag() + delta);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut defl = DeflationSet::new(delta)?;
    let mut ss = draw_subspace(l, &defl, cfg.k0.min(n - 1), &mut rng)?;
    let mut sigma = cfg.sigma0;
    let q = cfg.q.min(cfg.m - 1);
    let cap = cfg.outer_cap();

    let mut result = EigenResult {
        lambdas: Vec::new(),
        vectors: Vec::new(),
        history: Vec::new(),
        outer_iterations: 0,
        inner_iterations: 0,
        trim_index: trim.index,
        delta,
    };
    let inner_err = |sweep: usize| move |source: InnerError| SiraError::Inner { sweep, source };
    let mut system = InnerSystem::new(l, &defl, sigma, trim, &cfg.inner).map_err(inner_err(1))?;

    for sweep in 1..=cfg.d {
        let mut refreshed = false;
        let (rd, pair) = loop {
            if result.outer_iterations >= cap {
                result.sort_ascending();
                return Err(SiraError::NonConvergence {
                    converged: result.lambdas.len(),
                    wanted: cfg.d,
                    iterations: result.outer_iterations,
                    partial: Box::new(result),
                });
            }
            result.outer_iterations += 1;

            let rd = ritz_decompose(&ss.h);
            let res = compute_residual(&ss, &rd);
            let resnorm = norm2(&res.r);
            observer(&IterationView {
                event: Event::Extracted,
                sweep,
                theta1: res.theta,
                resnorm,
                sigma,
                subspace: &ss,
                deflation: &defl,
            });
            if cfg.validate {
                validate_state(&ss, &defl, &res.r, resnorm, eps_scale)?;
            }
            let mut record = IterationRecord {
                sweep,
                iter: result.outer_iterations,
                k: ss.k(),
                theta1: res.theta,
                resnorm,
                sigma,
                inner_iters: 0,
            };

            if resnorm < cfg.eps {
                // W is updated incrementally; confirm against L itself
                let mut ly = vec![0.0; n];
                l.matvec(&res.y, &mut ly);
                axpy(-res.theta, &res.y, &mut ly);
                if norm2(&ly) < cfg.eps {
                    result.history.push(record);
                    break (rd, res);
                }
                if !refreshed {
                    ss.refresh(l, &defl);
                    refreshed = true;
                    result.history.push(record);
                    continue;
                }
            }

            let mut rd = rd;
            if ss.k() >= cfg.m {
                restart(&mut ss, &rd, q);
                rd = ritz_decompose(&ss.h);
                observer(&IterationView {
                    event: Event::Restarted,
                    sweep,
                    theta1: res.theta,
                    resnorm,
                    sigma,
                    subspace: &ss,
                    deflation: &defl,
                });
            }
            let _ = rd;

            let (z, report) = system.solve(&res.r).map_err(inner_err(sweep))?;
            record.inner_iters = report.iterations;
            result.inner_iterations += report.iterations;
            result.history.push(record);

            match expand(&mut ss, z, &defl, l) {
                Ok(()) => refreshed = false,
                Err(SiraError::ExpansionBreakdown) => {
                    // the solve returned nothing new; fall back to a random
                    // direction unless the subspace already fills the space
                    ss.refresh(l, &defl);
                    if ss.k() + defl.len() + 1 < n {
                        let u = random_direction(n, &ss.u, &defl, &mut rng)?;
                        expand(&mut ss, u, &defl, l)?;
                    } else if refreshed {
                        return Err(SiraError::ExpansionBreakdown);
                    }
                    refreshed = true;
                }
                Err(e) => return Err(e),
            }
        };

        if pair.theta.is_nan() || pair.theta <= 0.0 {
            return Err(SiraError::Validation(format!(
                "converged Ritz value {} is not positive; is the graph connected?",
                pair.theta
            )));
        }
        result.lambdas.push(pair.theta);
        result.vectors.push(pair.y.clone());
        if sweep == cfg.d {
            break;
        }

        defl.push(pair.theta, pair.y)?;
        sigma = update_shift(&rd, diag_min, sigma);
        purge(&mut ss, &rd);
        if ss.k() == 0 {
            ss = draw_subspace(l, &defl, 1, &mut rng)?;
        }
        system = InnerSystem::new(l, &defl, sigma, trim, &cfg.inner).map_err(inner_err(sweep + 1))?;
        if cfg.probe_steps > 0 && ss.k() + defl.len() + 1 < n {
            let mut p = random_direction(n, &ss.u, &defl, &mut rng)?;
            for _ in 0..cfg.probe_steps {
                let (z, report) = system.solve(&p).map_err(inner_err(sweep + 1))?;
                result.inner_iterations += report.iterations;
                let zn = norm2(&z);
                if !(zn > 0.0 && zn.is_finite()) {
                    break;
                }
                p = z;
                scale(1.0 / zn, &mut p);
            }
            if ss.k() >= cfg.m {
                let rd = ritz_decompose(&ss.h);
                restart(&mut ss, &rd, q);
            }
            match expand(&mut ss, p, &defl, l) {
                Ok(()) | Err(SiraError::ExpansionBreakdown) => {}
                Err(e) => return Err(e),
            }
        }
        observer(&IterationView {
            event: Event::Purged,
            sweep,
            theta1: pair.theta,
            resnorm: 0.0,
            sigma,
            subspace: &ss,
            deflation: &defl,
        });
    }

    result.sort_ascending();
    Ok(result)
}

fn validate_state(
    ss: &SearchSubspace,
    defl: &DeflationSet,
    r: &[f64],
    resnorm: f64,
    eps_scale: f64,
) -> Result<(), SiraError> {
    let kernel = sum(r).abs();
    if kernel > 1e-10 * resnorm + eps_scale {
        return Err(SiraError::Validation(format!("residual has kernel component {kernel:e} (norm {resnorm:e})")));
    }
    let orth = ss.orthogonality_defect();
    if orth > 1e-8 {
        return Err(SiraError::Validation(format!("basis lost orthogonality: {orth:e}")));
    }
    let n = r.len() as f64;
    for u in ss.basis() {
        if sum(u).abs() > 1e-8 * n.sqrt() {
            return Err(SiraError::Validation("basis vector not orthogonal to 1_n".into()));
        }
        for v in defl.vectors() {
            if dot(u, v).abs() > 1e-8 {
                return Err(SiraError::Validation("basis vector not orthogonal to V".into()));
            }
        }
    }
    Ok(())
}
