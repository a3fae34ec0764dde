use lapsira::graph::{connected_components, laplacian};
use lapsira::inner::{pcg, Preconditioner};
use lapsira::linalg::{norm2, LinearOperator};
use lapsira::ops::{choose_delta, enlarge_solution, restrict, DeflationSet, ShiftedDeflatedOperator, TrimContext};
use lapsira::sira::{isira_solve_observed, Event, SiraConfig};
use lapsira::{fixtures, LaplacianMatrix};
use lapsira_oracle::{deflated_dense, dense_eigh, dense_solve, to_dense, trimmed_dense, DenseMatrix, DenseSymmetric};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_symmetric(n: usize, seed: u64) -> DenseSymmetric {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseSymmetric::from_lower(n, |i, j| vals[i * n + j])
}

fn unit_orth_ones(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = r.iter().sum::<f64>() / n as f64;
    r.iter_mut().for_each(|x| *x -= mean);
    let s = norm2(&r);
    r.iter_mut().for_each(|x| *x /= s);
    r
}

/// Up to `c` oracle eigenpairs for positive eigenvalues, chosen at random.
fn oracle_deflation(l: &LaplacianMatrix, c: usize, rng: &mut ChaCha8Rng) -> DeflationSet {
    let eig = dense_eigh(&to_dense(l)).unwrap();
    let n = l.n();
    let mut idx: Vec<usize> = (1..n).collect();
    let c = c.min(n - 2);
    for k in 0..c {
        let j = rng.random_range(k..idx.len());
        idx.swap(k, j);
    }
    let pairs = idx[..c].iter().map(|&k| (eig.values[k], eig.vectors.column(k)));
    DeflationSet::with_pairs(choose_delta(l).unwrap(), pairs).unwrap()
}

/// Dense `L_hat - sigma I + (sigma / n) 1 1^T + delta V_hat V_hat^T`.
fn dense_trimmed_operator(l: &LaplacianMatrix, trim: &TrimContext, sigma: f64, defl: &DeflationSet) -> DenseSymmetric {
    let n = l.n();
    let mut a = trimmed_dense(l, trim).shifted(-sigma);
    a.add_outer(sigma / n as f64, &vec![1.0; n - 1]);
    for v in defl.vectors() {
        a.add_outer(defl.delta(), &restrict(v, trim).unwrap());
    }
    a
}

fn residual(a: &DenseSymmetric, x: &[f64], b: &[f64]) -> f64 {
    a.matvec(x).iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn jacobi_reconstructs_and_is_orthogonal(n in 1usize..60, seed in any::<u64>()) {
        let a = random_symmetric(n, seed);
        let e = dense_eigh(&a).unwrap();
        let lam = DenseMatrix::from_fn(n, |i, j| if i == j { e.values[i] } else { 0.0 });
        let q = &e.vectors;
        let rebuilt = q.mul(&lam).mul(&q.transpose());
        prop_assert!(rebuilt.sub(a.as_matrix()).frobenius() <= 1e-9 * a.frobenius().max(1e-300));
        let qtq = q.transpose().mul(q);
        prop_assert!(qtq.sub(&DenseMatrix::identity(n)).max_abs() <= 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn lu_solve_residual_is_small(n in 1usize..60, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DenseMatrix::from_fn(n, |i, j| rng_entry(seed, i, j) + if i == j { n as f64 } else { 0.0 });
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = dense_solve(&a, &b).unwrap();
        let r: f64 = a.matvec(&x).iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        prop_assert!(r <= 1e-10 * a.frobenius() * norm2(&x));
    }

    #[test]
    fn kernel_dimension_counts_components(n in 2usize..=12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = fixtures::gnp(n, 0.25, &mut rng);
        let l = laplacian(&g);
        let e = dense_eigh(&to_dense(&l)).unwrap();
        let zeros = e.values.iter().filter(|v| v.abs() < 1e-9).count();
        prop_assert!(e.values[0].abs() < 1e-9);
        prop_assert_eq!(zeros, connected_components(&g).count());
    }

    #[test]
    fn enlarged_exact_solution_solves_laplacian_system(n in 3usize..40, seed in any::<u64>()) {
        let l = laplacian(&fixtures::random_connected(n, seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let r = unit_orth_ones(n, &mut rng);
        for i in 0..n {
            let trim = TrimContext::new(i, n).unwrap();
            let lhat = trimmed_dense(&l, &trim);
            let zh = dense_solve(lhat.as_matrix(), &restrict(&r, &trim).unwrap()).unwrap();
            let z = enlarge_solution(&zh, &trim).unwrap();
            prop_assert!(residual(&to_dense(&l), &z, &r) <= 1e-10);
            prop_assert!(z.iter().sum::<f64>().abs() <= 1e-10 * norm2(&z) * n as f64);
        }
    }

    #[test]
    fn shifted_deflated_trimming_solves_full_system(n in 4usize..=12, seed in any::<u64>(), c in 0usize..4) {
        let l = laplacian(&fixtures::random_connected(n, seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let defl = oracle_deflation(&l, c, &mut rng);
        let full = deflated_dense(&l, &defl);
        let r = unit_orth_ones(n, &mut rng);
        for i in 0..n {
            let trim = TrimContext::new(i, n).unwrap();
            let lam_min = dense_eigh(&trimmed_dense(&l, &trim)).unwrap().values[0];
            let sigma = rng.random_range(0.0..0.5) * lam_min;
            let a = dense_trimmed_operator(&l, &trim, sigma, &defl);
            let zh = dense_solve(a.as_matrix(), &restrict(&r, &trim).unwrap()).unwrap();
            let z = enlarge_solution(&zh, &trim).unwrap();
            prop_assert!(residual(&full.shifted(-sigma), &z, &r) <= 1e-9 * norm2(&r));
        }
    }

    #[test]
    fn matrix_free_operator_matches_dense_assembly(n in 3usize..50, seed in any::<u64>(), c in 0usize..4) {
        let l = laplacian(&fixtures::random_connected(n, seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let defl = if n <= 40 { oracle_deflation(&l, c, &mut rng) } else { DeflationSet::new(choose_delta(&l).unwrap()).unwrap() };
        let trim = TrimContext::new(rng.random_range(0..n), n).unwrap();
        let sigma = rng.random_range(0.0..1.0);
        let op = ShiftedDeflatedOperator::new(&l, trim, sigma, &defl, true).unwrap();
        let dense = dense_trimmed_operator(&l, &trim, sigma, &defl);
        let mut y = vec![0.0; n - 1];
        for k in 0..n - 1 {
            let e: Vec<f64> = (0..n - 1).map(|j| if j == k { 1.0 } else { 0.0 }).collect();
            op.apply(&e, &mut y);
            let col = dense.as_matrix().column(k);
            let diff = y.iter().zip(&col).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(diff <= 1e-12 * norm2(&col).max(1.0));
        }
    }

    #[test]
    fn ritz_values_never_undercut_the_deflated_spectrum(n in 8usize..30, seed in any::<u64>()) {
        let l = laplacian(&fixtures::random_connected(n, seed));
        let mut violation = 0.0_f64;
        let res = isira_solve_observed(&l, &SiraConfig::new(4), &mut |view| {
            if view.event != Event::Extracted {
                return;
            }
            let spectrum = dense_eigh(&deflated_dense(&l, view.deflation)).unwrap().values;
            // spectrum[0] is the kernel
            violation = violation.max(spectrum[1] - 1e-8 - view.theta1);
        });
        prop_assert!(res.is_ok());
        prop_assert!(violation <= 0.0, "theta1 undercut the spectrum by {violation:e}");
    }
}

fn rng_entry(seed: u64, i: usize, j: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((i * 7919 + j) as u64));
    rng.random_range(-1.0..1.0)
}

#[test]
fn large_symmetric_matrix_reconstructs() {
    let a = random_symmetric(100, 42);
    let e = dense_eigh(&a).unwrap();
    let lam = DenseMatrix::from_fn(100, |i, j| if i == j { e.values[i] } else { 0.0 });
    let rebuilt = e.vectors.mul(&lam).mul(&e.vectors.transpose());
    assert!(rebuilt.sub(a.as_matrix()).frobenius() <= 1e-9 * a.frobenius());
    assert!(e.vectors.transpose().mul(&e.vectors).sub(&DenseMatrix::identity(100)).max_abs() <= 1e-10);
}

#[test]
fn trimmed_path_system_matches_cg() {
    let l = laplacian(&fixtures::path(3));
    let trim = TrimContext::new(1, 3).unwrap();
    let defl = DeflationSet::new(4.0).unwrap();
    let op = ShiftedDeflatedOperator::new(&l, trim, 0.0, &defl, true).unwrap();
    let b = restrict(&[1.0, 0.0, -1.0], &trim).unwrap();
    let (x, rep) = pcg(&op, &b, &Preconditioner::Identity, 1e-12, 10);
    assert!(rep.converged);
    let exact = dense_solve(trimmed_dense(&l, &trim).as_matrix(), &b).unwrap();
    for (a, e) in x.iter().zip(&exact) {
        assert!((a - e).abs() <= 1e-8);
    }
}
