//! Deterministic graph generators for tests, demos and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{build_graph, connected_components, EdgeList, Graph};

fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Graph {
    let el = EdgeList::new(n, pairs.into_iter().map(|(u, v)| (u, v, 1.0))).expect("generator produced an invalid edge");
    build_graph(&el)
}

/// Path `P_n`: `0 - 1 - ... - (n-1)`.
pub fn path(n: usize) -> Graph {
    from_pairs(n, (1..n).map(|i| (i - 1, i)))
}

/// Cycle `C_n`, `n >= 3`.
pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3, "cycle needs at least 3 vertices");
    from_pairs(n, (0..n).map(|i| (i, (i + 1) % n)))
}

/// Star on `n` vertices: center `0` joined to `n - 1` leaves.
pub fn star(n: usize) -> Graph {
    from_pairs(n, (1..n).map(|i| (0, i)))
}

/// Complete graph `K_n`.
pub fn complete(n: usize) -> Graph {
    from_pairs(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
}

/// `rows x cols` 4-neighbor grid, vertex `(r, c)` has id `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let mut pairs = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                pairs.push((v, v + 1));
            }
            if r + 1 < rows {
                pairs.push((v, v + cols));
            }
        }
    }
    from_pairs(rows * cols, pairs)
}

/// Sparse Erdos-Renyi graph with `round(n * avg_degree / 2)` uniformly drawn
/// vertex pairs (self loops and repeats are dropped, so the realized average
/// degree is marginally lower). May be disconnected.
pub fn erdos_renyi(n: usize, avg_degree: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = (n as f64 * avg_degree / 2.0).round() as usize;
    let pairs: Vec<(usize, usize)> = (0..m).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();
    from_pairs(n, pairs)
}

/// `G(n, p)` graph. May be disconnected.
pub fn gnp(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                pairs.push((i, j));
            }
        }
    }
    from_pairs(n, pairs)
}

/// Connected `G(n, p)` sample with `p = min(1, 2 ln n / n)`, redrawn until
/// connected.
pub fn random_connected(n: usize, seed: u64) -> Graph {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (2.0 * (n as f64).ln() / n as f64).min(1.0);
    loop {
        let g = gnp(n, p, &mut rng);
        if connected_components(&g).count() == 1 {
            return g;
        }
    }
}
