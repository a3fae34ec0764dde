//! Browser bindings. Every export takes plain numbers and returns a JSON
//! string, so the page needs no generated TypeScript glue beyond the loader.

use lapsira::graph::{laplacian, largest_component};
use lapsira::sira::{EigenResult, IterationRecord, SiraError};
use lapsira::{fixtures, Graph, SiraConfig, TrimPolicy};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps a browser tab responsive on one thread.
pub const MAX_VERTICES: usize = 20_000;

#[derive(Debug, Serialize)]
pub struct GridModes {
    pub rows: usize,
    pub cols: usize,
    pub eigenvalues: Vec<f64>,
    /// Row-major `rows x cols` samples of each eigenvector.
    pub modes: Vec<Vec<f64>>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

#[derive(Debug, Serialize)]
pub struct Convergence {
    pub n: usize,
    pub edges: usize,
    pub converged: bool,
    pub eigenvalues: Vec<f64>,
    pub history: Vec<IterationRecord>,
    pub inner_iterations: usize,
}

#[derive(Debug, Serialize)]
pub struct TrimCost {
    pub policy: &'static str,
    pub trim_index: usize,
    pub degree: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub eigenvalues: Vec<f64>,
}

/// Accepts a partial result as long as something was computed.
fn solve_lenient(g: &Graph, cfg: &SiraConfig) -> Result<(EigenResult, bool), String> {
    match lapsira::isira_solve(&laplacian(g), cfg) {
        Ok(r) => Ok((r, true)),
        Err(SiraError::NonConvergence { partial, .. }) => Ok((*partial, false)),
        Err(e) => Err(e.to_string()),
    }
}

fn check_size(n: usize) -> Result<(), String> {
    if n > MAX_VERTICES {
        return Err(format!("at most {MAX_VERTICES} vertices in the browser, got {n}"));
    }
    Ok(())
}

/// Largest component of a seeded `G(n, M)` graph, checked against `count`.
fn er_component(n: usize, avg_degree: f64, seed: u64, count: usize) -> Result<Graph, String> {
    check_size(n)?;
    if avg_degree.is_nan() || avg_degree <= 0.0 {
        return Err("average degree must be positive".into());
    }
    let (g, _) = largest_component(&fixtures::erdos_renyi(n, avg_degree, seed)).map_err(|e| e.to_string())?;
    if count == 0 || count >= g.n() {
        return Err(format!("count must be in 1..{}", g.n()));
    }
    Ok(g)
}

pub fn grid_modes_impl(rows: usize, cols: usize, count: usize) -> Result<GridModes, String> {
    check_size(rows * cols)?;
    if rows * cols < 2 || count == 0 || count >= rows * cols {
        return Err("need a grid of at least two vertices and 0 < count < rows * cols".into());
    }
    let (res, _) = solve_lenient(&fixtures::grid(rows, cols), &SiraConfig::new(count))?;
    Ok(GridModes {
        rows,
        cols,
        eigenvalues: res.lambdas,
        modes: res.vectors,
        outer_iterations: res.outer_iterations,
        inner_iterations: res.inner_iterations,
    })
}

pub fn convergence_impl(
    n: usize,
    avg_degree: f64,
    seed: u64,
    count: usize,
    inner_tol: f64,
) -> Result<Convergence, String> {
    let g = er_component(n, avg_degree, seed, count)?;
    let mut cfg = SiraConfig::new(count);
    cfg.inner.tol = inner_tol;
    cfg.validate().map_err(|e| e.to_string())?;
    let (res, converged) = solve_lenient(&g, &cfg)?;
    Ok(Convergence {
        n: g.n(),
        edges: g.num_edges(),
        converged,
        eigenvalues: res.lambdas,
        history: res.history,
        inner_iterations: res.inner_iterations,
    })
}

pub fn trim_costs_impl(n: usize, avg_degree: f64, seed: u64, count: usize) -> Result<Vec<TrimCost>, String> {
    let g = er_component(n, avg_degree, seed, count)?;
    let l = laplacian(&g);
    let policies = [
        ("min-degree", TrimPolicy::MinDegree),
        ("vertex-0", TrimPolicy::Fixed(0)),
        ("max-degree", TrimPolicy::MaxDegree),
    ];
    let mut out = Vec::new();
    for (policy, trim) in policies {
        let cfg = SiraConfig { trim, ..SiraConfig::new(count) };
        let (res, _) = solve_lenient(&g, &cfg)?;
        out.push(TrimCost {
            policy,
            trim_index: res.trim_index,
            degree: l.diag()[res.trim_index],
            outer_iterations: res.outer_iterations,
            inner_iterations: res.inner_iterations,
            eigenvalues: res.lambdas,
        });
    }
    Ok(out)
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

/// Lowest vibration modes of a `rows x cols` grid.
#[wasm_bindgen]
pub fn grid_modes(rows: usize, cols: usize, count: usize) -> Result<String, JsValue> {
    to_js(grid_modes_impl(rows, cols, count))
}

/// Outer iteration history on a random graph.
#[wasm_bindgen]
pub fn convergence(n: usize, avg_degree: f64, seed: u64, count: usize, inner_tol: f64) -> Result<String, JsValue> {
    to_js(convergence_impl(n, avg_degree, seed, count, inner_tol))
}

/// Solver cost under each trimming policy on one random graph.
#[wasm_bindgen]
pub fn trim_costs(n: usize, avg_degree: f64, seed: u64, count: usize) -> Result<String, JsValue> {
    to_js(trim_costs_impl(n, avg_degree, seed, count))
}
