use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use lapsira::graph::{build_graph, connected_components, laplacian, largest_component, parse_edge_list, Graph};
use lapsira::sira::{isira_solve, EigenResult, SiraError};
use lapsira::{fixtures, LaplacianMatrix, SiraConfig, TrimPolicy};
use lapsira_oracle::{baseline_nullspace_deflated, baseline_perturbed, verify_eigresult, DEFAULT_TAU, MAX_DENSE};

use crate::args::{Command, GenerateArgs, GraphKind, InputArgs, SolveArgs, SolverArgs};
use crate::output::{
    write_history_csv, write_vectors, AblationRecord, AblationRow, BenchRecord, BenchRow, ComponentsRecord, GraphStats,
    RunRecord, Timings, VerifyRecord,
};
use crate::{Cli, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    Partial,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Converged => crate::exit::CONVERGED,
            Outcome::Partial => crate::exit::PARTIAL,
        }
    }
}

/// Parsed input reduced to its largest connected component.
pub struct Loaded {
    pub input: String,
    pub graph: Graph,
    pub laplacian: LaplacianMatrix,
    pub stats: GraphStats,
    pub vertex_ids: Option<Vec<usize>>,
    pub timings: Timings,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let t = Instant::now();
    let file = File::open(path).map_err(io_err(path))?;
    let el =
        parse_edge_list(BufReader::new(file)).map_err(|source| CliError::Graph { path: path.to_path_buf(), source })?;
    let parse_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let full = build_graph(&el);
    let components = connected_components(&full).count();
    let (graph, map) =
        largest_component(&full).map_err(|source| CliError::Graph { path: path.to_path_buf(), source })?;
    let l = laplacian(&graph);
    let build_s = t.elapsed().as_secs_f64();

    let stats = GraphStats {
        input_vertices: full.n(),
        input_edges: full.num_edges(),
        components,
        n: graph.n(),
        edges: graph.num_edges(),
        nnz: l.nnz(),
    };
    let vertex_ids = (components > 1).then(|| map.iter().map(|&v| v + el.id_offset()).collect());
    let timings = Timings::from([("parse_s".to_string(), parse_s), ("build_s".to_string(), build_s)]);
    Ok(Loaded { input: path.display().to_string(), graph, laplacian: l, stats, vertex_ids, timings })
}

pub fn sira_config(a: &SolverArgs) -> SiraConfig {
    let mut cfg = SiraConfig::new(a.num_eigs);
    if let Some(m) = a.max_subspace {
        cfg.m = m;
    }
    if let Some(q) = a.restart_size {
        cfg.q = q;
    }
    cfg.eps = a.tol;
    cfg.inner.tol = a.inner_tol;
    cfg.inner.maxit = a.inner_maxit;
    cfg.inner.solver = a.solver.into();
    cfg.inner.precond = a.precond.into();
    cfg.trim = a.trim;
    cfg.delta = a.delta;
    cfg.sigma0 = a.sigma0;
    cfg.seed = a.seed;
    cfg.max_outer = a.max_outer;
    cfg.probe_steps = a.probe_steps;
    cfg.validate = a.validate;
    cfg
}

fn residuals(l: &LaplacianMatrix, res: &EigenResult) -> Vec<f64> {
    let mut y = vec![0.0; l.n()];
    res.lambdas
        .iter()
        .zip(&res.vectors)
        .map(|(lam, v)| {
            l.matvec(v, &mut y);
            y.iter().zip(v).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt()
        })
        .collect()
}

/// Runs the solver on a loaded graph. Non-convergence yields a record with
/// `converged = false` and the pairs found so far.
pub fn solve_loaded(loaded: &Loaded, cfg: &SiraConfig) -> Result<(RunRecord, EigenResult), CliError> {
    let t = Instant::now();
    let (res, converged, message) = match isira_solve(&loaded.laplacian, cfg) {
        Ok(r) => (r, true, None),
        Err(e @ SiraError::NonConvergence { .. }) => {
            let msg = e.to_string();
            let SiraError::NonConvergence { partial, .. } = e else { unreachable!() };
            (*partial, false, Some(msg))
        }
        Err(e) => return Err(e.into()),
    };
    let solve_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let residuals = residuals(&loaded.laplacian, &res);
    let verify_s = t.elapsed().as_secs_f64();

    let mut timings = loaded.timings.clone();
    timings.insert("solve_s".into(), solve_s);
    timings.insert("verify_s".into(), verify_s);
    let record = RunRecord {
        input: loaded.input.clone(),
        config: cfg.clone(),
        graph: loaded.stats.clone(),
        vertex_ids: loaded.vertex_ids.clone(),
        trim_index: res.trim_index,
        delta: res.delta,
        converged,
        message,
        eigenvalues: res.lambdas.clone(),
        residuals,
        outer_iterations: res.outer_iterations,
        inner_iterations: res.inner_iterations,
        history: res.history.clone(),
        timings,
    };
    Ok((record, res))
}

fn write_main(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn write_with<F>(path: &PathBuf, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn side_outputs(a: &SolveArgs, n: usize, res: &EigenResult) -> Result<(), CliError> {
    if let Some(p) = &a.history {
        write_with(p, |w| write_history_csv(w, &res.history))?;
    }
    if let Some(p) = &a.vectors {
        write_with(p, |w| write_vectors(w, n, &res.vectors))?;
    }
    Ok(())
}

fn outcome(converged: bool) -> Outcome {
    if converged {
        Outcome::Converged
    } else {
        Outcome::Partial
    }
}

pub fn run_solve(a: &SolveArgs) -> Result<(RunRecord, EigenResult), CliError> {
    let cfg = sira_config(&a.solver);
    cfg.validate()?;
    let loaded = load(&a.io.input)?;
    solve_loaded(&loaded, &cfg)
}

pub fn run_verify(a: &SolveArgs) -> Result<VerifyRecord, CliError> {
    let cfg = sira_config(&a.solver);
    cfg.validate()?;
    let loaded = load(&a.io.input)?;
    let (run, res) = solve_loaded(&loaded, &cfg)?;
    let report = verify_eigresult(&loaded.laplacian, &res, cfg.eps);
    Ok(VerifyRecord { run, report })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn run_bench(a: &SolveArgs) -> Result<(BenchRecord, bool), CliError> {
    let cfg = sira_config(&a.solver);
    cfg.validate()?;
    let loaded = load(&a.io.input)?;
    let (run, _) = solve_loaded(&loaded, &cfg)?;
    let (n, nnz) = (loaded.stats.n, loaded.stats.nnz);
    let mut timings = loaded.timings.clone();
    timings.insert("isira_s".into(), run.timings["solve_s"]);
    let mut rows = vec![BenchRow {
        code: "isira".into(),
        n,
        nnz,
        eigenvalues: Some(run.eigenvalues.clone()),
        max_abs_diff: Some(0.0),
        note: run.message.clone(),
    }];

    type Baseline = fn(&LaplacianMatrix, usize) -> Result<Vec<f64>, lapsira_oracle::OracleError>;
    let baselines: [(&str, Baseline); 2] = [
        ("perturbed", |l, d| baseline_perturbed(l, DEFAULT_TAU, d)),
        ("nullspace-deflated", baseline_nullspace_deflated),
    ];
    for (code, f) in baselines {
        if n > MAX_DENSE {
            rows.push(BenchRow {
                code: code.into(),
                n,
                nnz,
                eigenvalues: None,
                max_abs_diff: None,
                note: Some(format!("skipped: dense baselines are limited to n <= {MAX_DENSE}")),
            });
            continue;
        }
        let t = Instant::now();
        let vals = f(&loaded.laplacian, cfg.d)?;
        timings.insert(format!("{code}_s"), t.elapsed().as_secs_f64());
        rows.push(BenchRow {
            code: code.into(),
            n,
            nnz,
            max_abs_diff: Some(max_abs_diff(&vals, &run.eigenvalues)),
            eigenvalues: Some(vals),
            note: None,
        });
    }
    let rec = BenchRecord { input: loaded.input, graph: loaded.stats, rows, timings };
    Ok((rec, run.converged))
}

pub fn bench_table(rec: &BenchRecord) -> String {
    let mut s = format!("{:<20} {:>10} {:>12} {:>10} {:>12}\n", "code", "n", "nnz", "time_s", "max_diff");
    for row in &rec.rows {
        let time = rec.timings.get(&format!("{}_s", row.code)).map_or("-".into(), |t| format!("{t:.3}"));
        let diff = row.max_abs_diff.map_or("-".into(), |d| format!("{d:.2e}"));
        s += &format!("{:<20} {:>10} {:>12} {:>10} {:>12}\n", row.code, row.n, row.nnz, time, diff);
    }
    s
}

/// Trim policies compared by `ablate`.
pub const ABLATION_POLICIES: [(&str, TrimPolicy); 3] =
    [("min-degree", TrimPolicy::MinDegree), ("vertex-0", TrimPolicy::Fixed(0)), ("max-degree", TrimPolicy::MaxDegree)];

pub fn run_trim_ablation(a: &SolveArgs) -> Result<(AblationRecord, bool), CliError> {
    let base = sira_config(&a.solver);
    base.validate()?;
    let loaded = load(&a.io.input)?;
    let mut timings = loaded.timings.clone();
    let mut rows = Vec::new();
    for (name, policy) in ABLATION_POLICIES {
        let cfg = SiraConfig { trim: policy, ..base.clone() };
        let (run, _) = solve_loaded(&loaded, &cfg)?;
        timings.insert(format!("{name}_s"), run.timings["solve_s"]);
        rows.push(AblationRow {
            policy: name.into(),
            trim_index: run.trim_index,
            converged: run.converged,
            eigenvalues: run.eigenvalues,
            outer_iterations: run.outer_iterations,
            inner_iterations: run.inner_iterations,
        });
    }
    let mut spread = 0.0_f64;
    for a in &rows {
        for b in &rows {
            if a.eigenvalues.len() == b.eigenvalues.len() {
                spread = spread.max(max_abs_diff(&a.eigenvalues, &b.eigenvalues));
            } else {
                spread = f64::INFINITY;
            }
        }
    }
    let all = rows.iter().all(|r| r.converged);
    Ok((AblationRecord { input: loaded.input, graph: loaded.stats, rows, max_spread: spread, timings }, all))
}

pub fn run_components(a: &InputArgs) -> Result<ComponentsRecord, CliError> {
    let path = &a.input;
    let file = File::open(path).map_err(io_err(path))?;
    let el =
        parse_edge_list(BufReader::new(file)).map_err(|source| CliError::Graph { path: path.to_path_buf(), source })?;
    let g = build_graph(&el);
    let comps = connected_components(&g);
    let mut sizes = comps.sizes.clone();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    Ok(ComponentsRecord {
        input: path.display().to_string(),
        vertices: g.n(),
        edges: g.num_edges(),
        components: comps.count(),
        sizes,
    })
}

/// 1-based edge list of a synthetic graph.
pub fn generate(a: &GenerateArgs) -> String {
    let g = match a.kind {
        GraphKind::Path => fixtures::path(a.n),
        GraphKind::Cycle => fixtures::cycle(a.n.max(3)),
        GraphKind::Star => fixtures::star(a.n),
        GraphKind::Complete => fixtures::complete(a.n),
        GraphKind::Grid => fixtures::grid(a.rows, a.cols),
        GraphKind::Er => fixtures::erdos_renyi(a.n, a.avg_degree, a.seed),
    };
    let mut s = format!("% {} vertices, {} edges\n", g.n(), g.num_edges());
    for (u, v, _) in g.edges() {
        s += &format!("{} {}\n", u + 1, v + 1);
    }
    s
}

pub fn run_laplacian(a: &InputArgs) -> Result<String, CliError> {
    let path = &a.input;
    let file = File::open(path).map_err(io_err(path))?;
    let el =
        parse_edge_list(BufReader::new(file)).map_err(|source| CliError::Graph { path: path.to_path_buf(), source })?;
    let l = laplacian(&build_graph(&el));
    let mut buf = Vec::new();
    l.write_matrix_market(&mut buf).map_err(io_err(path))?;
    Ok(String::from_utf8(buf).expect("MatrixMarket output is ASCII"))
}

/// Dispatches one command and writes its outputs.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Solve(a) => {
            let (rec, res) = run_solve(a)?;
            side_outputs(a, rec.graph.n, &res)?;
            write_main(a.io.output.as_deref(), &to_json(&rec)?)?;
            Ok(outcome(rec.converged))
        }
        Command::Verify(a) => {
            let rec = run_verify(a)?;
            write_main(a.io.output.as_deref(), &to_json(&rec)?)?;
            Ok(outcome(rec.run.converged))
        }
        Command::Bench(a) => {
            let (rec, converged) = run_bench(a)?;
            eprint!("{}", bench_table(&rec));
            write_main(a.io.output.as_deref(), &to_json(&rec)?)?;
            Ok(outcome(converged))
        }
        Command::Ablate(a) => {
            let (rec, converged) = run_trim_ablation(a)?;
            write_main(a.io.output.as_deref(), &to_json(&rec)?)?;
            Ok(outcome(converged))
        }
        Command::Components(a) => {
            let rec = run_components(a)?;
            write_main(a.output.as_deref(), &to_json(&rec)?)?;
            Ok(Outcome::Converged)
        }
        Command::Generate(a) => {
            write_main(a.output.as_deref(), &generate(a))?;
            Ok(Outcome::Converged)
        }
        Command::Laplacian(a) => {
            write_main(a.output.as_deref(), &run_laplacian(a)?)?;
            Ok(Outcome::Converged)
        }
    }
}
