use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lapsira_cli::output::{read_vectors, AblationRecord, BenchRecord, ComponentsRecord, RunRecord, VerifyRecord};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lapsira"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_graph(name: &str, text: &str) -> PathBuf {
    let p = scratch(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> &str {
    std::str::from_utf8(&o.stdout).unwrap()
}

fn grid_file(name: &str) -> PathBuf {
    let p = scratch(name);
    let o = run(&["generate", "grid", "--rows", "6", "--cols", "5", "--output", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    p
}

#[test]
fn converged_solve_exits_zero_and_round_trips() {
    let g = grid_file("grid_solve.txt");
    let hist = scratch("grid.csv");
    let vecs = scratch("grid.bin");
    let o = run(&[
        "solve",
        g.to_str().unwrap(),
        "--num-eigs",
        "4",
        "--history",
        hist.to_str().unwrap(),
        "--vectors",
        vecs.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rec: RunRecord = serde_json::from_str(stdout(&o)).unwrap();
    assert!(rec.converged && rec.vertex_ids.is_none());
    assert_eq!(rec.graph.n, 30);
    assert_eq!(rec.eigenvalues.len(), 4);
    assert!(rec.residuals.iter().all(|&r| r <= 1e-8));
    let again: RunRecord = serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
    assert_eq!(again, rec);

    let csv = fs::read_to_string(&hist).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("sweep,iter,k,theta1,resnorm,sigma,inner_iters"));
    assert_eq!(lines.count(), rec.history.len());

    let (n, vs) = read_vectors(&fs::read(&vecs).unwrap()).unwrap();
    assert_eq!((n, vs.len()), (30, 4));
    assert!(vs.iter().all(|v| v.iter().sum::<f64>().abs() < 1e-8));
}

#[test]
fn usage_and_io_errors_exit_one() {
    let g = grid_file("grid_usage.txt");
    let g = g.to_str().unwrap();
    assert_eq!(run(&["solve", g, "--num-eigs", "0"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "/nonexistent/graph.txt"]).status.code(), Some(1));
    assert_eq!(run(&["solve", g, "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["solve", g, "--trim", "sideways"]).status.code(), Some(1));
    let bad = write_graph("bad.txt", "1 2\n2 x\n");
    assert_eq!(run(&["solve", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn partial_result_exits_two() {
    let g = grid_file("grid_partial.txt");
    let o = run(&["solve", g.to_str().unwrap(), "--num-eigs", "5", "--max-outer", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let rec: RunRecord = serde_json::from_str(stdout(&o)).unwrap();
    assert!(!rec.converged);
    assert!(rec.message.is_some());
    assert!(rec.eigenvalues.len() < 5);
}

#[test]
fn disconnected_input_reports_vertex_ids() {
    // triangle {1,2,3}, path {5,6,7,8}, isolated edge {9,10}
    let g = write_graph("disc.txt", "1 2\n2 3\n3 1\n5 6\n6 7\n7 8\n9 10\n");
    let o = run(&["solve", g.to_str().unwrap(), "--num-eigs", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let rec: RunRecord = serde_json::from_str(stdout(&o)).unwrap();
    assert_eq!(rec.graph.n, 4);
    assert_eq!(rec.vertex_ids, Some(vec![5, 6, 7, 8]));
    assert!(rec.graph.components >= 3);

    let o = run(&["components", g.to_str().unwrap()]);
    let comps: ComponentsRecord = serde_json::from_str(stdout(&o)).unwrap();
    assert_eq!(comps.sizes[..3], [4, 3, 2]);
}

#[test]
fn laplacian_is_written_as_matrix_market() {
    let g = write_graph("p3.txt", "1 2\n2 3\n");
    let o = run(&["laplacian", g.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("%%MatrixMarket matrix coordinate real"));
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('%')).collect();
    let dims: Vec<usize> = body[0].split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(dims[..2], [3, 3]);
    let mut dense = [[0.0f64; 3]; 3];
    for line in &body[1..] {
        let t: Vec<&str> = line.split_whitespace().collect();
        let (i, j, v): (usize, usize, f64) = (t[0].parse().unwrap(), t[1].parse().unwrap(), t[2].parse().unwrap());
        dense[i - 1][j - 1] = v;
        dense[j - 1][i - 1] = v;
    }
    assert_eq!(dense, [[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]]);
}

#[test]
fn bench_agrees_on_small_graph_and_skips_dense_on_large() {
    let g = write_graph("p3b.txt", "1 2\n2 3\n");
    let o = run(&["bench", g.to_str().unwrap(), "--num-eigs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rec: BenchRecord = serde_json::from_str(stdout(&o)).unwrap();
    assert_eq!(rec.rows.len(), 3);
    for row in &rec.rows {
        let vals = row.eigenvalues.as_ref().unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-6 && (vals[1] - 3.0).abs() < 1e-6, "{row:?}");
    }

    let big = scratch("grid50.txt");
    run(&["generate", "grid", "--rows", "50", "--cols", "50", "--output", big.to_str().unwrap()]);
    let o = run(&["bench", big.to_str().unwrap(), "--num-eigs", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let rec: BenchRecord = serde_json::from_str(stdout(&o)).unwrap();
    assert!(rec.rows[1..].iter().all(|r| r.eigenvalues.is_none() && r.note.as_deref().unwrap().starts_with("skipped")));
}

#[test]
fn ablation_and_verify_report_consistent_results() {
    let g = grid_file("grid_ablate.txt");
    let o = run(&["ablate", g.to_str().unwrap(), "--num-eigs", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let rec: AblationRecord = serde_json::from_str(stdout(&o)).unwrap();
    assert_eq!(rec.rows.len(), 3);
    assert!(rec.max_spread < 1e-6);

    let o = run(&["verify", g.to_str().unwrap(), "--num-eigs", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let rec: VerifyRecord = serde_json::from_str(stdout(&o)).unwrap();
    assert!(rec.report.residuals_ok && !rec.report.skipped_eigenvalue);
    assert!(rec.report.eigenvalue_error.unwrap() < 1e-6);
}

#[test]
fn path_ablation_trims_the_middle_vertex_for_max_degree() {
    let g = write_graph("p3c.txt", "1 2\n2 3\n");
    let o = run(&["ablate", g.to_str().unwrap(), "--num-eigs", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let rec: AblationRecord = serde_json::from_str(stdout(&o)).unwrap();
    let policies: Vec<(&str, usize)> = rec.rows.iter().map(|r| (r.policy.as_str(), r.trim_index)).collect();
    assert_eq!(policies, [("min-degree", 0), ("vertex-0", 0), ("max-degree", 1)]);
    assert!(rec.rows.iter().all(|r| (r.eigenvalues[0] - 1.0).abs() < 1e-8));
}
