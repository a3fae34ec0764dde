use lapsira_wasm::{convergence_impl, grid_modes_impl, trim_costs_impl, MAX_VERTICES};

#[test]
fn grid_modes_match_closed_form() {
    let m = grid_modes_impl(8, 5, 3).unwrap();
    assert_eq!(m.modes.len(), 3);
    assert!(m.modes.iter().all(|v| v.len() == 40));
    // grid spectrum (2 - 2 cos(i pi / rows)) + (2 - 2 cos(j pi / cols))
    let f = |k: usize, n: usize| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / n as f64).cos();
    let mut exact: Vec<f64> = (0..8).flat_map(|i| (0..5).map(move |j| f(i, 8) + f(j, 5))).collect();
    exact.sort_by(f64::total_cmp);
    for (got, want) in m.eigenvalues.iter().zip(&exact[1..]) {
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
}

#[test]
fn convergence_history_ends_below_tolerance() {
    let c = convergence_impl(300, 6.0, 7, 4, 1e-2).unwrap();
    assert!(c.converged);
    assert_eq!(c.eigenvalues.len(), 4);
    assert!(c.history.last().unwrap().resnorm < 1e-8);
    let json = serde_json::to_value(&c).unwrap();
    assert!(json["history"][0]["theta1"].is_number());
}

#[test]
fn trim_policies_agree_on_eigenvalues() {
    let rows = trim_costs_impl(400, 5.0, 11, 3).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].degree <= rows[2].degree);
    for r in &rows[1..] {
        for (a, b) in r.eigenvalues.iter().zip(&rows[0].eigenvalues) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn oversized_and_degenerate_requests_are_refused() {
    assert!(grid_modes_impl(MAX_VERTICES, 2, 3).is_err());
    assert!(grid_modes_impl(1, 1, 1).is_err());
    assert!(grid_modes_impl(3, 3, 9).is_err());
    assert!(convergence_impl(100, 0.0, 1, 2, 1e-2).is_err());
    assert!(trim_costs_impl(100, 4.0, 1, 0).is_err());
    assert!(trim_costs_impl(100, f64::NAN, 1, 2).is_err());
}
