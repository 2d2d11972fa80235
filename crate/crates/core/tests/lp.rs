use knorm_core::auditor::{lp_optimal_error, TinyInstance};
use knorm_core::lp::{LinearProgram, Relation};
use proptest::prelude::*;

#[test]
fn textbook_program() {
    // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18: optimum (2, 6), value 36.
    let mut lp = LinearProgram::new(2);
    lp.set_objective(vec![-3.0, -5.0]);
    lp.add_constraint(vec![1.0, 0.0], Relation::Le, 4.0);
    lp.add_constraint(vec![0.0, 2.0], Relation::Le, 12.0);
    lp.add_constraint(vec![3.0, 2.0], Relation::Le, 18.0);
    let s = lp.solve().unwrap();
    assert!((s.objective + 36.0).abs() < 1e-9);
    assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
}

#[test]
fn infeasible_program_is_reported() {
    let mut lp = LinearProgram::new(1);
    lp.set_objective(vec![1.0]);
    lp.add_constraint(vec![1.0], Relation::Ge, 2.0);
    lp.add_constraint(vec![1.0], Relation::Le, 1.0);
    assert!(lp.solve().is_err());
}

/// Two databases at distance `t` on a line, answers `{0, t}`. With
/// `p = P[a = t | x = 0] = P[a = 0 | x = t]` the error is `p t`, and privacy
/// needs `1 - p <= e^{eps t} p`, so the optimum is `t / (1 + e^{eps t})`.
#[test]
fn two_point_closed_form() {
    for (t, eps) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.3)] {
        let inst = TinyInstance {
            databases: vec![vec![0.0], vec![t]],
            answers: vec![vec![0.0], vec![t]],
            query_values: vec![vec![0.0], vec![t]],
            errors: None,
        };
        let got = lp_optimal_error(&inst, eps).unwrap().optimum;
        let want = t / (1.0 + (eps * t).exp());
        assert!((got - want).abs() < 1e-9, "t={t} eps={eps}: {got} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Feasible box programs: the minimum of `c.x` over `0 <= x <= u` puts
    /// each coordinate at 0 or its bound depending on the sign of `c`.
    #[test]
    fn box_programs(c in proptest::collection::vec(-3.0f64..3.0, 1..6), scale in 0.1f64..5.0) {
        let n = c.len();
        let mut lp = LinearProgram::new(n);
        lp.set_objective(c.clone());
        for j in 0..n {
            lp.add_sparse(&[(j, 1.0)], Relation::Le, scale * (j + 1) as f64);
        }
        let s = lp.solve().unwrap();
        let want: f64 = c.iter().enumerate().map(|(j, &cj)| cj.min(0.0) * scale * (j + 1) as f64).sum();
        prop_assert!((s.objective - want).abs() < 1e-8);
    }

    /// The optimum is at most the error of answering uniformly, and it
    /// does not increase with eps.
    #[test]
    fn lp_monotone_in_eps(e1 in 0.1f64..2.0, bump in 0.0f64..2.0) {
        let inst = TinyInstance {
            databases: vec![vec![0.0], vec![1.0], vec![2.0]],
            answers: vec![vec![0.0], vec![1.0], vec![2.0]],
            query_values: vec![vec![0.0], vec![1.0], vec![2.0]],
            errors: None,
        };
        let lo = lp_optimal_error(&inst, e1).unwrap().optimum;
        let hi = lp_optimal_error(&inst, e1 + bump).unwrap().optimum;
        prop_assert!(hi <= lo + 1e-9);
        let uniform = vec![vec![1.0 / 3.0; 3]; 3];
        prop_assert!(lo <= inst.worst_case_error(&uniform) + 1e-9);
    }
}
