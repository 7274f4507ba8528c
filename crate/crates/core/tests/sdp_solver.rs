use dtaf_core::sdp::{
    io, solve, svec_index, ConicProblem, ProblemBuilder, SolveOutcome, SolveStatus,
};
use proptest::prelude::*;

mod common;
use common::{cone_margin, fixed_2x2, lambda_max_epigraph, lp_corner};

fn check_kkt(p: &ConicProblem, out: &SolveOutcome) {
    common::kkt(p, out).unwrap();
}

fn check_certificate(p: &ConicProblem, out: &SolveOutcome) {
    common::certificate(p, out).unwrap();
}

#[test]
fn lp_corner_solution() {
    let p = lp_corner();
    let out = solve(&p, None).unwrap();
    check_kkt(&p, &out);
    assert!((out.x[0] - 3.0).abs() < 1e-6);
}

#[test]
fn lambda_max_is_two() {
    let p = lambda_max_epigraph();
    let out = solve(&p, None).unwrap();
    check_kkt(&p, &out);
    assert!((out.x[0] - 2.0).abs() < 1e-6, "t* = {}", out.x[0]);
}

#[test]
fn fixed_matrix_feasible_then_infeasible() {
    let p = fixed_2x2(0.9);
    let out = solve(&p, None).unwrap();
    check_kkt(&p, &out);
    assert!((out.primal_objective - 2.0).abs() < 1e-6);
    let x01 = out.x[svec_index(0, 1)] / std::f64::consts::SQRT_2;
    assert!((x01 - 0.9).abs() < 1e-6);

    let p = fixed_2x2(1.1);
    let out = solve(&p, None).unwrap();
    check_certificate(&p, &out);
}

#[test]
fn unbounded_lp_is_dual_infeasible() {
    // minimize -x s.t. x - s = 1, x, s >= 0
    let mut pb = ProblemBuilder::new();
    let v = pb.add_nonneg(2);
    pb.minimize(vec![(v.index(0), -1.0)]);
    pb.add_row(vec![(v.index(0), 1.0), (v.index(1), -1.0)], 1.0);
    let out = solve(&pb.build(), None).unwrap();
    assert_eq!(out.status, SolveStatus::DualInfeasible);
}

#[test]
fn inconsistent_equalities_give_certificate() {
    let mut p = lp_corner();
    p.rows.push(p.rows[0].clone());
    p.b.push(4.0);
    let out = solve(&p, None).unwrap();
    check_certificate(&p, &out);
}

#[test]
fn redundant_rows_do_not_disturb_solution() {
    let mut p = lambda_max_epigraph();
    let extra = p.rows[0].clone();
    p.rows.push(extra);
    p.b.push(-2.0);
    let out = solve(&p, None).unwrap();
    check_kkt(&p, &out);
    assert!((out.x[0] - 2.0).abs() < 1e-6);
}

#[test]
fn solve_is_deterministic() {
    let p = fixed_2x2(0.9);
    let a = solve(&p, None).unwrap();
    let b = solve(&p, None).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.y, b.y);
    assert_eq!(a.iterations, b.iterations);
}

#[test]
fn warm_start_reaches_same_optimum() {
    let p = lambda_max_epigraph();
    let cold = solve(&p, None).unwrap();
    let warm = solve(&p, Some(&cold.warm_start())).unwrap();
    check_kkt(&p, &warm);
    assert!((warm.x[0] - 2.0).abs() < 1e-6);
}

#[test]
fn dump_roundtrip_solves_identically() {
    let p = lambda_max_epigraph();
    let q = io::load(&io::dump(&p)).unwrap();
    assert_eq!(p, q);
    assert_eq!(solve(&p, None).unwrap().x, solve(&q, None).unwrap().x);
}

/// Random `min <C, X>` s.t. `X_ii = 1`, `X` PSD (a max-cut style relaxation).
fn elliptope(c: &[f64], d: usize) -> ConicProblem {
    let mut pb = ProblemBuilder::new();
    let x = pb.add_psd(d);
    let mut obj = Vec::new();
    let mut k = 0;
    for j in 0..d {
        for i in 0..=j {
            obj.push(x.term(i, j, if i == j { c[k] } else { 2.0 * c[k] }));
            k += 1;
        }
    }
    pb.minimize(obj);
    for i in 0..d {
        pb.add_row(vec![x.term(i, i, 1.0)], 1.0);
    }
    pb.build()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn optimal_outcomes_pass_kkt(d in 2usize..7, seed in proptest::collection::vec(-1.0f64..1.0, 28)) {
        let p = elliptope(&seed, d);
        let out = solve(&p, None).unwrap();
        check_kkt(&p, &out);
        prop_assert!(cone_margin(&p, &out.x) >= -1e-8);
        prop_assert!(cone_margin(&p, &out.s) >= -1e-8);
    }

    #[test]
    fn infeasible_fixings_are_certified(a in 1.001f64..3.0, sign in proptest::bool::ANY) {
        let p = fixed_2x2(if sign { a } else { -a });
        let out = solve(&p, None).unwrap();
        check_certificate(&p, &out);
    }
}
