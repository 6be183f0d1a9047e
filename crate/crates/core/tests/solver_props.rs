mod common;

use std::collections::BTreeMap;

use hexconf::error::Error;
use hexconf::lattice::{are_adjacent, Ball, LatticeVertex};
use hexconf::patch::{linear_factor, ConformalPatch};
use hexconf::solver::*;
use rand::Rng;

const ORIGIN: LatticeVertex = LatticeVertex::ORIGIN;

fn random_patch(rng: &mut impl Rng, radius: u32, amp: f64) -> ConformalPatch {
    let ball = Ball::new(ORIGIN, radius);
    let w: Vec<f64> = (0..ball.len()).map(|_| rng.random_range(-amp..amp)).collect();
    ConformalPatch::new(ball, w, 1.0).unwrap()
}

fn finite_difference(p: &ConformalPatch, col: usize, h: f64) -> Vec<f64> {
    let shifted = |s: f64| {
        let mut w = p.w_values().to_vec();
        w[col] += s;
        p.with_w(w).unwrap().interior_curvature().unwrap()
    };
    let (a, b) = (shifted(h), shifted(-h));
    a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect()
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = common::rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = random_patch(&mut rng, 3, 0.15);
        let j = curvature_jacobian(&p).unwrap().to_dense();
        for col in 0..p.ball().len() {
            let fd = finite_difference(&p, col, 1e-6);
            for (row, d) in fd.iter().enumerate() {
                let err = (j[row][col] - d).abs() / j[row][col].abs().max(1.0);
                worst = worst.max(err);
            }
        }
    }
    assert!(worst <= 1e-5, "worst relative error {worst:e}");
}

#[test]
fn jacobian_structure() {
    let mut rng = common::rng(6);
    let p = random_patch(&mut rng, 4, 0.1);
    let jac = curvature_jacobian(&p).unwrap();
    for &(r, c, _) in &jac.entries {
        let (i, j) = (jac.rows[r], jac.cols[c]);
        assert!(i == j || are_adjacent(i, j), "({i}, {j})");
    }
    for &i in &jac.rows {
        for &j in &jac.rows {
            assert!((jac.get(i, j) - jac.get(j, i)).abs() <= 1e-9);
        }
    }
    let flat = curvature_jacobian(&ConformalPatch::regular(Ball::new(ORIGIN, 4))).unwrap();
    for row in flat.to_dense() {
        assert!(row.iter().sum::<f64>().abs() <= 1e-12);
    }
}

#[test]
fn constant_boundary_from_several_starts() {
    let ball = Ball::new(ORIGIN, 6);
    for seed in 0..5 {
        let mut rng = common::rng(100 + seed);
        let init: BTreeMap<_, _> = ball.interior().map(|v| (v, rng.random_range(-0.2..0.2))).collect();
        let prob = YamabeProblem::flat(ball.clone(), |_| 0.0).with_initial(init);
        let trace = solve(&prob, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(trace.converged, "seed {seed}");
        for v in ball.interior() {
            assert!(trace.final_w.w(v).unwrap().abs() <= 1e-8);
        }
    }
    let trace = solve(&YamabeProblem::flat(ball.clone(), |_| -0.4), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    assert!(trace.converged);
    assert!(ball.interior().all(|v| (trace.final_w.w(v).unwrap() + 0.4).abs() <= 1e-8));
}

#[test]
fn linear_boundary_recovers_linear_extension() {
    let ball = Ball::new(ORIGIN, 6);
    let exact = linear_factor(0.1, -0.05, &ball).unwrap();
    let prob = YamabeProblem::flat(ball.clone(), |v| exact.w(v).unwrap());
    let trace = solve(&prob, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    assert!(trace.converged);
    for v in ball.interior() {
        assert!((trace.final_w.w(v).unwrap() - exact.w(v).unwrap()).abs() <= 1e-8, "{v}");
    }
    let r: Vec<f64> = trace.iterations.iter().map(|s| s.residual).collect();
    assert!(r.len() >= 3, "{r:?}");
    let tail = &r[r.len() - 3..];
    for k in 0..2 {
        assert!(tail[k + 1] <= 1e3 * tail[k] * tail[k], "{r:?}");
    }
}

#[test]
fn prescribed_point_curvatures() {
    let ball = Ball::new(ORIGIN, 5);
    let (a, b) = (LatticeVertex::new(1, 0), LatticeVertex::new(-1, 0));
    let boundary = ball.boundary().map(|v| (v, 0.0)).collect();
    let target: BTreeMap<_, _> = ball
        .interior()
        .map(|v| (v, if v == a { 0.1 } else if v == b { -0.1 } else { 0.0 }))
        .collect();
    let prob = YamabeProblem::new(ball, boundary, target.clone()).unwrap();
    let trace = solve(&prob, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    assert!(trace.converged);
    let report = trace.final_w.curvature().unwrap();
    for (v, k) in &report.k {
        assert!((k - target[v]).abs() <= DEFAULT_TOL);
    }
}

#[test]
fn converged_flat_solutions_pass_rechecks() {
    let ball = Ball::new(ORIGIN, 5);
    let mut rng = common::rng(77);
    for _ in 0..5 {
        let vals: BTreeMap<_, _> = ball.boundary().map(|v| (v, rng.random_range(-0.15..0.15))).collect();
        let prob = YamabeProblem::flat(ball.clone(), |v| vals[&v]);
        let trace = solve(&prob, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(trace.converged);
        assert!(trace.final_w.curvature().unwrap().max_abs_k <= DEFAULT_TOL);
        assert!(trace.final_w.check_edge_ratio_bound(1e-9).unwrap().holds());
        assert!(trace.final_residual() <= DEFAULT_TOL);
    }
}

#[test]
fn infeasible_target_does_not_converge() {
    let ball = Ball::new(ORIGIN, 2);
    let boundary = ball.boundary().map(|v| (v, 0.0)).collect();
    let target = ball.interior().map(|v| (v, if v == ORIGIN { 7.0 } else { 0.0 })).collect();
    let prob = YamabeProblem::new(ball, boundary, target).unwrap();
    match solve(&prob, DEFAULT_TOL, 50) {
        Ok(trace) => assert!(!trace.converged),
        Err(e) => assert!(matches!(e, Error::SolverStuck { .. }), "{e}"),
    }
}
