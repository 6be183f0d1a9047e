mod common;

use std::collections::HashMap;
use std::f64::consts::PI;

use hexconf::lattice::{are_adjacent, neighbors, Ball, LatticeVertex};
use hexconf::patch::*;
use hexconf::solver::{solve, YamabeProblem, DEFAULT_MAX_ITER, DEFAULT_TOL};
use proptest::prelude::*;
use rand::Rng;

const ORIGIN: LatticeVertex = LatticeVertex::ORIGIN;

fn grid() -> Vec<(f64, f64)> {
    let steps = [-0.2, -0.1, 0.0, 0.1, 0.2];
    steps.iter().flat_map(|&m| steps.iter().map(move |&n| (m, n))).collect()
}

fn random_patch(rng: &mut impl Rng, radius: u32, amp: f64) -> ConformalPatch {
    let ball = Ball::new(ORIGIN, radius);
    let w: Vec<f64> = (0..ball.len()).map(|_| rng.random_range(-amp..amp)).collect();
    ConformalPatch::new(ball, w, 1.0).unwrap()
}

#[test]
fn linear_family_is_flat_with_two_face_shapes() {
    let ball = Ball::new(ORIGIN, 8);
    for (m, n) in grid() {
        let p = linear_factor(m, n, &ball).unwrap();
        let report = p.curvature().unwrap();
        assert!(report.max_abs_k <= 1e-9, "({m},{n}) K={}", report.max_abs_k);
        let classes = similarity_classes(&p, 1e-9).unwrap().len();
        assert_eq!(classes, if m == 0.0 && n == 0.0 { 1 } else { 2 }, "({m},{n})");
        for v in ball.interior() {
            for d in alternating_angle_defects(&p, v).unwrap() {
                assert!(d.abs() <= 1e-9);
            }
        }
        assert_eq!(p.linear_coefficients(1e-12).map(|(a, b)| ((a - m).abs() < 1e-12, (b - n).abs() < 1e-12)), Some((true, true)));
    }
}

#[test]
fn regular_angles_are_exact() {
    let p = linear_factor(0.0, 0.0, &Ball::new(ORIGIN, 10)).unwrap();
    for f in p.ball().faces() {
        for a in p.face_angles(&f).unwrap() {
            assert!((a - PI / 3.0).abs() <= 1e-12);
        }
    }
    assert!(p.curvature().unwrap().max_abs_k <= 1e-12);
}

#[test]
fn cross_ratios_are_conformal_invariants() {
    let mut rng = common::rng(2024);
    for seed in 0..100 {
        let radius = 3 + (seed % 3) as u32;
        let p = random_patch(&mut rng, radius, 0.25);
        for (i, j) in p.interior_edges() {
            assert!((p.length_cross_ratio(i, j).unwrap() - 1.0).abs() <= 1e-12, "seed {seed}: {i}-{j}");
        }
    }
    // non-regular base metric: the invariant is the base cross ratio
    let ball = Ball::new(ORIGIN, 3);
    let mut base = HashMap::new();
    for &v in ball.vertices() {
        for u in neighbors(v) {
            if ball.contains(u) && v < u {
                base.insert((v, u), rng.random_range(0.95..1.05));
            }
        }
    }
    let zero = ConformalPatch::with_base_lengths(ball.clone(), vec![0.0; ball.len()], &base).unwrap();
    for _ in 0..10 {
        let w: Vec<f64> = (0..ball.len()).map(|_| rng.random_range(-0.2..0.2)).collect();
        let p = zero.with_w(w).unwrap();
        for (i, j) in p.interior_edges() {
            let want = zero.length_cross_ratio(i, j).unwrap();
            assert!((p.length_cross_ratio(i, j).unwrap() - want).abs() <= 1e-12 * want);
        }
    }
}

fn assert_edge_ratio(p: &ConformalPatch) -> usize {
    let report = p.check_edge_ratio_bound(1e-9).unwrap();
    assert!(report.holds(), "{:?}", report.violations);
    if report.flat_vertices > 0 {
        assert!(report.min_ratio >= 1.0 / 6.0);
    }
    report.flat_vertices
}

#[test]
fn flat_stars_satisfy_edge_ratio_bound() {
    let mut flat = 0;
    for (m, n) in grid() {
        flat += assert_edge_ratio(&linear_factor(m, n, &Ball::new(ORIGIN, 8)).unwrap());
    }
    let mut rng = common::rng(9);
    for _ in 0..5 {
        let ball = Ball::new(ORIGIN, 5);
        let vals: HashMap<_, _> = ball.boundary().map(|v| (v, rng.random_range(-0.3..0.3))).collect();
        let trace = solve(&YamabeProblem::flat(ball, |v| vals[&v]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(trace.converged);
        flat += assert_edge_ratio(&trace.final_w);
    }
    for _ in 0..20 {
        assert_edge_ratio(&random_patch(&mut rng, 4, 0.2));
    }
    assert!(flat > 0);
}

#[test]
fn neighboring_differences_of_linear_factor() {
    let p = linear_factor(0.13, -0.07, &Ball::new(ORIGIN, 4)).unwrap();
    for &v in p.ball().vertices() {
        for u in neighbors(v) {
            if p.ball().contains(u) {
                assert!(are_adjacent(u, v));
                let d = u - v;
                let want = 0.13 * d.m as f64 - 0.07 * d.n as f64;
                assert!((p.w(u).unwrap() - p.w(v).unwrap() - want).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // a global constant added to w scales all lengths and leaves every angle alone
    #[test]
    fn curvature_ignores_global_scaling(seed in 0u64..10_000, shift in -2.0f64..2.0) {
        let mut rng = common::rng(seed);
        let p = random_patch(&mut rng, 3, 0.15);
        let q = p.with_w(p.w_values().iter().map(|x| x + shift).collect()).unwrap();
        let (a, b) = (p.interior_curvature().unwrap(), q.interior_curvature().unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let e = (LatticeVertex::new(0, 0), LatticeVertex::new(1, 0));
        let ratio = q.edge_length(e.0, e.1).unwrap() / p.edge_length(e.0, e.1).unwrap();
        prop_assert!((ratio - (2.0 * shift).exp()).abs() <= 1e-12 * ratio);
    }

    #[test]
    fn curvature_report_is_consistent(seed in 0u64..10_000) {
        let mut rng = common::rng(seed);
        let p = random_patch(&mut rng, 3, 0.2);
        let report = p.curvature().unwrap();
        for (v, k) in &report.k {
            let sum: f64 = p.star_angles(*v).unwrap().iter().sum();
            prop_assert!((k + sum - 2.0 * PI).abs() <= 1e-12);
            prop_assert!((report.cone_angle[v] - sum).abs() <= 1e-12);
        }
        prop_assert_eq!(report.k.len(), p.ball().interior().count());
    }
}
