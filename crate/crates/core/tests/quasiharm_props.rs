mod common;

use std::collections::BTreeMap;

use hexconf::lattice::{graph_distance, Ball, LatticeVertex, DIRECTIONS};
use hexconf::patch::{linear_factor, ConformalPatch};
use hexconf::quasiharm::*;
use hexconf::solver::{solve, YamabeProblem, DEFAULT_MAX_ITER, DEFAULT_TOL};
use rand::Rng;

const ORIGIN: LatticeVertex = LatticeVertex::ORIGIN;

struct WeightStats {
    sites: usize,
    sum_err: f64,
    residual: f64,
    slack: f64,
}

fn check_weights(p: &ConformalPatch, stats: &mut WeightStats) {
    let theta = p.max_inner_angle();
    for c in DIRECTIONS {
        for i in weight_sites(p, c) {
            let q = extract_weights(p, c, i, theta).unwrap();
            stats.sites += 1;
            stats.sum_err = stats.sum_err.max((q.weight_sum() - 1.0).abs());
            stats.residual = stats.residual.max(q.reconstruction_residual.abs());
            stats.slack = stats.slack.min(q.min_weight() - harmonic_factor_bound(theta));
        }
    }
}

#[test]
fn weights_on_linear_and_solved_patches() {
    let mut stats = WeightStats { sites: 0, sum_err: 0.0, residual: 0.0, slack: f64::INFINITY };
    for (m, n) in [(0.1, -0.05), (0.2, 0.0), (-0.15, 0.1), (0.2, 0.2), (0.0, 0.0)] {
        check_weights(&linear_factor(m, n, &Ball::new(ORIGIN, 5)).unwrap(), &mut stats);
    }
    let mut rng = common::rng(31);
    for _ in 0..3 {
        let ball = Ball::new(ORIGIN, 5);
        let vals: BTreeMap<_, _> = ball.boundary().map(|v| (v, rng.random_range(-0.15..0.15))).collect();
        let trace = solve(&YamabeProblem::flat(ball, |v| vals[&v]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(trace.converged);
        check_weights(&trace.final_w, &mut stats);
    }
    assert!(stats.sites > 0);
    assert!(stats.sum_err <= 1e-12, "Σμ error {}", stats.sum_err);
    assert!(stats.residual <= 1e-8, "reconstruction {}", stats.residual);
    assert!(stats.slack >= -1e-12, "weight below bound by {}", -stats.slack);
}

#[test]
fn weights_reject_curved_stars() {
    let p = ConformalPatch::from_fn(Ball::new(ORIGIN, 3), 1.0, |v| if v == ORIGIN { 0.1 } else { 0.0 }).unwrap();
    let r = extract_weights(&p, DIRECTIONS[0], ORIGIN, 1.4);
    assert!(matches!(r, Err(hexconf::error::Error::NotFlat { .. })));
}

#[test]
fn propagation_chain_on_synthetic_functions() {
    let ball = Ball::new(ORIGIN, 8);
    for seed in 0..100u64 {
        let mut rng = common::rng(seed);
        let factor = rng.random_range(0.02..1.0 / 6.0);
        let (f, _) = common::synthetic_quasi_harmonic(&mut rng, &ball, factor, |draw, _| draw());
        let level = ball.vertices().iter().map(|v| f[v]).fold(f64::NEG_INFINITY, f64::max);
        let mut centers = vec![(ORIGIN, 8)];
        for _ in 0..3 {
            let c = LatticeVertex::new(rng.random_range(-3..=3), rng.random_range(-3..=3));
            let d = graph_distance(ORIGIN, c) as u32;
            if d < 8 {
                centers.push((c, 8 - d));
            }
        }
        for (c, r) in centers {
            let gap = level - f[&c];
            let eps = (gap / factor.powi(r as i32)).max(1e-300);
            let report = verify_propagation(&f, factor, c, r, level, eps).unwrap();
            assert!(report.chain_violations.is_empty(), "seed {seed} center {c}: {:?}", report.chain_violations);
            assert!(report.hypotheses_hold && report.holds && !report.check_failed(), "seed {seed}");
            // direct restatement of the chain for every vertex
            for &v in Ball::new(c, r).vertices() {
                let d = graph_distance(c, v) as i32;
                assert!(level - f[&v] <= gap / factor.powi(d) + 1e-12);
            }
        }
    }
}

#[test]
fn two_function_search_on_slowly_varying_pairs() {
    let domain = Ball::new(ORIGIN, 12);
    let factor = 0.1;
    let eps = 0.1;
    for seed in 0..20u64 {
        let mut rng = common::rng(500 + seed);
        let (f1, _) = common::synthetic_quasi_harmonic(&mut rng, &domain, factor, |draw, _| 1.0 + 1e-7 * draw());
        let (f2, _) = common::synthetic_quasi_harmonic(&mut rng, &domain, factor, |draw, _| 0.02 * draw());
        let found = find_near_constant_ball(&f1, &f2, factor, 1, eps, &domain).unwrap();
        assert!(found.shells >= 2, "seed {seed}: {} shells", found.shells);
        assert!(found.verify(&f1, &f2, eps).unwrap(), "seed {seed}");
        // independent two-sided check
        for &v in Ball::new(found.center, found.radius).vertices() {
            assert!(f1[&v] <= found.level_f1 + 1e-12 && f1[&v] >= found.level_f1 - eps);
            assert!(f2[&v] <= found.level_f2 + 1e-12 && f2[&v] >= found.level_f2 - eps);
        }
    }
}
