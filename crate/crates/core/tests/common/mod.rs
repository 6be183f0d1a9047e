#![allow(dead_code)]

use std::f64::consts::PI;

use hexconf::lattice::{Ball, LatticeVertex};
use hexconf::quasiharm::{solve_averaging_system, VertexFunction};
use hexconf::trigeom::Triangle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Triangle with `l_i = li` and angles `(π - tj - tk, tj, tk)`.
pub fn from_angles(li: f64, tj: f64, tk: f64) -> Triangle {
    let si = (PI - tj - tk).sin();
    Triangle::new(li, li * tj.sin() / si, li * tk.sin() / si).unwrap()
}

/// Random triangle with every angle in `(0, bound]`.
pub fn random_bounded(rng: &mut impl Rng, li: f64, bound: f64) -> Triangle {
    loop {
        let tj = rng.random_range(0.0..bound);
        let tk = rng.random_range(0.0..bound);
        let ti = PI - tj - tk;
        if ti > 0.0 && ti <= bound && tj > 0.0 && tk > 0.0 {
            return from_angles(li, tj, tk);
        }
    }
}

/// Random pair sharing `l_i`, all angles at most `bound`.
pub fn random_pair(rng: &mut impl Rng, bound: f64) -> (Triangle, Triangle) {
    let li = rng.random_range(0.5..2.0);
    (random_bounded(rng, li, bound), random_bounded(rng, li, bound))
}

/// Random acute triangle with arbitrary scale.
pub fn random_acute(rng: &mut impl Rng) -> Triangle {
    let li = rng.random_range(0.2..5.0);
    random_bounded(rng, li, PI / 2.0 - 1e-3)
}

/// Six random directed weights, each at least `factor`, summing to one.
pub fn random_weights(rng: &mut impl Rng, factor: f64) -> [f64; 6] {
    let raw: [f64; 6] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
    let total: f64 = raw.iter().sum();
    let free = 1.0 - 6.0 * factor;
    raw.map(|r| factor + free * r / total)
}

/// Quasi-harmonic function with factor `factor` on the interior of `ball`.
pub fn synthetic_quasi_harmonic(
    rng: &mut impl Rng,
    ball: &Ball,
    factor: f64,
    boundary: impl Fn(&mut dyn FnMut() -> f64, LatticeVertex) -> f64,
) -> (VertexFunction, std::collections::BTreeMap<LatticeVertex, [f64; 6]>) {
    let mut weights = std::collections::BTreeMap::new();
    for v in ball.interior() {
        weights.insert(v, random_weights(rng, factor));
    }
    let mut bvals = std::collections::BTreeMap::new();
    {
        let mut draw = || rng.random_range(-1.0..1.0);
        for v in ball.boundary() {
            bvals.insert(v, boundary(&mut draw, v));
        }
    }
    let f = solve_averaging_system(ball, |v| weights[&v], |v| bvals[&v]).unwrap();
    (f, weights)
}
