//! Quasi-harmonic functions on the hexagonal lattice.
//!
//! A function is quasi-harmonic with factor `m` when each value is a convex
//! combination of its six neighbor values with every weight at least `m`.
//! Weights are directed: the weight of `j` at `i` need not match that of `i` at `j`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{graph_distance, neighbors, Ball, LatticeVertex};
use crate::patch::{ConformalPatch, FLAT_TOL};
use crate::sparse;
use crate::trigeom::{cot_lower, cot_upper, mean_value_coeffs, Triangle};

/// Values on a set of lattice vertices.
pub type VertexFunction = BTreeMap<LatticeVertex, f64>;

/// Directed averaging weights of `Δ_c w` at one vertex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasiHarmonicWeights {
    pub vertex: LatticeVertex,
    pub displacement: LatticeVertex,
    /// `μ_1..μ_6` in counter-clockwise neighbor order.
    pub weights: [f64; 6],
    /// `m(θ) / (6 M(θ))`
    pub harmonic_factor_bound: f64,
    pub a: [f64; 6],
    pub b: [f64; 6],
    /// `Δ_c w(i) - Σ μ_j Δ_c w(i_j)`
    pub reconstruction_residual: f64,
}

impl QuasiHarmonicWeights {
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `m(θ) / (6 M(θ))` with `m = cot θ`, `M = cot(π - 2θ)`.
pub fn harmonic_factor_bound(theta_bound: f64) -> f64 {
    cot_lower(theta_bound) / (6.0 * cot_upper(theta_bound))
}

/// Extracts the averaging weights expressing `Δ_c w(i)` through its neighbors.
///
/// Face `j` of the star of `i` is compared with its translate by `c`, rescaled
/// so that the edge opposite `i` keeps its length; the mean-value coefficients
/// `(a_j, b_j)` of that pair give `μ_j = (a_j + b_{j-1}) / Σ (a + b)`.
pub fn extract_weights(
    p: &ConformalPatch,
    c: LatticeVertex,
    i: LatticeVertex,
    theta_bound: f64,
) -> Result<QuasiHarmonicWeights> {
    let ball = p.ball();
    let ic = i + c;
    for x in [i, ic] {
        if !ball.is_interior(x) {
            return Err(Error::InvalidArgument(format!("{x} and its neighbors must lie in the patch")));
        }
    }
    for x in [i, ic] {
        let k = std::f64::consts::TAU - p.star_angles(x)?.iter().sum::<f64>();
        if k.abs() > FLAT_TOL {
            return Err(Error::NotFlat { vertex: x, curvature: k });
        }
    }
    let nb = neighbors(i);
    let mut pairs = Vec::with_capacity(6);
    for j in 0..6 {
        let src = p.triangle_at([i, nb[j], nb[(j + 1) % 6]])?;
        let img = p.triangle_at([ic, nb[j] + c, nb[(j + 1) % 6] + c])?;
        for (t, x) in [(&src, i), (&img, ic)] {
            let max = t.max_angle();
            if max > theta_bound {
                return Err(Error::NotAcute(format!("angle {max} in the star of {x} exceeds {theta_bound}")));
            }
        }
        let scale = src.l_i / img.l_i;
        let img = Triangle { l_i: src.l_i, l_j: img.l_j * scale, l_k: img.l_k * scale };
        pairs.push((src, img));
    }
    let mut a = [0.0; 6];
    let mut b = [0.0; 6];
    for (j, (src, img)) in pairs.iter().enumerate() {
        let coeffs = mean_value_coeffs(src, img, theta_bound)?;
        a[j] = coeffs.a;
        b[j] = coeffs.b;
    }
    let total: f64 = a.iter().sum::<f64>() + b.iter().sum::<f64>();
    let weights: [f64; 6] = std::array::from_fn(|j| (a[j] + b[(j + 5) % 6]) / total);

    let diff = |x: LatticeVertex| -> Result<f64> {
        match (p.w(x + c), p.w(x)) {
            (Some(hi), Some(lo)) => Ok(hi - lo),
            _ => Err(Error::IncompleteData(x + c)),
        }
    };
    let mut averaged = 0.0;
    for j in 0..6 {
        averaged += weights[j] * diff(nb[j])?;
    }
    let reconstruction_residual = diff(i)? - averaged;
    Ok(QuasiHarmonicWeights {
        vertex: i,
        displacement: c,
        weights,
        harmonic_factor_bound: harmonic_factor_bound(theta_bound),
        a,
        b,
        reconstruction_residual,
    })
}

/// Vertices `i` at which [`extract_weights`] has all the data it needs.
pub fn weight_sites(p: &ConformalPatch, c: LatticeVertex) -> Vec<LatticeVertex> {
    let ball = p.ball();
    ball.interior().filter(|&i| ball.is_interior(i + c)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagationReport {
    pub center: LatticeVertex,
    pub radius: u32,
    pub level: f64,
    pub epsilon: f64,
    pub factor: f64,
    pub min_over_ball: f64,
    /// `f(center) >= M - ε m^R` and `f <= M` on the ball.
    pub hypotheses_hold: bool,
    /// `min f >= M - ε` on the ball.
    pub holds: bool,
    /// Vertices with `f < M - ε`.
    pub violations: Vec<LatticeVertex>,
    /// Vertices breaking `M - f(j) <= (M - f(center)) / m^{d(center, j)}`.
    pub chain_violations: Vec<LatticeVertex>,
}

impl PropagationReport {
    /// The hypotheses hold but the conclusion or the distance chain fails.
    pub fn check_failed(&self) -> bool {
        self.hypotheses_hold && (!self.holds || !self.chain_violations.is_empty())
    }
}

fn level_tol(level: f64) -> f64 {
    1e-12 * level.abs().max(1.0)
}

/// Checks the one-function propagation estimate on `B(center, radius)`.
pub fn verify_propagation(
    f: &VertexFunction,
    factor: f64,
    center: LatticeVertex,
    radius: u32,
    level: f64,
    epsilon: f64,
) -> Result<PropagationReport> {
    if !(factor > 0.0 && factor <= 1.0 / 6.0) {
        return Err(Error::InvalidArgument(format!("harmonic factor {factor} not in (0, 1/6]")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be positive")));
    }
    let ball = Ball::new(center, radius);
    let mut values = Vec::with_capacity(ball.len());
    for &v in ball.vertices() {
        values.push((v, *f.get(&v).ok_or(Error::IncompleteData(v))?));
    }
    let f_center = f[&center];
    let tol = level_tol(level);
    let hypotheses_hold = f_center >= level - epsilon * factor.powi(radius as i32) - tol
        && values.iter().all(|&(_, x)| x <= level + tol);
    let min_over_ball = values.iter().map(|&(_, x)| x).fold(f64::INFINITY, f64::min);
    let floor = level - epsilon - tol;
    let violations: Vec<_> = values.iter().filter(|&&(_, x)| x < floor).map(|&(v, _)| v).collect();
    let gap = level - f_center;
    let chain_violations = values
        .iter()
        .filter(|&&(v, x)| {
            let d = graph_distance(center, v) as i32;
            level - x > gap / factor.powi(d) + tol
        })
        .map(|&(v, _)| v)
        .collect();
    Ok(PropagationReport {
        center,
        radius,
        level,
        epsilon,
        factor,
        min_over_ball,
        hypotheses_hold,
        holds: min_over_ball >= floor,
        violations,
        chain_violations,
    })
}

/// A ball on which two functions are simultaneously within `ε` below their levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NearConstantBall {
    pub center: LatticeVertex,
    pub radius: u32,
    /// Level of `f1` (its maximum over the domain).
    pub level_f1: f64,
    /// Level of `f2`.
    pub level_f2: f64,
    /// Vertex where `f1` is nearly maximal; the search scanned balls around it.
    pub anchor: LatticeVertex,
    /// Number of nested shells `n`.
    pub shells: u64,
    /// Shell index `k` at which the maximum of `f2` stalled.
    pub shell: u64,
}

impl NearConstantBall {
    /// Re-checks both two-sided bounds directly on the returned ball.
    pub fn verify(&self, f1: &VertexFunction, f2: &VertexFunction, epsilon: f64) -> Result<bool> {
        let ball = Ball::new(self.center, self.radius);
        let in_band = |f: &VertexFunction, level: f64| -> Result<bool> {
            let tol = level_tol(level);
            for &v in ball.vertices() {
                let x = *f.get(&v).ok_or(Error::IncompleteData(v))?;
                if x > level + tol || x < level - epsilon - tol {
                    return Ok(false);
                }
            }
            Ok(true)
        };
        Ok(in_band(f1, self.level_f1)? && in_band(f2, self.level_f2)?)
    }
}

fn max_on(f: &VertexFunction, ball: &Ball) -> Result<(LatticeVertex, f64)> {
    let mut best: Option<(LatticeVertex, f64)> = None;
    for &v in ball.vertices() {
        let x = *f.get(&v).ok_or(Error::IncompleteData(v))?;
        if best.is_none_or(|(_, b)| x > b) {
            best = Some((v, x));
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("empty ball".into()))
}

/// Constructive two-function search restricted to a finite domain.
///
/// `M` is the maximum of `f1` on the domain. With `M₂ = max |f2|`, the number of
/// shells is the least integer `n > 2M₂ / (ε m^R)`; an anchor `i` with
/// `f1(i) > M - ε m^{nR}` and `B(i, nR)` inside the domain is required. The
/// running maxima `F(k)` of `f2` over `B(i, kR)` must stall somewhere, and the
/// returned ball is centered where `f2` attains `F(k-1)`.
pub fn find_near_constant_ball(
    f1: &VertexFunction,
    f2: &VertexFunction,
    factor: f64,
    radius: u32,
    epsilon: f64,
    domain: &Ball,
) -> Result<NearConstantBall> {
    if !(factor > 0.0 && factor <= 1.0 / 6.0) {
        return Err(Error::InvalidArgument(format!("harmonic factor {factor} not in (0, 1/6]")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be positive")));
    }
    if radius == 0 {
        return Err(Error::InvalidArgument("ball radius must be positive".into()));
    }
    let mut lo1 = f64::INFINITY;
    let mut hi1 = f64::NEG_INFINITY;
    let mut lo2 = f64::INFINITY;
    let mut hi2 = f64::NEG_INFINITY;
    for &v in domain.vertices() {
        let a = *f1.get(&v).ok_or(Error::IncompleteData(v))?;
        let b = *f2.get(&v).ok_or(Error::IncompleteData(v))?;
        lo1 = lo1.min(a);
        hi1 = hi1.max(a);
        lo2 = lo2.min(b);
        hi2 = hi2.max(b);
    }
    if hi1 - lo1 <= level_tol(hi1) && hi2 - lo2 <= level_tol(hi2) && domain.contains_ball(domain.center(), radius) {
        return Ok(NearConstantBall {
            center: domain.center(),
            radius,
            level_f1: hi1,
            level_f2: hi2,
            anchor: domain.center(),
            shells: 0,
            shell: 0,
        });
    }
    let level = hi1;
    let sup2 = lo2.abs().max(hi2.abs());
    let gap = epsilon * factor.powi(radius as i32);
    let ratio = 2.0 * sup2 / gap;
    let available = domain.radius() as u64;
    if !ratio.is_finite() || ratio >= available as f64 {
        let required = if ratio < 1e18 { (ratio.floor() as u64 + 1) * radius as u64 } else { u64::MAX };
        return Err(Error::DomainTooSmall { required, available });
    }
    let shells = ratio.floor() as u64 + 1;
    let outer = shells * radius as u64;
    if outer > available {
        return Err(Error::DomainTooSmall { required: outer, available });
    }
    let outer = outer as u32;
    let threshold = level - epsilon * factor.powi(outer as i32);
    // highest f1 first, ties broken by vertex order
    let mut candidates: Vec<(LatticeVertex, f64)> = domain
        .vertices()
        .iter()
        .map(|&v| (v, f1[&v]))
        .filter(|&(v, x)| x > threshold && domain.contains_ball(v, outer))
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let &(anchor, _) = candidates.first().ok_or_else(|| {
        Error::NotFound(format!("no vertex with f1 > {threshold} whose {outer}-ball fits the domain"))
    })?;

    let mut prev = max_on(f2, &Ball::new(anchor, 0))?;
    for k in 1..=shells {
        let cur = max_on(f2, &Ball::new(anchor, (k * radius as u64) as u32))?;
        if cur.1 - prev.1 <= gap {
            return Ok(NearConstantBall {
                center: prev.0,
                radius,
                level_f1: level,
                level_f2: cur.1,
                anchor,
                shells,
                shell: k,
            });
        }
        prev = cur;
    }
    Err(Error::NotFound("running maxima of f2 never stalled".into()))
}

/// Solves `f(i) = Σ μ_j f(i_j)` on the interior of `ball` with `f` prescribed on the boundary.
///
/// `weights(i)` gives the six directed weights at an interior vertex in
/// counter-clockwise neighbor order.
pub fn solve_averaging_system(
    ball: &Ball,
    weights: impl Fn(LatticeVertex) -> [f64; 6],
    boundary: impl Fn(LatticeVertex) -> f64,
) -> Result<VertexFunction> {
    let interior: Vec<LatticeVertex> = ball.interior().collect();
    let index: BTreeMap<LatticeVertex, usize> = interior.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut entries = Vec::with_capacity(7 * interior.len());
    let mut rhs = vec![0.0; interior.len()];
    for (row, &v) in interior.iter().enumerate() {
        entries.push((row, row, 1.0));
        let mu = weights(v);
        for (j, u) in neighbors(v).into_iter().enumerate() {
            match index.get(&u) {
                Some(&col) => entries.push((row, col, -mu[j])),
                None => rhs[row] += mu[j] * boundary(u),
            }
        }
    }
    let x = sparse::solve(interior.len(), &entries, &rhs)?;
    let mut out = VertexFunction::new();
    for &v in ball.vertices() {
        let value = match index.get(&v) {
            Some(&k) => x[k],
            None => boundary(v),
        };
        out.insert(v, value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch::linear_factor;
    use std::f64::consts::PI;

    fn v(m: i64, n: i64) -> LatticeVertex {
        LatticeVertex::new(m, n)
    }

    #[test]
    fn regular_weights_are_uniform() {
        let p = ConformalPatch::regular(Ball::new(v(0, 0), 3));
        for c in [v(1, 0), v(0, 1), v(-1, -1)] {
            let q = extract_weights(&p, c, v(0, 0), 5.0 * PI / 12.0).unwrap();
            for mu in q.weights {
                assert!((mu - 1.0 / 6.0).abs() < 1e-14, "{:?}", q.weights);
            }
            assert_eq!(q.reconstruction_residual, 0.0);
        }
    }

    #[test]
    fn weight_bound_linear_family() {
        let theta = 5.0 * PI / 12.0;
        let p = linear_factor(0.1, 0.0, &Ball::new(v(0, 0), 3)).unwrap();
        let bound = (2.0 - 3f64.sqrt()) / (6.0 * 3f64.sqrt());
        assert!((harmonic_factor_bound(theta) - bound).abs() < 1e-15);
        let q = extract_weights(&p, v(1, 0), v(0, 0), theta).unwrap();
        assert!((q.weight_sum() - 1.0).abs() < 1e-12);
        assert!(q.min_weight() >= bound - 1e-12);
        assert!(q.reconstruction_residual.abs() < 1e-8);
    }

    #[test]
    fn weights_reject_bad_input() {
        let b = Ball::new(v(0, 0), 3);
        let bumped = ConformalPatch::from_fn(b.clone(), 1.0, |x| if x == v(0, 0) { 0.05 } else { 0.0 }).unwrap();
        assert!(matches!(extract_weights(&bumped, v(1, 0), v(0, 0), 1.2), Err(Error::NotFlat { .. })));
        let p = ConformalPatch::regular(b);
        assert!(matches!(extract_weights(&p, v(1, 0), v(0, 0), 1.0), Err(Error::NotAcute(_))));
        assert!(extract_weights(&p, v(1, 0), v(2, 0), 1.2).is_err());
    }

    #[test]
    fn constant_function_propagates() {
        let f: VertexFunction = Ball::new(v(0, 0), 4).vertices().iter().map(|&x| (x, 2.5)).collect();
        let r = verify_propagation(&f, 0.1, v(0, 0), 4, 2.5, 0.01).unwrap();
        assert!(r.hypotheses_hold && r.holds && r.chain_violations.is_empty());
        assert_eq!(r.min_over_ball, 2.5);
    }

    #[test]
    fn deliberate_violation_reported() {
        let mut f: VertexFunction = Ball::new(v(0, 0), 4).vertices().iter().map(|&x| (x, 1.0)).collect();
        f.insert(v(2, 1), 0.5);
        let r = verify_propagation(&f, 0.1, v(0, 0), 3, 1.0, 0.1).unwrap();
        assert!(r.hypotheses_hold && !r.holds && r.check_failed());
        assert_eq!(r.violations, vec![v(2, 1)]);
        assert_eq!(r.chain_violations, vec![v(2, 1)]);
    }

    #[test]
    fn propagation_missing_data() {
        let f: VertexFunction = Ball::new(v(0, 0), 1).vertices().iter().map(|&x| (x, 0.0)).collect();
        assert!(matches!(verify_propagation(&f, 0.1, v(0, 0), 2, 0.0, 0.1), Err(Error::IncompleteData(_))));
    }

    #[test]
    fn constant_pair_returns_immediately() {
        let d = Ball::new(v(0, 0), 5);
        let f1: VertexFunction = d.vertices().iter().map(|&x| (x, 0.3)).collect();
        let f2: VertexFunction = d.vertices().iter().map(|&x| (x, -7.0)).collect();
        let r = find_near_constant_ball(&f1, &f2, 0.1, 2, 1e-3, &d).unwrap();
        assert_eq!((r.level_f1, r.level_f2), (0.3, -7.0));
        assert!(r.verify(&f1, &f2, 1e-3).unwrap());
    }

    #[test]
    fn tiny_gap_needs_bigger_domain() {
        let d = Ball::new(v(0, 0), 6);
        let f1: VertexFunction = d.vertices().iter().map(|&x| (x, x.m as f64 * 0.01)).collect();
        let f2: VertexFunction = d.vertices().iter().map(|&x| (x, 1.0 + x.n as f64 * 0.01)).collect();
        // n > 2 * 1.06 / (3e-2 * 0.1^2) = 7066.67
        match find_near_constant_ball(&f1, &f2, 0.1, 2, 3e-2, &d) {
            Err(Error::DomainTooSmall { required, available }) => {
                assert_eq!(available, 6);
                assert_eq!(required, 7067 * 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn averaging_system_reproduces_linear_functions() {
        // uniform weights average affine functions exactly
        let b = Ball::new(v(0, 0), 4);
        let f = solve_averaging_system(&b, |_| [1.0 / 6.0; 6], |x| 2.0 * x.m as f64 - x.n as f64).unwrap();
        for (x, val) in f {
            assert!((val - (2.0 * x.m as f64 - x.n as f64)).abs() < 1e-12);
        }
    }
}
