//! Euclidean triangle calculus.
//!
//! Triangles are given by three edge lengths, each labelled by the vertex it
//! faces: `l_i` is the edge not touching vertex `i`. Along a [`DeformPath`] the
//! edge `l_i` stays fixed while the other two move, and every length and angle
//! changes monotonically. [`mean_value_coeffs`] integrates the cotangent formula
//! along such a path.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples per leg used by [`deform_path`] when callers have no preference.
pub const DEFAULT_LEG_SAMPLES: usize = 512;

/// Samples per leg used by [`mean_value_coeffs`].
pub const MEAN_VALUE_LEG_SAMPLES: usize = 2048;

/// Per-sample monotonicity tolerance for deformation paths.
pub const MONOTONE_TOL: f64 = 1e-10;

const EVENT_TOL: f64 = 1e-12;
const MAX_REFINEMENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub l_i: f64,
    pub l_j: f64,
    pub l_k: f64,
}

impl Triangle {
    /// Checks positivity and the strict triangle inequalities.
    pub fn new(l_i: f64, l_j: f64, l_k: f64) -> Result<Self> {
        let t = Triangle { l_i, l_j, l_k };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let ls = [self.l_i, self.l_j, self.l_k];
        if ls.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(Error::InvalidTriangle(format!("non-positive edge length in {ls:?}")));
        }
        if self.quad_area_factor() <= 0.0 {
            return Err(Error::InvalidTriangle(format!("triangle inequality violated by {ls:?}")));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn lengths(&self) -> [f64; 3] {
        [self.l_i, self.l_j, self.l_k]
    }

    pub fn from_lengths(ls: [f64; 3]) -> Result<Self> {
        Triangle::new(ls[0], ls[1], ls[2])
    }

    pub fn scaled(&self, s: f64) -> Triangle {
        Triangle { l_i: s * self.l_i, l_j: s * self.l_j, l_k: s * self.l_k }
    }

    // Kahan's product (a+(b+c))(c-(a-b))(c+(a-b))(a+(b-c)) for sorted a >= b >= c; equals 16 A^2.
    fn quad_area_factor(&self) -> f64 {
        let mut s = self.lengths();
        s.sort_by(|x, y| y.total_cmp(x));
        let [a, b, c] = s;
        (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    }

    pub fn area(&self) -> f64 {
        0.25 * self.quad_area_factor().max(0.0).sqrt()
    }

    /// Inner angles `(θ_i, θ_j, θ_k)`.
    pub fn angles(&self) -> [f64; 3] {
        let four_area = self.quad_area_factor().max(0.0).sqrt();
        let ls = self.lengths();
        std::array::from_fn(|x| {
            let (lx, ly, lz) = (ls[x], ls[(x + 1) % 3], ls[(x + 2) % 3]);
            four_area.atan2((ly - lx) * (ly + lx) + lz * lz)
        })
    }

    pub fn max_angle(&self) -> f64 {
        self.angles().into_iter().fold(0.0, f64::max)
    }

    pub fn is_acute(&self) -> bool {
        self.angles().iter().all(|&a| a < FRAC_PI_2)
    }
}

/// Inner angles of `t`, rejecting degenerate input.
pub fn angles(t: &Triangle) -> Result<[f64; 3]> {
    t.validate()?;
    Ok(t.angles())
}

/// `d[x][y] = ∂θ_x/∂u_y` with `u_y = log l_y` and the other two lengths held fixed.
///
/// Off-diagonal entries are `-cot` of the third angle; the diagonal is the sum of
/// the cotangents of the two other angles. Every column sums to zero.
pub fn angle_log_derivatives(t: &Triangle) -> Result<[[f64; 3]; 3]> {
    let th = angles(t)?;
    let cot = th.map(|a| 1.0 / a.tan());
    let mut d = [[0.0; 3]; 3];
    for x in 0..3 {
        for y in 0..3 {
            d[x][y] = if x == y {
                cot[(x + 1) % 3] + cot[(x + 2) % 3]
            } else {
                -cot[3 - x - y]
            };
        }
    }
    Ok(d)
}

/// Which branch of the monotone flow construction produced a leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowCase {
    /// `θ_j` and `θ_k` both non-decreasing: angles interpolated linearly.
    AnglesRising,
    /// `θ_j` and `θ_k` both non-increasing.
    AnglesFalling,
    /// `l_j` already at its target; `l_k` interpolated linearly.
    LjFixed,
    /// `l_k` already at its target.
    LkFixed,
    /// `θ_i` held fixed while `θ_j` grows and `θ_k` shrinks (apex on the circumcircle).
    CircumcircleJ,
    /// Mirror of [`FlowCase::CircumcircleJ`].
    CircumcircleK,
    /// One length held fixed while the other moves towards its target.
    /// `fixed_j` tells which of `l_j`, `l_k` stays put.
    OneLengthFixed { fixed_j: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub triangle: Triangle,
    pub u_j: f64,
    pub u_k: f64,
}

/// A sampled deformation between two triangles sharing `l_i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeformPath {
    pub samples: Vec<PathSample>,
    pub cases: Vec<FlowCase>,
    /// Samples per leg; leg `k` spans `samples[k * n ..= (k + 1) * n]`.
    pub leg_samples: usize,
}

impl DeformPath {
    /// Largest backwards step of any monotone coordinate, measured against the
    /// direction it moves over the whole path.
    pub fn monotonicity_defect(&self) -> f64 {
        let coords: Vec<[f64; 5]> = self.samples.iter().map(|s| monotone_coords(&s.triangle)).collect();
        let (first, last) = match (coords.first(), coords.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return 0.0,
        };
        let mut worst = 0.0f64;
        for q in 0..5 {
            let total = last[q] - first[q];
            let mut lo_step = 0.0f64;
            let mut hi_step = 0.0f64;
            for w in coords.windows(2) {
                let step = w[1][q] - w[0][q];
                lo_step = lo_step.min(step);
                hi_step = hi_step.max(step);
            }
            // a constant coordinate may wobble in either direction
            let defect = if total > 0.0 {
                -lo_step
            } else if total < 0.0 {
                hi_step
            } else {
                hi_step.max(-lo_step)
            };
            worst = worst.max(defect);
        }
        worst
    }

    pub fn is_monotone(&self, tol: f64) -> bool {
        self.monotonicity_defect() <= tol
    }

    pub fn source(&self) -> &Triangle {
        &self.samples[0].triangle
    }

    pub fn target(&self) -> &Triangle {
        &self.samples[self.samples.len() - 1].triangle
    }
}

// (l_j, l_k, θ_i, θ_j, θ_k)
fn monotone_coords(t: &Triangle) -> [f64; 5] {
    let a = t.angles();
    [t.l_j, t.l_k, a[0], a[1], a[2]]
}

#[derive(Debug, Clone, Copy)]
enum Leg {
    /// `(θ_j, θ_k)` interpolated linearly at fixed `l_i`.
    Angles { l_i: f64, from: [f64; 2], to: [f64; 2] },
    /// `(l_j, l_k)` interpolated linearly.
    Lengths { l_i: f64, from: [f64; 2], to: [f64; 2] },
}

impl Leg {
    fn eval(&self, s: f64) -> Triangle {
        match *self {
            Leg::Angles { l_i, from, to } => {
                let tj = lerp(from[0], to[0], s);
                let tk = lerp(from[1], to[1], s);
                let si = (PI - tj - tk).sin();
                Triangle { l_i, l_j: l_i * tj.sin() / si, l_k: l_i * tk.sin() / si }
            }
            Leg::Lengths { l_i, from, to } => Triangle {
                l_i,
                l_j: lerp(from[0], to[0], s),
                l_k: lerp(from[1], to[1], s),
            },
        }
    }

    fn truncated(&self, s: f64) -> Leg {
        match *self {
            Leg::Angles { l_i, from, to } => Leg::Angles {
                l_i,
                from,
                to: [lerp(from[0], to[0], s), lerp(from[1], to[1], s)],
            },
            Leg::Lengths { l_i, from, to } => Leg::Lengths {
                l_i,
                from,
                to: [lerp(from[0], to[0], s), lerp(from[1], to[1], s)],
            },
        }
    }
}

fn lerp(a: f64, b: f64, s: f64) -> f64 {
    if s == 1.0 {
        b
    } else {
        a + (b - a) * s
    }
}

// sign of target - current with a dead band
fn trend(current: f64, target: f64, scale: f64) -> i8 {
    let d = target - current;
    if d.abs() <= 1e-11 * scale.max(1.0) {
        0
    } else if d > 0.0 {
        1
    } else {
        -1
    }
}

/// Smallest `s` in `[0, 1]` at which any watched coordinate reaches its target,
/// or `1` if none does.
fn first_event(leg: &Leg, watch: &[usize], target: &[f64; 5]) -> f64 {
    let start = monotone_coords(&leg.eval(0.0));
    let end = monotone_coords(&leg.eval(1.0));
    let mut best = 1.0f64;
    for &q in watch {
        let d0 = start[q] - target[q];
        let d1 = end[q] - target[q];
        if d0 == 0.0 || d0.signum() == d1.signum() {
            continue;
        }
        // keep `lo` on the not-yet-reached side so the leg never overshoots
        let (mut lo, mut hi) = (0.0f64, best);
        if (monotone_coords(&leg.eval(hi))[q] - target[q]).signum() == d0.signum() {
            continue;
        }
        while hi - lo > EVENT_TOL {
            let mid = 0.5 * (lo + hi);
            if (monotone_coords(&leg.eval(mid))[q] - target[q]).signum() == d0.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = best.min(lo);
    }
    best
}

fn check_acute(t: &Triangle, what: &str) -> Result<()> {
    t.validate()?;
    if !t.is_acute() {
        return Err(Error::NotAcute(format!("{what} {t:?} has an angle >= π/2")));
    }
    Ok(())
}

fn plan_legs(source: &Triangle, target: &Triangle) -> Result<Vec<(Leg, FlowCase)>> {
    let l_i = source.l_i;
    let goal = monotone_coords(target);
    let mut legs = Vec::new();
    let mut cur = *source;
    for _ in 0..4 {
        let c = monotone_coords(&cur);
        let d_lj = trend(c[0], goal[0], goal[0]);
        let d_lk = trend(c[1], goal[1], goal[1]);
        let d_tj = trend(c[3], goal[3], 1.0);
        let d_tk = trend(c[4], goal[4], 1.0);
        if d_lj == 0 && d_lk == 0 && d_tj == 0 && d_tk == 0 {
            break;
        }
        let cur_angles = [c[3], c[4]];
        let goal_angles = [goal[3], goal[4]];
        let cur_lengths = [cur.l_j, cur.l_k];
        let goal_lengths = [target.l_j, target.l_k];

        if d_tj >= 0 && d_tk >= 0 {
            legs.push((Leg::Angles { l_i, from: cur_angles, to: goal_angles }, FlowCase::AnglesRising));
            return Ok(legs);
        }
        if d_tj <= 0 && d_tk <= 0 {
            legs.push((Leg::Angles { l_i, from: cur_angles, to: goal_angles }, FlowCase::AnglesFalling));
            return Ok(legs);
        }
        if d_lj == 0 {
            legs.push((Leg::Lengths { l_i, from: cur_lengths, to: goal_lengths }, FlowCase::LjFixed));
            return Ok(legs);
        }
        if d_lk == 0 {
            legs.push((Leg::Lengths { l_i, from: cur_lengths, to: goal_lengths }, FlowCase::LkFixed));
            return Ok(legs);
        }

        // θ_j and θ_k now move in strictly opposite directions.
        let (leg, case, watch): (Leg, FlowCase, &[usize]) = if d_tj == d_lj && d_tk == d_lk {
            // θ_i fixed: slide the apex along the circumcircle until an angle hits its target
            let step = (goal[3] - c[3]).abs().min((goal[4] - c[4]).abs());
            let dir = f64::from(d_tj);
            let to = [c[3] + dir * step, c[4] - dir * step];
            let case = if d_tj > 0 { FlowCase::CircumcircleJ } else { FlowCase::CircumcircleK };
            (Leg::Angles { l_i, from: cur_angles, to }, case, &[0, 1])
        } else if d_lj == d_lk {
            // both lengths move the same way; hold the one whose angle runs against it
            let fixed_j = d_tj != d_lj;
            let to = if fixed_j { [cur.l_j, target.l_k] } else { [target.l_j, cur.l_k] };
            let leg = Leg::Lengths { l_i, from: cur_lengths, to };
            // stay strictly inside the triangle inequalities
            let cap = validity_cap(&leg);
            (leg.truncated(cap), FlowCase::OneLengthFixed { fixed_j }, &[2, 3, 4])
        } else {
            return Err(Error::Degenerate(format!(
                "no monotone flow case applies between {cur:?} and {target:?}"
            )));
        };
        let s = first_event(&leg, watch, &goal);
        let leg = leg.truncated(s);
        cur = leg.eval(1.0);
        cur.validate()?;
        legs.push((leg, case));
    }
    if legs.len() > 3 {
        return Err(Error::Degenerate("monotone flow needed more than three legs".into()));
    }
    // close the remaining round-off gap
    if let Some((leg, _)) = legs.last_mut() {
        match leg {
            Leg::Angles { to, .. } if legs_close(&cur, target) => *to = [goal[3], goal[4]],
            Leg::Lengths { to, .. } if legs_close(&cur, target) => *to = [target.l_j, target.l_k],
            _ => {}
        }
    }
    Ok(legs)
}

fn legs_close(a: &Triangle, b: &Triangle) -> bool {
    (a.l_j - b.l_j).abs() <= 1e-9 * b.l_j && (a.l_k - b.l_k).abs() <= 1e-9 * b.l_k
}

fn validity_cap(leg: &Leg) -> f64 {
    if leg.eval(1.0).quad_area_factor() > 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > EVENT_TOL {
        let mid = 0.5 * (lo + hi);
        if leg.eval(mid).quad_area_factor() > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn sample_legs(source: &Triangle, legs: &[(Leg, FlowCase)], steps: usize, target: &Triangle) -> DeformPath {
    let steps = steps.max(1);
    let mut samples = Vec::with_capacity(legs.len().max(1) * steps + 1);
    let push = |samples: &mut Vec<PathSample>, t: f64, tri: Triangle| {
        samples.push(PathSample {
            t,
            triangle: tri,
            u_j: (tri.l_j / source.l_j).ln(),
            u_k: (tri.l_k / source.l_k).ln(),
        });
    };
    if legs.is_empty() {
        for s in 0..=steps {
            push(&mut samples, s as f64 / steps as f64, *source);
        }
    } else {
        let n = legs.len() as f64;
        push(&mut samples, 0.0, *source);
        for (k, (leg, _)) in legs.iter().enumerate() {
            for s in 1..=steps {
                let local = s as f64 / steps as f64;
                push(&mut samples, (k as f64 + local) / n, leg.eval(local));
            }
        }
        let last = samples.len() - 1;
        samples[last].triangle = *target;
        samples[last].u_j = (target.l_j / source.l_j).ln();
        samples[last].u_k = (target.l_k / source.l_k).ln();
    }
    DeformPath { samples, cases: legs.iter().map(|(_, c)| *c).collect(), leg_samples: steps }
}

/// Monotone deformation from `source` to `target` keeping `l_i` fixed.
///
/// Both triangles must be strictly acute and share `l_i`. The path is made of at
/// most three legs; `steps` is the number of samples per leg.
pub fn deform_path(source: &Triangle, target: &Triangle, steps: usize) -> Result<DeformPath> {
    if (source.l_i - target.l_i).abs() > 1e-12 * source.l_i.max(target.l_i) {
        return Err(Error::InvalidArgument(format!(
            "fixed edge differs: {} vs {}",
            source.l_i, target.l_i
        )));
    }
    check_acute(source, "source")?;
    check_acute(target, "target")?;
    let target = Triangle { l_i: source.l_i, ..*target };
    let legs = plan_legs(source, &target)?;
    let mut steps = steps.max(1);
    let mut path = sample_legs(source, &legs, steps, &target);
    for _ in 0..MAX_REFINEMENTS {
        if path.is_monotone(MONOTONE_TOL) {
            return Ok(path);
        }
        steps *= 2;
        path = sample_legs(source, &legs, steps, &target);
    }
    if path.is_monotone(MONOTONE_TOL) {
        Ok(path)
    } else {
        Err(Error::Degenerate(format!(
            "deformation path not monotone (defect {:e})",
            path.monotonicity_defect()
        )))
    }
}

/// Lower cotangent bound `cot θ`.
pub fn cot_lower(theta_bound: f64) -> f64 {
    1.0 / theta_bound.tan()
}

/// Upper cotangent bound `cot(π - 2θ)`.
pub fn cot_upper(theta_bound: f64) -> f64 {
    1.0 / (PI - 2.0 * theta_bound).tan()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanValueCoeffs {
    pub a: f64,
    pub b: f64,
    pub theta_bound: f64,
    pub lower: f64,
    pub upper: f64,
    /// `log(l_j2 / l_j1)`
    pub u_j: f64,
    /// `log(l_k2 / l_k1)`
    pub u_k: f64,
}

impl MeanValueCoeffs {
    /// Right-hand side `-a ũ_j - b ũ_k` of the angle identity.
    pub fn predicted_angle_change(&self) -> f64 {
        -self.a * self.u_j - self.b * self.u_k
    }

    pub fn within_bounds(&self, slack: f64) -> bool {
        [self.a, self.b]
            .iter()
            .all(|&c| c >= self.lower - slack && c <= self.upper + slack)
    }
}

/// Averaged cotangents `a`, `b` with `θ_i(target) - θ_i(source) = -a ũ_j - b ũ_k`.
///
/// `a` is the mean of `cot θ_k` against `du_j` along the monotone path, `b` the
/// mean of `cot θ_j` against `du_k` (composite trapezoid per leg with one
/// Richardson step). A vanishing `ũ`
/// leaves its coefficient free; it is then pinned to the clamped endpoint
/// cotangent.
pub fn mean_value_coeffs(source: &Triangle, target: &Triangle, theta_bound: f64) -> Result<MeanValueCoeffs> {
    mean_value_coeffs_with_steps(source, target, theta_bound, MEAN_VALUE_LEG_SAMPLES)
}

pub fn mean_value_coeffs_with_steps(
    source: &Triangle,
    target: &Triangle,
    theta_bound: f64,
    steps: usize,
) -> Result<MeanValueCoeffs> {
    if !(theta_bound > 0.0 && theta_bound < FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("angle bound {theta_bound} not in (0, π/2)")));
    }
    for (t, what) in [(source, "source"), (target, "target")] {
        t.validate()?;
        let max = t.max_angle();
        if max > theta_bound + 1e-12 {
            return Err(Error::NotAcute(format!("{what} angle {max} exceeds bound {theta_bound}")));
        }
    }
    let path = deform_path(source, target, steps)?;
    let lower = cot_lower(theta_bound);
    let upper = cot_upper(theta_bound);
    let cots: Vec<[f64; 3]> = path.samples.iter().map(|s| s.triangle.angles().map(|a| 1.0 / a.tan())).collect();
    // trapezoid sums on the full and the half-resolution grid of each leg,
    // combined by one Richardson step
    let trapezoid = |lo: usize, hi: usize, stride: usize, angle: usize, u: fn(&PathSample) -> f64| {
        let mut acc = 0.0;
        let mut k = lo;
        while k + stride <= hi {
            let du = u(&path.samples[k + stride]) - u(&path.samples[k]);
            acc += 0.5 * (cots[k][angle] + cots[k + stride][angle]) * du;
            k += stride;
        }
        acc
    };
    let n = path.leg_samples;
    let (mut int_a, mut int_b) = (0.0, 0.0);
    for leg in 0..path.cases.len() {
        let (lo, hi) = (leg * n, (leg + 1) * n);
        for (acc, angle, u) in [
            (&mut int_a, 2, (|s: &PathSample| s.u_j) as fn(&PathSample) -> f64),
            (&mut int_b, 1, |s: &PathSample| s.u_k),
        ] {
            let fine = trapezoid(lo, hi, 1, angle, u);
            *acc += if n % 2 == 0 { (4.0 * fine - trapezoid(lo, hi, 2, angle, u)) / 3.0 } else { fine };
        }
    }
    let last = &path.samples[path.samples.len() - 1];
    let (du_j, du_k) = (last.u_j, last.u_k);
    let end = cots[cots.len() - 1];
    let u_j = (target.l_j / source.l_j).ln();
    let u_k = (target.l_k / source.l_k).ln();
    let a = if du_j != 0.0 { int_a / du_j } else { end[2].max(lower).min(upper) };
    let b = if du_k != 0.0 { int_b / du_k } else { end[1].max(lower).min(upper) };
    Ok(MeanValueCoeffs { a, b, theta_bound, lower, upper, u_j, u_k })
}
