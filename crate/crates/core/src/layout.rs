//! Developing map of a patch into the plane.
//!
//! Faces are glued one at a time across shared edges, breadth first from a base
//! face. Each placed face keeps its own three points, so side lengths are
//! always exact; a vertex position is the point from its first placement.
//! Curvature shows up as the holonomy residual and, for flat factors that do not
//! come from the regular tiling, eventually as faces overlapping in the plane.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{neighbors, Ball, Face, LatticeVertex};
use crate::patch::{linear_factor, ConformalPatch};

/// A face together with the plane images of its vertices (in `face.vertices()` order).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacedFace {
    pub face: Face,
    pub points: [Complex64; 3],
}

impl PlacedFace {
    pub fn signed_area(&self) -> f64 {
        polygon_area(&self.points)
    }

    fn bbox(&self) -> [f64; 4] {
        let xs = self.points.map(|p| p.re);
        let ys = self.points.map(|p| p.im);
        [
            xs.iter().copied().fold(f64::INFINITY, f64::min),
            xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ys.iter().copied().fold(f64::INFINITY, f64::min),
            ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct LayoutResult {
    pub positions: BTreeMap<LatticeVertex, Complex64>,
    pub placed_faces: Vec<PlacedFace>,
    /// Largest star-closing gap over interior vertices, in units of the base length.
    pub holonomy_residual: f64,
}

impl LayoutResult {
    /// Rebuilds a layout from vertex positions alone; every lattice face whose
    /// three vertices have positions is placed at those positions.
    pub fn from_positions(positions: BTreeMap<LatticeVertex, Complex64>, holonomy_residual: f64) -> Self {
        let mut placed_faces = Vec::new();
        for &v in positions.keys() {
            for face in [Face::up(v), Face::down(v)] {
                let vs = face.vertices();
                if vs.iter().all(|x| positions.contains_key(x)) {
                    placed_faces.push(PlacedFace { face, points: vs.map(|x| positions[&x]) });
                }
            }
        }
        placed_faces.sort_by_key(|f| f.face);
        LayoutResult { positions, placed_faces, holonomy_residual }
    }

    pub fn position(&self, v: LatticeVertex) -> Option<Complex64> {
        self.positions.get(&v).copied()
    }

    /// Diagonal of the bounding box of all vertex positions.
    pub fn diameter(&self) -> f64 {
        let mut bb = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in self.positions.values() {
            bb[0] = bb[0].min(p.re);
            bb[1] = bb[1].max(p.re);
            bb[2] = bb[2].min(p.im);
            bb[3] = bb[3].max(p.im);
        }
        if bb[0] > bb[1] {
            return 0.0;
        }
        (bb[1] - bb[0]).hypot(bb[3] - bb[2])
    }
}

fn polygon_area(points: &[Complex64]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for k in 0..n {
        let (a, b) = (points[k], points[(k + 1) % n]);
        acc += a.re * b.im - a.im * b.re;
    }
    0.5 * acc
}

/// Third vertex of a triangle glued to the left of `from -> to`, given the angle
/// at `from` and the length of the new edge leaving `from`.
fn apex(from: Complex64, to: Complex64, angle: f64, length: f64) -> Complex64 {
    let dir = (to - from) / (to - from).norm();
    from + dir * Complex64::from_polar(length, angle)
}

/// Lays `p` out in the plane starting from `base_face`.
///
/// The first edge of `base_face` runs from the origin along the positive x axis.
pub fn develop(p: &ConformalPatch, base_face: Face) -> Result<LayoutResult> {
    let ball = p.ball();
    let faces = ball.faces();
    let index: HashMap<Face, usize> = faces.iter().enumerate().map(|(k, f)| (*f, k)).collect();
    let base = *index
        .get(&base_face)
        .ok_or_else(|| Error::InvalidArgument(format!("base face {base_face} is not inside the patch")))?;

    let mut triangles = Vec::with_capacity(faces.len());
    for f in &faces {
        let t = p.face_triangle(f)?;
        t.validate().map_err(|e| Error::InvalidFace { face: *f, reason: e.to_string() })?;
        triangles.push((t, t.angles()));
    }

    let mut placed: Vec<Option<[Complex64; 3]>> = vec![None; faces.len()];
    let mut order = Vec::with_capacity(faces.len());
    {
        let (t, ang) = &triangles[base];
        let a = Complex64::new(0.0, 0.0);
        let b = Complex64::new(t.l_k, 0.0);
        let c = Complex64::from_polar(t.l_j, ang[0]);
        placed[base] = Some([a, b, c]);
    }
    let mut queue = VecDeque::from([base]);
    while let Some(k) = queue.pop_front() {
        order.push(k);
        let pts = placed[k].expect("queued faces are placed");
        let vs = faces[k].vertices();
        for e in 0..3 {
            let (x, y) = (vs[e], vs[(e + 1) % 3]);
            let (px, py) = (pts[e], pts[(e + 1) % 3]);
            let Some(g) = Face::left_of(y, x) else { continue };
            let Some(&gk) = index.get(&g) else { continue };
            if placed[gk].is_some() {
                continue;
            }
            let gvs = g.vertices();
            let at = |v: LatticeVertex| gvs.iter().position(|&u| u == v).expect("shared vertex");
            let (iy, iz) = (at(y), (at(y) + 2) % 3);
            let (t, ang) = &triangles[gk];
            let lens = t.lengths();
            // edge y-z is opposite the vertex that is neither y nor z, i.e. x
            let pz = apex(py, px, ang[iy], lens[at(x)]);
            let mut gp = [Complex64::new(0.0, 0.0); 3];
            gp[iy] = py;
            gp[at(x)] = px;
            gp[iz] = pz;
            placed[gk] = Some(gp);
            queue.push_back(gk);
        }
    }

    let mut positions = BTreeMap::new();
    let mut placed_faces = Vec::with_capacity(order.len());
    for &k in &order {
        let pts = placed[k].expect("visited");
        for (v, q) in faces[k].vertices().into_iter().zip(pts) {
            positions.entry(v).or_insert(q);
        }
        placed_faces.push(PlacedFace { face: faces[k], points: pts });
    }

    let face_points: HashMap<Face, [Complex64; 3]> = placed_faces.iter().map(|f| (f.face, f.points)).collect();
    let mut holonomy: f64 = 0.0;
    for v in ball.interior() {
        holonomy = holonomy.max(star_gap(p, v, &face_points)?);
    }
    Ok(LayoutResult { positions, placed_faces, holonomy_residual: holonomy / p.base_length() })
}

// Walk once around the star of v starting from the placed copy of face 0 and
// report how far the image of the first neighbor moved.
fn star_gap(p: &ConformalPatch, v: LatticeVertex, faces: &HashMap<Face, [Complex64; 3]>) -> Result<f64> {
    let nb = neighbors(v);
    let f0 = Face::left_of(v, nb[0]).expect("unit step");
    let pts = faces[&f0];
    let vs = f0.vertices_from(v).expect("star face");
    let at = |x: LatticeVertex| f0.vertices().iter().position(|&u| u == x).expect("vertex");
    let pv = pts[at(vs[0])];
    let first = pts[at(vs[1])];
    let mut cur = pts[at(vs[2])];
    for j in 1..6 {
        let t = p.triangle_at([v, nb[j], nb[(j + 1) % 6]])?;
        cur = apex(pv, cur, t.angles()[0], t.l_j);
    }
    Ok((cur - first).norm())
}

/// Pair of faces with no common vertex whose images overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapPair {
    pub a: Face,
    pub b: Face,
    pub area: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapReport {
    pub pairs: Vec<OverlapPair>,
    pub area_threshold: f64,
}

impl OverlapReport {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Relative area threshold applied to the smallest placed face.
pub const OVERLAP_AREA_FACTOR: f64 = 1e-10;

/// Intersection of two counter-clockwise convex polygons.
pub fn clip_convex(subject: &[Complex64], clip: &[Complex64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = subject.to_vec();
    let n = clip.len();
    for e in 0..n {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[e], clip[(e + 1) % n]);
        let side = |p: Complex64| (b - a).re * (p - a).im - (b - a).im * (p - a).re;
        let input = std::mem::take(&mut out);
        for k in 0..input.len() {
            let (cur, nxt) = (input[k], input[(k + 1) % input.len()]);
            let (sc, sn) = (side(cur), side(nxt));
            if sc >= 0.0 {
                out.push(cur);
            }
            if (sc >= 0.0) != (sn >= 0.0) {
                let t = sc / (sc - sn);
                out.push(cur + (nxt - cur) * t);
            }
        }
    }
    out
}

/// Area of the intersection of two counter-clockwise triangles.
pub fn intersection_area(a: &[Complex64; 3], b: &[Complex64; 3]) -> f64 {
    let poly = clip_convex(a, b);
    if poly.len() < 3 {
        0.0
    } else {
        polygon_area(&poly).max(0.0)
    }
}

/// Finds all pairs of vertex-disjoint placed faces overlapping in positive area.
pub fn find_overlap(layout: &LayoutResult) -> OverlapReport {
    find_overlap_with_factor(layout, OVERLAP_AREA_FACTOR)
}

pub fn find_overlap_with_factor(layout: &LayoutResult, factor: f64) -> OverlapReport {
    let faces = &layout.placed_faces;
    let min_area = faces.iter().map(|f| f.signed_area().abs()).fold(f64::INFINITY, f64::min);
    let area_threshold = if min_area.is_finite() { factor * min_area } else { 0.0 };
    let boxes: Vec<[f64; 4]> = faces.iter().map(|f| f.bbox()).collect();
    let mut order: Vec<usize> = (0..faces.len()).collect();
    order.sort_by(|&x, &y| boxes[x][0].total_cmp(&boxes[y][0]).then(x.cmp(&y)));

    // sweep along x, keeping faces whose x-range is still open
    let mut active: Vec<usize> = Vec::new();
    let mut pairs = Vec::new();
    for &k in &order {
        let bk = boxes[k];
        active.retain(|&q| boxes[q][1] >= bk[0]);
        for &q in &active {
            let bq = boxes[q];
            if bq[2] > bk[3] || bk[2] > bq[3] {
                continue;
            }
            let (fa, fb) = (&faces[q], &faces[k]);
            if fa.face.shares_vertex(&fb.face) {
                continue;
            }
            let area = intersection_area(&fa.points, &fb.points);
            if area > area_threshold {
                let (a, b) = if fa.face < fb.face { (fa.face, fb.face) } else { (fb.face, fa.face) };
                pairs.push(OverlapPair { a, b, area });
            }
        }
        active.push(k);
    }
    pairs.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
    OverlapReport { pairs, area_threshold }
}

/// Orientation-preserving similarity `z ↦ k z + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub k: Complex64,
    pub b: Complex64,
    /// `b / (1 - k)`; `None` for a pure translation.
    pub fixed_point: Option<Complex64>,
    pub contraction_norm: f64,
    /// Largest mismatch `|T(g(i + t e)) - g(i + (t+1) e)|` over the checked span.
    pub max_map_error: f64,
}

impl Similarity {
    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.k * z + self.b
    }
}

/// Recovers the similarity advancing the layout one step along direction `e`.
pub fn extract_similarity(
    layout: &LayoutResult,
    p: &ConformalPatch,
    i: LatticeVertex,
    e: LatticeVertex,
    span: u32,
) -> Result<Similarity> {
    if !e.is_unit() {
        return Err(Error::InvalidArgument(format!("{e} is not a unit lattice step")));
    }
    if span < 2 {
        return Err(Error::InvalidArgument("span must be at least 2".into()));
    }
    if p.linear_coefficients(1e-9).is_none() {
        return Err(Error::NotLinear);
    }
    let g: Vec<Complex64> = (0..=span as i64)
        .map(|t| {
            let v = i + LatticeVertex::new(t * e.m, t * e.n);
            layout
                .position(v)
                .ok_or_else(|| Error::InvalidArgument(format!("{v} is not in the layout")))
        })
        .collect::<Result<_>>()?;
    let (d0, d1) = (g[1] - g[0], g[2] - g[1]);
    if d0.norm() == 0.0 || d1.norm() == 0.0 {
        return Err(Error::Degenerate(format!("consecutive points coincide near {i}")));
    }
    let k = d1 / d0;
    let b = g[1] - k * g[0];
    let mut max_map_error: f64 = 0.0;
    for t in 0..span as usize {
        let err = (k * g[t] + b - g[t + 1]).norm();
        let scale = (g[t + 1] - g[t]).norm().max(1.0);
        if err > 1e-8 * scale {
            return Err(Error::NotLinear);
        }
        max_map_error = max_map_error.max(err);
    }
    let fixed_point = if (k - 1.0).norm() < 1e-12 { None } else { Some(b / (1.0 - k)) };
    Ok(Similarity { k, b, fixed_point, contraction_norm: k.norm(), max_map_error })
}

/// Smallest radius with a positive-area overlap, and the witnessing report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapWitness {
    pub radius: u32,
    pub report: OverlapReport,
}

fn overlap_at(m: f64, n: f64, radius: u32) -> Result<OverlapReport> {
    let ball = Ball::new(LatticeVertex::ORIGIN, radius);
    let p = linear_factor(m, n, &ball)?;
    let layout = develop(&p, Face::up(LatticeVertex::ORIGIN))?;
    Ok(find_overlap(&layout))
}

/// Smallest `R <= r_max` at which the linear factor `(M, N)` on `B(0, R)`
/// develops with an overlap, or `None`.
///
/// Overlaps persist as the ball grows, so the radius is bracketed by doubling
/// and then located by bisection.
pub fn overlap_radius(m: f64, n: f64, r_max: u32) -> Result<Option<OverlapWitness>> {
    if r_max == 0 {
        return Ok(None);
    }
    // validity does not depend on the radius: all faces are similar
    linear_factor(m, n, &Ball::new(LatticeVertex::ORIGIN, 1))?;
    let mut lo = 0u32;
    let mut hi = 1u32;
    let mut hit = loop {
        let report = overlap_at(m, n, hi)?;
        if !report.is_empty() {
            break report;
        }
        if hi == r_max {
            return Ok(None);
        }
        lo = hi;
        hi = (hi * 2).min(r_max);
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let report = overlap_at(m, n, mid)?;
        if report.is_empty() {
            lo = mid;
        } else {
            hi = mid;
            hit = report;
        }
    }
    Ok(Some(OverlapWitness { radius: hi, report: hit }))
}
