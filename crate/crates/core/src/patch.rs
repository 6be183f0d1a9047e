//! PL conformal factors on lattice balls.
//!
//! A [`ConformalPatch`] stores a factor `w` on every vertex of a ball. Edge
//! lengths are derived as `base · e^{w_i + w_j}`, where the base length is the
//! regular one unless explicit per-edge base lengths were supplied.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{are_adjacent, neighbors, Ball, Face, LatticeVertex, DIRECTIONS};
use crate::trigeom::Triangle;

/// Default tolerance on `|K|` for calling a vertex flat.
pub const FLAT_TOL: f64 = 1e-9;

fn edge_key(a: LatticeVertex, b: LatticeVertex) -> (LatticeVertex, LatticeVertex) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone)]
pub struct ConformalPatch {
    ball: Ball,
    w: Vec<f64>,
    base_length: f64,
    base_edges: Option<HashMap<(LatticeVertex, LatticeVertex), f64>>,
}

impl ConformalPatch {
    /// `w` is indexed like `ball.vertices()`.
    pub fn new(ball: Ball, w: Vec<f64>, base_length: f64) -> Result<Self> {
        if w.len() != ball.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} factor values, got {}",
                ball.len(),
                w.len()
            )));
        }
        if !(base_length.is_finite() && base_length > 0.0) {
            return Err(Error::InvalidArgument(format!("base length {base_length} must be positive")));
        }
        if let Some(k) = w.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite factor at {}", ball.vertices()[k])));
        }
        let p = ConformalPatch { ball, w, base_length, base_edges: None };
        p.validate_faces()?;
        Ok(p)
    }

    pub fn from_fn(ball: Ball, base_length: f64, f: impl Fn(LatticeVertex) -> f64) -> Result<Self> {
        let w = ball.vertices().iter().map(|&v| f(v)).collect();
        ConformalPatch::new(ball, w, base_length)
    }

    /// Every ball vertex must have a value; extra keys are ignored.
    pub fn from_map(ball: Ball, base_length: f64, w: &HashMap<LatticeVertex, f64>) -> Result<Self> {
        let values = ball
            .vertices()
            .iter()
            .map(|v| w.get(v).copied().ok_or(Error::IncompleteData(*v)))
            .collect::<Result<Vec<_>>>()?;
        ConformalPatch::new(ball, values, base_length)
    }

    pub fn regular(ball: Ball) -> Self {
        let n = ball.len();
        ConformalPatch { ball, w: vec![0.0; n], base_length: 1.0, base_edges: None }
    }

    /// Non-regular background: `lengths` gives the base length of every edge of
    /// every face in the ball, keyed by either orientation.
    pub fn with_base_lengths(
        ball: Ball,
        w: Vec<f64>,
        lengths: &HashMap<(LatticeVertex, LatticeVertex), f64>,
    ) -> Result<Self> {
        let mut base = HashMap::new();
        for f in ball.faces() {
            for (a, b) in f.edges() {
                let l = lengths
                    .get(&(a, b))
                    .or_else(|| lengths.get(&(b, a)))
                    .copied()
                    .ok_or(Error::InvalidEdge(a, b))?;
                if !(l.is_finite() && l > 0.0) {
                    return Err(Error::InvalidEdge(a, b));
                }
                base.insert(edge_key(a, b), l);
            }
        }
        let mut p = ConformalPatch::new(ball, w, 1.0)?;
        p.base_edges = Some(base);
        p.validate_faces()?;
        Ok(p)
    }

    /// Same background and ball, new factor values.
    pub fn with_w(&self, w: Vec<f64>) -> Result<Self> {
        if w.len() != self.w.len() {
            return Err(Error::InvalidArgument("factor vector has the wrong length".into()));
        }
        let p = ConformalPatch { ball: self.ball.clone(), w, base_length: self.base_length, base_edges: self.base_edges.clone() };
        p.validate_faces()?;
        Ok(p)
    }

    fn validate_faces(&self) -> Result<()> {
        for f in self.ball.faces() {
            let t = self.face_triangle_unchecked(&f);
            if let Err(e) = t.validate() {
                return Err(Error::InvalidFace { face: f, reason: e.to_string() });
            }
        }
        Ok(())
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn base_length(&self) -> f64 {
        self.base_length
    }

    pub fn has_explicit_base(&self) -> bool {
        self.base_edges.is_some()
    }

    /// Factor values in ball vertex order.
    pub fn w_values(&self) -> &[f64] {
        &self.w
    }

    pub fn w(&self, v: LatticeVertex) -> Option<f64> {
        self.ball.index_of(v).map(|k| self.w[k])
    }

    fn w_at(&self, v: LatticeVertex) -> f64 {
        self.w[self.ball.index_of(v).expect("vertex inside patch")]
    }

    fn base_edge(&self, a: LatticeVertex, b: LatticeVertex) -> f64 {
        match &self.base_edges {
            Some(m) => m[&edge_key(a, b)],
            None => self.base_length,
        }
    }

    /// Conformal length `base · e^{w(i) + w(j)}` of the edge `ij`.
    pub fn edge_length(&self, i: LatticeVertex, j: LatticeVertex) -> Result<f64> {
        if !are_adjacent(i, j) || !self.ball.contains(i) || !self.ball.contains(j) {
            return Err(Error::InvalidEdge(i, j));
        }
        if let Some(m) = &self.base_edges {
            if !m.contains_key(&edge_key(i, j)) {
                return Err(Error::InvalidEdge(i, j));
            }
        }
        Ok(self.edge_length_unchecked(i, j))
    }

    fn edge_length_unchecked(&self, i: LatticeVertex, j: LatticeVertex) -> f64 {
        self.base_edge(i, j) * (self.w_at(i) + self.w_at(j)).exp()
    }

    fn face_triangle_unchecked(&self, f: &Face) -> Triangle {
        let [a, b, c] = f.vertices();
        Triangle {
            l_i: self.edge_length_unchecked(b, c),
            l_j: self.edge_length_unchecked(c, a),
            l_k: self.edge_length_unchecked(a, b),
        }
    }

    /// Lengths of `f` labelled by opposite vertex, in `f.vertices()` order.
    pub fn face_triangle(&self, f: &Face) -> Result<Triangle> {
        if !f.vertices().iter().all(|&v| self.ball.contains(v)) {
            return Err(Error::InvalidArgument(format!("face {f} not inside the patch")));
        }
        Ok(self.face_triangle_unchecked(f))
    }

    /// Triangle with vertices taken in the order `[v0, v1, v2]`.
    pub fn triangle_at(&self, vs: [LatticeVertex; 3]) -> Result<Triangle> {
        Ok(Triangle {
            l_i: self.edge_length(vs[1], vs[2])?,
            l_j: self.edge_length(vs[2], vs[0])?,
            l_k: self.edge_length(vs[0], vs[1])?,
        })
    }

    /// Inner angles of `f` in `f.vertices()` order.
    pub fn face_angles(&self, f: &Face) -> Result<[f64; 3]> {
        Ok(self.face_triangle(f)?.angles())
    }

    /// `θ^j` at `v` for the six star faces `(v, v_j, v_{j+1})`.
    pub fn star_angles(&self, v: LatticeVertex) -> Result<[f64; 6]> {
        if !self.ball.is_interior(v) {
            return Err(Error::InvalidArgument(format!("{v} is not an interior vertex")));
        }
        let nb = neighbors(v);
        let mut out = [0.0; 6];
        for j in 0..6 {
            out[j] = self.triangle_at([v, nb[j], nb[(j + 1) % 6]])?.angles()[0];
        }
        Ok(out)
    }

    pub fn curvature(&self) -> Result<CurvatureReport> {
        let mut k = BTreeMap::new();
        let mut cone_angle = BTreeMap::new();
        let mut max_inner_angle = 0.0f64;
        for f in self.ball.faces() {
            let t = self.face_triangle_unchecked(&f);
            t.validate().map_err(|e| Error::InvalidFace { face: f, reason: e.to_string() })?;
            max_inner_angle = max_inner_angle.max(t.max_angle());
        }
        let mut max_abs_k = 0.0f64;
        for v in self.ball.interior() {
            let alpha: f64 = self.star_angles(v)?.iter().sum();
            let kv = TAU - alpha;
            max_abs_k = max_abs_k.max(kv.abs());
            cone_angle.insert(v, alpha);
            k.insert(v, kv);
        }
        Ok(CurvatureReport { k, cone_angle, max_abs_k, max_inner_angle })
    }

    /// Curvature values in the order of `self.ball().interior()`.
    pub fn interior_curvature(&self) -> Result<Vec<f64>> {
        self.ball
            .interior()
            .map(|v| Ok(TAU - self.star_angles(v)?.iter().sum::<f64>()))
            .collect()
    }

    /// `(ℓ_il ℓ_jk) / (ℓ_ik ℓ_jl)` for the edge `ij` with faces `ijk` and `ilj`.
    pub fn length_cross_ratio(&self, i: LatticeVertex, j: LatticeVertex) -> Result<f64> {
        let d = (j - i).direction_index().ok_or(Error::InvalidEdge(i, j))?;
        let k = i + DIRECTIONS[(d + 1) % 6];
        let l = i + DIRECTIONS[(d + 5) % 6];
        if ![i, j, k, l].iter().all(|&v| self.ball.contains(v)) {
            return Err(Error::InvalidEdge(i, j));
        }
        let len = |a, b| self.edge_length(a, b);
        Ok(len(i, l)? * len(j, k)? / (len(i, k)? * len(j, l)?))
    }

    /// Interior edges `(i, j)` with `i < j`, sorted.
    pub fn interior_edges(&self) -> Vec<(LatticeVertex, LatticeVertex)> {
        let mut out = Vec::new();
        for &i in self.ball.vertices() {
            for d in 0..3 {
                let j = i + DIRECTIONS[d];
                let k = i + DIRECTIONS[d + 1];
                let l = i + DIRECTIONS[(d + 5) % 6];
                if [j, k, l].iter().all(|&v| self.ball.contains(v)) {
                    out.push(edge_key(i, j));
                }
            }
        }
        out.sort();
        out
    }

    /// `Δ_c w(i) = w(i + c) - w(i)` wherever both ends lie in the ball.
    pub fn difference(&self, c: LatticeVertex) -> BTreeMap<LatticeVertex, f64> {
        self.ball
            .vertices()
            .iter()
            .filter_map(|&i| Some((i, self.w(i + c)? - self.w_at(i))))
            .collect()
    }

    /// Flags neighbors `j` of flat interior vertices `i` with `e^{w(j) - w(i)} < 1/6`.
    pub fn check_edge_ratio_bound(&self, tol: f64) -> Result<EdgeRatioReport> {
        let mut report = EdgeRatioReport::default();
        for v in self.ball.interior() {
            let kv = TAU - self.star_angles(v)?.iter().sum::<f64>();
            if kv.abs() > tol {
                continue;
            }
            report.flat_vertices += 1;
            let wv = self.w_at(v);
            for u in neighbors(v) {
                let ratio = (self.w_at(u) - wv).exp();
                report.min_ratio = report.min_ratio.min(ratio);
                if ratio < 1.0 / 6.0 {
                    report.violations.push(EdgeRatioViolation { vertex: v, neighbor: u, ratio });
                }
            }
        }
        Ok(report)
    }

    /// Largest inner angle over all faces.
    pub fn max_inner_angle(&self) -> f64 {
        self.ball
            .faces()
            .iter()
            .map(|f| self.face_triangle_unchecked(f).max_angle())
            .fold(0.0, f64::max)
    }

    /// Whether `w` is affine in the lattice coordinates, within `tol`.
    pub fn linear_coefficients(&self, tol: f64) -> Option<(f64, f64)> {
        let d1 = self.difference(DIRECTIONS[0]);
        let dw = self.difference(DIRECTIONS[2]);
        let m = *d1.values().next()?;
        let n = *dw.values().next()?;
        let ok = d1.values().all(|x| (x - m).abs() <= tol) && dw.values().all(|x| (x - n).abs() <= tol);
        ok.then_some((m, n))
    }
}

/// `w(v) = M·(v - c).m + N·(v - c).n` on `ball`, normalized to vanish at its center.
pub fn linear_factor(m: f64, n: f64, ball: &Ball) -> Result<ConformalPatch> {
    let c = ball.center();
    ConformalPatch::from_fn(ball.clone(), 1.0, |v| {
        let d = v - c;
        d.m as f64 * m + d.n as f64 * n
    })
    .map_err(|e| match e {
        Error::InvalidFace { face, .. } => Error::InvalidFactor { face },
        other => other,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureReport {
    /// `K = 2π - α` at interior vertices.
    pub k: BTreeMap<LatticeVertex, f64>,
    pub cone_angle: BTreeMap<LatticeVertex, f64>,
    pub max_abs_k: f64,
    /// Largest inner angle over every face of the ball.
    pub max_inner_angle: f64,
}

impl CurvatureReport {
    pub fn is_flat(&self, tol: f64) -> bool {
        self.max_abs_k <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeRatioViolation {
    pub vertex: LatticeVertex,
    pub neighbor: LatticeVertex,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeRatioReport {
    pub violations: Vec<EdgeRatioViolation>,
    pub flat_vertices: usize,
    pub min_ratio: f64,
}

impl Default for EdgeRatioReport {
    fn default() -> Self {
        EdgeRatioReport { violations: Vec::new(), flat_vertices: 0, min_ratio: f64::INFINITY }
    }
}

impl EdgeRatioReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Sorts the faces of a linear-factor patch into similarity classes by angle triple.
pub fn similarity_classes(p: &ConformalPatch, tol: f64) -> Result<Vec<[f64; 3]>> {
    let mut classes: Vec<[f64; 3]> = Vec::new();
    for f in p.ball().faces() {
        let a = p.face_angles(&f)?;
        if !classes.iter().any(|c| (0..3).all(|q| (c[q] - a[q]).abs() <= tol)) {
            classes.push(a);
        }
    }
    Ok(classes)
}

/// `θ¹ + θ³ + θ⁵ - π` and `θ² + θ⁴ + θ⁶ - π` at an interior vertex.
pub fn alternating_angle_defects(p: &ConformalPatch, v: LatticeVertex) -> Result<[f64; 2]> {
    let a = p.star_angles(v)?;
    Ok([a[0] + a[2] + a[4] - PI, a[1] + a[3] + a[5] - PI])
}
