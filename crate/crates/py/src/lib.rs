//! Python bindings.
//!
//! Vertices are `(m, n)` tuples, faces are `("up" | "down", m, n)` tuples and
//! plane points are `(x, y)` tuples.

use std::collections::HashMap;

use hexconf::error::Error;
use hexconf::lattice::{self, Ball, Face, FaceKind, LatticeVertex};
use hexconf::layout::{self, LayoutResult};
use hexconf::patch::{self, ConformalPatch};
use hexconf::quasiharm::{self, VertexFunction};
use hexconf::solver::{self, YamabeProblem};
use hexconf::{io, svg, trigeom};
use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

type V = (i64, i64);
type PyFace = (String, i64, i64);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        Error::SolverStuck { .. } | Error::LinearSolve(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn vx(v: V) -> LatticeVertex {
    LatticeVertex::new(v.0, v.1)
}

fn face_out(f: Face) -> PyFace {
    let kind = match f.kind {
        FaceKind::Up => "up",
        FaceKind::Down => "down",
    };
    (kind.to_string(), f.anchor.m, f.anchor.n)
}

fn face_in(f: &PyFace) -> PyResult<Face> {
    let v = LatticeVertex::new(f.1, f.2);
    match f.0.as_str() {
        "up" => Ok(Face::up(v)),
        "down" => Ok(Face::down(v)),
        other => Err(PyValueError::new_err(format!("face kind must be 'up' or 'down', got {other:?}"))),
    }
}

fn function_in(values: HashMap<V, f64>) -> VertexFunction {
    values.into_iter().map(|(v, x)| (vx(v), x)).collect()
}

/// A PL conformal factor on a lattice ball.
#[pyclass(name = "Patch")]
struct PyPatch {
    inner: ConformalPatch,
}

#[pymethods]
impl PyPatch {
    /// Patch with values from a dict keyed by `(m, n)`; every ball vertex is required.
    #[new]
    #[pyo3(signature = (center, radius, values, base_length = 1.0))]
    fn new(center: V, radius: u32, values: HashMap<V, f64>, base_length: f64) -> PyResult<Self> {
        let map: HashMap<LatticeVertex, f64> = values.into_iter().map(|(v, x)| (vx(v), x)).collect();
        let inner = ConformalPatch::from_map(Ball::new(vx(center), radius), base_length, &map).map_err(to_py)?;
        Ok(PyPatch { inner })
    }

    /// `w(m, n) = mM + nN` relative to the center.
    #[staticmethod]
    #[pyo3(signature = (m, n, radius, center = (0, 0)))]
    fn linear(m: f64, n: f64, radius: u32, center: V) -> PyResult<Self> {
        let inner = patch::linear_factor(m, n, &Ball::new(vx(center), radius)).map_err(to_py)?;
        Ok(PyPatch { inner })
    }

    #[staticmethod]
    fn regular(radius: u32) -> Self {
        PyPatch { inner: ConformalPatch::regular(Ball::new(LatticeVertex::ORIGIN, radius)) }
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyPatch { inner: io::load_patch(path).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyPatch { inner: io::patch_from_json(text).map_err(to_py)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_patch(&self.inner, path).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        io::patch_to_json(&self.inner).map_err(to_py)
    }

    #[getter]
    fn center(&self) -> V {
        let c = self.inner.ball().center();
        (c.m, c.n)
    }

    #[getter]
    fn radius(&self) -> u32 {
        self.inner.ball().radius()
    }

    #[getter]
    fn base_length(&self) -> f64 {
        self.inner.base_length()
    }

    fn __len__(&self) -> usize {
        self.inner.ball().len()
    }

    fn vertices(&self) -> Vec<V> {
        self.inner.ball().vertices().iter().map(|v| (v.m, v.n)).collect()
    }

    fn interior(&self) -> Vec<V> {
        self.inner.ball().interior().map(|v| (v.m, v.n)).collect()
    }

    fn w(&self, v: V) -> PyResult<f64> {
        self.inner
            .w(vx(v))
            .ok_or_else(|| PyValueError::new_err(format!("({},{}) is not in the patch", v.0, v.1)))
    }

    fn values(&self) -> HashMap<V, f64> {
        self.inner.ball().vertices().iter().zip(self.inner.w_values()).map(|(v, x)| ((v.m, v.n), *x)).collect()
    }

    fn edge_length(&self, i: V, j: V) -> PyResult<f64> {
        self.inner.edge_length(vx(i), vx(j)).map_err(to_py)
    }

    /// Curvature `K = 2π - α` at every interior vertex.
    fn curvature(&self) -> PyResult<HashMap<V, f64>> {
        let r = self.inner.curvature().map_err(to_py)?;
        Ok(r.k.into_iter().map(|(v, k)| ((v.m, v.n), k)).collect())
    }

    fn max_abs_curvature(&self) -> PyResult<f64> {
        Ok(self.inner.curvature().map_err(to_py)?.max_abs_k)
    }

    fn max_inner_angle(&self) -> f64 {
        self.inner.max_inner_angle()
    }

    fn star_angles(&self, v: V) -> PyResult<Vec<f64>> {
        Ok(self.inner.star_angles(vx(v)).map_err(to_py)?.to_vec())
    }

    fn cross_ratio(&self, i: V, j: V) -> PyResult<f64> {
        self.inner.length_cross_ratio(vx(i), vx(j)).map_err(to_py)
    }

    /// `(holds, min_ratio, flat_vertices)` for the neighbor ratio bound at flat stars.
    #[pyo3(signature = (tol = 1e-9))]
    fn check_edge_ratio_bound(&self, tol: f64) -> PyResult<(bool, f64, usize)> {
        let r = self.inner.check_edge_ratio_bound(tol).map_err(to_py)?;
        Ok((r.holds(), r.min_ratio, r.flat_vertices))
    }

    /// `(M, N)` when `w` is affine on the patch.
    #[pyo3(signature = (tol = 1e-9))]
    fn linear_coefficients(&self, tol: f64) -> Option<(f64, f64)> {
        self.inner.linear_coefficients(tol)
    }

    /// Develop into the plane from `base`, by default the up face at the center.
    #[pyo3(signature = (base = None))]
    fn develop(&self, base: Option<PyFace>) -> PyResult<PyLayout> {
        let base = match base {
            Some(f) => face_in(&f)?,
            None => Face::up(self.inner.ball().center()),
        };
        Ok(PyLayout { inner: layout::develop(&self.inner, base).map_err(to_py)? })
    }

    /// Weights `μ_1..μ_6` expressing `w(i+c) - w(i)` through the neighbors of `i`.
    fn quasi_harmonic_weights(&self, c: V, i: V, theta: f64) -> PyResult<(Vec<f64>, f64)> {
        let q = quasiharm::extract_weights(&self.inner, vx(c), vx(i), theta).map_err(to_py)?;
        Ok((q.weights.to_vec(), q.reconstruction_residual))
    }

    fn __repr__(&self) -> String {
        let c = self.inner.ball().center();
        format!("Patch(center=({}, {}), radius={})", c.m, c.n, self.inner.ball().radius())
    }
}

/// A planar development of a patch.
#[pyclass(name = "Layout")]
struct PyLayout {
    inner: LayoutResult,
}

#[pymethods]
impl PyLayout {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyLayout { inner: io::load_layout(path).map_err(to_py)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_layout(&self.inner, path).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        io::layout_to_json(&self.inner).map_err(to_py)
    }

    #[getter]
    fn holonomy_residual(&self) -> f64 {
        self.inner.holonomy_residual
    }

    fn positions(&self) -> HashMap<V, (f64, f64)> {
        self.inner.positions.iter().map(|(v, z)| ((v.m, v.n), (z.re, z.im))).collect()
    }

    fn faces(&self) -> Vec<(PyFace, Vec<(f64, f64)>)> {
        self.inner
            .placed_faces
            .iter()
            .map(|f| (face_out(f.face), f.points.iter().map(|z| (z.re, z.im)).collect()))
            .collect()
    }

    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    /// Overlapping face pairs `(face_a, face_b, area)`.
    fn overlaps(&self) -> Vec<(PyFace, PyFace, f64)> {
        layout::find_overlap(&self.inner)
            .pairs
            .into_iter()
            .map(|p| (face_out(p.a), face_out(p.b), p.area))
            .collect()
    }

    /// `(k, b, fixed_point, contraction_norm)` with complex numbers as Python complex.
    #[pyo3(signature = (patch, at, direction, span = 2))]
    fn similarity(
        &self,
        patch: &PyPatch,
        at: V,
        direction: V,
        span: u32,
    ) -> PyResult<(Complex64, Complex64, Option<Complex64>, f64)> {
        let s = layout::extract_similarity(&self.inner, &patch.inner, vx(at), vx(direction), span).map_err(to_py)?;
        Ok((s.k, s.b, s.fixed_point, s.contraction_norm))
    }

    fn to_svg(&self) -> PyResult<String> {
        svg::render_svg(&self.inner, &layout::find_overlap(&self.inner)).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.placed_faces.len()
    }
}

/// Inner angles opposite the three given side lengths.
#[pyfunction]
fn angles(l_i: f64, l_j: f64, l_k: f64) -> PyResult<(f64, f64, f64)> {
    let t = trigeom::Triangle::new(l_i, l_j, l_k).map_err(to_py)?;
    let [a, b, c] = trigeom::angles(&t).map_err(to_py)?;
    Ok((a, b, c))
}

/// Matrix `d[x][y] = ∂θ_x / ∂ log l_y`.
#[pyfunction]
fn angle_log_derivatives(l_i: f64, l_j: f64, l_k: f64) -> PyResult<Vec<Vec<f64>>> {
    let t = trigeom::Triangle::new(l_i, l_j, l_k).map_err(to_py)?;
    Ok(trigeom::angle_log_derivatives(&t).map_err(to_py)?.iter().map(|r| r.to_vec()).collect())
}

/// Mean-value coefficients `(a, b)` between two triangles sharing `l_i`.
#[pyfunction]
fn mean_value_coeffs(source: (f64, f64, f64), target: (f64, f64, f64), theta: f64) -> PyResult<(f64, f64)> {
    let s = trigeom::Triangle::new(source.0, source.1, source.2).map_err(to_py)?;
    let t = trigeom::Triangle::new(target.0, target.1, target.2).map_err(to_py)?;
    let c = trigeom::mean_value_coeffs(&s, &t, theta).map_err(to_py)?;
    Ok((c.a, c.b))
}

#[pyfunction]
fn harmonic_factor_bound(theta: f64) -> f64 {
    quasiharm::harmonic_factor_bound(theta)
}

#[pyfunction]
fn graph_distance(u: V, v: V) -> u64 {
    lattice::graph_distance(vx(u), vx(v))
}

/// Smallest radius at which the linear factor develops with an overlap, or None.
#[pyfunction]
fn overlap_radius(m: f64, n: f64, rmax: u32) -> PyResult<Option<u32>> {
    Ok(layout::overlap_radius(m, n, rmax).map_err(to_py)?.map(|w| w.radius))
}

/// Solve for prescribed curvature; returns `(patch, residuals, converged)`.
#[pyfunction]
#[pyo3(signature = (radius, boundary, target_k, tol = solver::DEFAULT_TOL, max_iter = solver::DEFAULT_MAX_ITER, initial = None))]
fn solve(
    radius: u32,
    boundary: HashMap<V, f64>,
    target_k: HashMap<V, f64>,
    tol: f64,
    max_iter: usize,
    initial: Option<HashMap<V, f64>>,
) -> PyResult<(PyPatch, Vec<f64>, bool)> {
    let ball = Ball::new(LatticeVertex::ORIGIN, radius);
    let mut prob = YamabeProblem::new(ball, function_in(boundary), function_in(target_k)).map_err(to_py)?;
    if let Some(init) = initial {
        prob = prob.with_initial(function_in(init));
    }
    let trace = solver::solve(&prob, tol, max_iter).map_err(to_py)?;
    let residuals = trace.iterations.iter().map(|s| s.residual).collect();
    Ok((PyPatch { inner: trace.final_w }, residuals, trace.converged))
}

/// `(holds, hypotheses_hold, chain_violations)` for the propagation estimate.
#[pyfunction]
fn verify_propagation(
    f: HashMap<V, f64>,
    factor: f64,
    center: V,
    radius: u32,
    level: f64,
    eps: f64,
) -> PyResult<(bool, bool, Vec<V>)> {
    let r = quasiharm::verify_propagation(&function_in(f), factor, vx(center), radius, level, eps).map_err(to_py)?;
    Ok((r.holds, r.hypotheses_hold, r.chain_violations.iter().map(|v| (v.m, v.n)).collect()))
}

#[pymodule]
#[pyo3(name = "hexconf")]
pub fn hexconf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPatch>()?;
    m.add_class::<PyLayout>()?;
    m.add_function(wrap_pyfunction!(angles, m)?)?;
    m.add_function(wrap_pyfunction!(angle_log_derivatives, m)?)?;
    m.add_function(wrap_pyfunction!(mean_value_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(harmonic_factor_bound, m)?)?;
    m.add_function(wrap_pyfunction!(graph_distance, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_radius, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify_propagation, m)?)?;
    Ok(())
}
