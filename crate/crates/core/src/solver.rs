//! Newton solver for prescribed curvature with Dirichlet boundary data.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Ball, LatticeVertex};
use crate::patch::ConformalPatch;
use crate::sparse;
use crate::trigeom::angle_log_derivatives;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const MAX_HALVINGS: u32 = 40;

/// `∂K_i/∂w_j` with rows indexed by interior vertices and columns by all ball vertices.
#[derive(Debug, Clone)]
pub struct CurvatureJacobian {
    pub rows: Vec<LatticeVertex>,
    pub cols: Vec<LatticeVertex>,
    /// `(row, col, value)`, sorted, one entry per position.
    pub entries: Vec<(usize, usize, f64)>,
}

impl CurvatureJacobian {
    pub fn get(&self, i: LatticeVertex, j: LatticeVertex) -> f64 {
        let (Some(r), Some(c)) = (self.rows.iter().position(|&v| v == i), self.cols.binary_search(&j).ok()) else {
            return 0.0;
        };
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(r, c)))
            .map(|k| self.entries[k].2)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols.len()]; self.rows.len()];
        for &(r, c, v) in &self.entries {
            out[r][c] = v;
        }
        out
    }
}

pub fn curvature_jacobian(p: &ConformalPatch) -> Result<CurvatureJacobian> {
    let ball = p.ball();
    let rows: Vec<LatticeVertex> = ball.interior().collect();
    let row_of: HashMap<LatticeVertex, usize> = rows.iter().enumerate().map(|(k, v)| (*v, k)).collect();
    let cols = ball.vertices().to_vec();
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for f in ball.faces() {
        let t = p.face_triangle(&f)?;
        t.validate().map_err(|e| Error::InvalidFace { face: f, reason: e.to_string() })?;
        let d = angle_log_derivatives(&t)?;
        let vs = f.vertices();
        for x in 0..3 {
            let Some(&r) = row_of.get(&vs[x]) else { continue };
            for y in 0..3 {
                // w at vs[y] enters the log lengths of the two edges not opposite it
                let dth: f64 = (0..3).filter(|&q| q != y).map(|q| d[x][q]).sum();
                let c = ball.index_of(vs[y]).expect("face vertex in ball");
                *acc.entry((r, c)).or_insert(0.0) -= dth;
            }
        }
    }
    let entries = acc.into_iter().map(|((r, c), v)| (r, c, v)).collect();
    Ok(CurvatureJacobian { rows, cols, entries })
}

#[derive(Debug, Clone)]
pub struct YamabeProblem {
    pub ball: Ball,
    pub boundary_w: BTreeMap<LatticeVertex, f64>,
    pub target_k: BTreeMap<LatticeVertex, f64>,
    pub initial_interior_w: Option<BTreeMap<LatticeVertex, f64>>,
    pub base_length: f64,
}

impl YamabeProblem {
    pub fn new(
        ball: Ball,
        boundary_w: BTreeMap<LatticeVertex, f64>,
        target_k: BTreeMap<LatticeVertex, f64>,
    ) -> Result<Self> {
        for v in ball.boundary() {
            if !boundary_w.contains_key(&v) {
                return Err(Error::IncompleteData(v));
            }
        }
        if let Some(v) = boundary_w.keys().find(|v| !ball.contains(**v) || ball.is_interior(**v)) {
            return Err(Error::Data(format!("boundary_w given at {v}, which is not a boundary vertex")));
        }
        for v in ball.interior() {
            if !target_k.contains_key(&v) {
                return Err(Error::IncompleteData(v));
            }
        }
        if let Some(v) = target_k.keys().find(|v| !ball.is_interior(**v)) {
            return Err(Error::Data(format!("target_K given at {v}, which is not an interior vertex")));
        }
        Ok(YamabeProblem { ball, boundary_w, target_k, initial_interior_w: None, base_length: 1.0 })
    }

    /// Boundary data `f` and zero target curvature.
    pub fn flat(ball: Ball, f: impl Fn(LatticeVertex) -> f64) -> Self {
        let boundary_w = ball.boundary().map(|v| (v, f(v))).collect();
        let target_k = ball.interior().map(|v| (v, 0.0)).collect();
        YamabeProblem { ball, boundary_w, target_k, initial_interior_w: None, base_length: 1.0 }
    }

    pub fn with_initial(mut self, w: BTreeMap<LatticeVertex, f64>) -> Self {
        self.initial_interior_w = Some(w);
        self
    }

    fn initial_w(&self) -> Vec<f64> {
        let mean = if self.boundary_w.is_empty() {
            0.0
        } else {
            self.boundary_w.values().sum::<f64>() / self.boundary_w.len() as f64
        };
        self.ball
            .vertices()
            .iter()
            .map(|v| {
                if let Some(x) = self.boundary_w.get(v) {
                    *x
                } else {
                    self.initial_interior_w.as_ref().and_then(|m| m.get(v).copied()).unwrap_or(mean)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStep {
    pub residual: f64,
    /// Step scale accepted to reach this iterate; 0 for the initial point.
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub iterations: Vec<SolveStep>,
    pub converged: bool,
    pub final_w: ConformalPatch,
}

impl SolveTrace {
    pub fn final_residual(&self) -> f64 {
        self.iterations.last().map_or(f64::INFINITY, |s| s.residual)
    }
}

fn residual(p: &ConformalPatch, target: &[f64]) -> Result<Vec<f64>> {
    Ok(p.interior_curvature()?.iter().zip(target).map(|(k, t)| k - t).collect())
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Damped Newton on `K(w) - target` over the interior values of `w`.
///
/// Running out of iterations is not an error: the trace comes back with
/// `converged == false`.
pub fn solve(prob: &YamabeProblem, tol: f64, max_iter: usize) -> Result<SolveTrace> {
    let ball = prob.ball.clone();
    let interior: Vec<LatticeVertex> = ball.interior().collect();
    let slot: Vec<usize> = interior.iter().map(|v| ball.index_of(*v).expect("interior in ball")).collect();
    let target: Vec<f64> = interior.iter().map(|v| prob.target_k[v]).collect();
    let mut unknown = vec![None; ball.len()];
    for (k, &s) in slot.iter().enumerate() {
        unknown[s] = Some(k);
    }

    let mut p = ConformalPatch::new(ball, prob.initial_w(), prob.base_length)?;
    let mut f = residual(&p, &target)?;
    let mut r = inf_norm(&f);
    let mut iterations = vec![SolveStep { residual: r, step: 0.0 }];
    for _ in 0..max_iter {
        if r <= tol {
            break;
        }
        let jac = curvature_jacobian(&p)?;
        let block: Vec<(usize, usize, f64)> = jac
            .entries
            .iter()
            .filter_map(|&(row, col, v)| unknown[col].map(|c| (row, c, v)))
            .collect();
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let delta = sparse::solve(interior.len(), &block, &rhs)?;

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut w = p.w_values().to_vec();
            for (k, &s) in slot.iter().enumerate() {
                w[s] += scale * delta[k];
            }
            if let Ok(q) = p.with_w(w) {
                let fq = residual(&q, &target)?;
                let rq = inf_norm(&fq);
                if rq < r {
                    accepted = Some((q, fq, rq));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((q, fq, rq)) = accepted else {
            return Err(Error::SolverStuck { iterations: iterations.len() - 1, residual: r });
        };
        p = q;
        f = fq;
        r = rq;
        iterations.push(SolveStep { residual: r, step: scale });
    }
    Ok(SolveTrace { converged: r <= tol, iterations, final_w: p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_rows_sum_to_zero() {
        let p = ConformalPatch::regular(Ball::new(LatticeVertex::ORIGIN, 3));
        let j = curvature_jacobian(&p).unwrap();
        let mut sums = vec![0.0; j.rows.len()];
        for &(r, _, v) in &j.entries {
            sums[r] += v;
        }
        assert!(sums.iter().all(|s| s.abs() < 1e-12), "{sums:?}");
        let c = 1.0 / (std::f64::consts::PI / 3.0).tan();
        assert!((j.get(LatticeVertex::ORIGIN, LatticeVertex::ORIGIN) - 12.0 * c).abs() < 1e-12);
        assert!((j.get(LatticeVertex::ORIGIN, LatticeVertex::new(1, 0)) + 2.0 * c).abs() < 1e-12);
    }

    #[test]
    fn constant_boundary_gives_constant_interior() {
        let prob = YamabeProblem::flat(Ball::new(LatticeVertex::ORIGIN, 3), |_| 0.3);
        let init = prob.ball.interior().map(|v| (v, 0.05 * v.m as f64)).collect();
        let trace = solve(&prob.with_initial(init), DEFAULT_TOL, 50).unwrap();
        assert!(trace.converged);
        for v in trace.final_w.ball().interior() {
            assert!((trace.final_w.w(v).unwrap() - 0.3).abs() < 1e-9);
        }
    }

    #[test]
    fn incomplete_problem_is_rejected() {
        let ball = Ball::new(LatticeVertex::ORIGIN, 2);
        let tk = ball.interior().map(|v| (v, 0.0)).collect();
        assert!(matches!(YamabeProblem::new(ball, BTreeMap::new(), tk), Err(Error::IncompleteData(_))));
    }

    #[test]
    fn max_iter_reached_returns_trace() {
        let prob = YamabeProblem::flat(Ball::new(LatticeVertex::ORIGIN, 3), |v| 0.05 * v.m as f64);
        let trace = solve(&prob, 1e-14, 1).unwrap();
        assert_eq!(trace.iterations.len(), 2);
        assert!(!trace.converged);
    }
}
