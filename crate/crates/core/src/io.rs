//! JSON file formats for patches, layouts, problems and vertex functions.
//!
//! Vertex data is written as `[m, n, value]` rows sorted by vertex. Floats use
//! the shortest representation that parses back to the same bits.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Ball, LatticeVertex};
use crate::layout::LayoutResult;
use crate::patch::ConformalPatch;
use crate::quasiharm::VertexFunction;
use crate::solver::YamabeProblem;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchFile {
    pub center: [i64; 2],
    pub radius: u32,
    pub base_length: f64,
    pub w: Vec<(i64, i64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutFile {
    pub positions: Vec<(i64, i64, f64, f64)>,
    pub holonomy_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub radius: u32,
    pub boundary_w: Vec<(i64, i64, f64)>,
    #[serde(rename = "target_K")]
    pub target_k: Vec<(i64, i64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValuesFile {
    pub values: Vec<(i64, i64, f64)>,
}

fn parse<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| Error::Data(format!("{what}: line {}, column {}: {e}", e.line(), e.column())))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Collects `[m, n, value]` rows into a map, rejecting repeated vertices.
pub fn rows_to_map(rows: &[(i64, i64, f64)], what: &str) -> Result<BTreeMap<LatticeVertex, f64>> {
    let mut out = BTreeMap::new();
    for &(m, n, x) in rows {
        if out.insert(LatticeVertex::new(m, n), x).is_some() {
            return Err(Error::Data(format!("{what}: duplicate vertex ({m},{n})")));
        }
    }
    Ok(out)
}

fn map_to_rows(map: &BTreeMap<LatticeVertex, f64>) -> Vec<(i64, i64, f64)> {
    map.iter().map(|(v, x)| (v.m, v.n, *x)).collect()
}

pub fn patch_to_file(p: &ConformalPatch) -> Result<PatchFile> {
    if p.has_explicit_base() {
        return Err(Error::InvalidArgument("patches with per-edge base lengths have no file format".into()));
    }
    let ball = p.ball();
    Ok(PatchFile {
        center: [ball.center().m, ball.center().n],
        radius: ball.radius(),
        base_length: p.base_length(),
        w: ball.vertices().iter().zip(p.w_values()).map(|(v, x)| (v.m, v.n, *x)).collect(),
    })
}

pub fn patch_from_file(file: &PatchFile) -> Result<ConformalPatch> {
    let ball = Ball::new(LatticeVertex::new(file.center[0], file.center[1]), file.radius);
    let map = rows_to_map(&file.w, "w")?;
    if let Some(v) = map.keys().find(|v| !ball.contains(**v)) {
        return Err(Error::Data(format!("w: vertex ({},{}) lies outside the ball", v.m, v.n)));
    }
    if let Some(v) = ball.vertices().iter().find(|v| !map.contains_key(v)) {
        return Err(Error::Data(format!("w: missing vertex ({},{})", v.m, v.n)));
    }
    let w = ball.vertices().iter().map(|v| map[v]).collect();
    ConformalPatch::new(ball, w, file.base_length)
}

pub fn patch_to_json(p: &ConformalPatch) -> Result<String> {
    to_json(&patch_to_file(p)?)
}

pub fn patch_from_json(text: &str) -> Result<ConformalPatch> {
    patch_from_file(&parse(text, "patch")?)
}

pub fn save_patch(p: &ConformalPatch, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &patch_to_json(p)?)
}

pub fn load_patch(path: impl AsRef<Path>) -> Result<ConformalPatch> {
    let path = path.as_ref();
    patch_from_json(&read(path)?).map_err(|e| Error::Data(format!("{}: {}", path.display(), strip(e))))
}

// avoid "data error: data error: ..." when adding a file name
fn strip(e: Error) -> String {
    match e {
        Error::Data(s) => s,
        other => other.to_string(),
    }
}

pub fn layout_to_json(layout: &LayoutResult) -> Result<String> {
    to_json(&LayoutFile {
        positions: layout.positions.iter().map(|(v, z)| (v.m, v.n, z.re, z.im)).collect(),
        holonomy_residual: layout.holonomy_residual,
    })
}

pub fn layout_from_json(text: &str) -> Result<LayoutResult> {
    let file: LayoutFile = parse(text, "layout")?;
    let mut positions = BTreeMap::new();
    for &(m, n, x, y) in &file.positions {
        if positions.insert(LatticeVertex::new(m, n), Complex64::new(x, y)).is_some() {
            return Err(Error::Data(format!("positions: duplicate vertex ({m},{n})")));
        }
    }
    Ok(LayoutResult::from_positions(positions, file.holonomy_residual))
}

pub fn save_layout(layout: &LayoutResult, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &layout_to_json(layout)?)
}

pub fn load_layout(path: impl AsRef<Path>) -> Result<LayoutResult> {
    let path = path.as_ref();
    layout_from_json(&read(path)?).map_err(|e| Error::Data(format!("{}: {}", path.display(), strip(e))))
}

pub fn problem_to_json(prob: &YamabeProblem) -> Result<String> {
    if prob.ball.center() != LatticeVertex::ORIGIN {
        return Err(Error::InvalidArgument("problem files describe balls centered at the origin".into()));
    }
    to_json(&ProblemFile {
        radius: prob.ball.radius(),
        boundary_w: map_to_rows(&prob.boundary_w),
        target_k: map_to_rows(&prob.target_k),
    })
}

pub fn problem_from_json(text: &str) -> Result<YamabeProblem> {
    let file: ProblemFile = parse(text, "problem")?;
    let ball = Ball::new(LatticeVertex::ORIGIN, file.radius);
    let boundary = rows_to_map(&file.boundary_w, "boundary_w")?;
    let target = rows_to_map(&file.target_k, "target_K")?;
    YamabeProblem::new(ball.clone(), boundary, target).map_err(|e| match e {
        Error::IncompleteData(v) => {
            let field = if ball.is_interior(v) { "target_K" } else { "boundary_w" };
            Error::Data(format!("{field}: missing vertex ({},{})", v.m, v.n))
        }
        other => other,
    })
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<YamabeProblem> {
    let path = path.as_ref();
    problem_from_json(&read(path)?).map_err(|e| Error::Data(format!("{}: {}", path.display(), strip(e))))
}

pub fn save_problem(prob: &YamabeProblem, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &problem_to_json(prob)?)
}

pub fn values_to_json(f: &VertexFunction) -> Result<String> {
    to_json(&ValuesFile { values: map_to_rows(f) })
}

pub fn values_from_json(text: &str) -> Result<VertexFunction> {
    let file: ValuesFile = parse(text, "values")?;
    rows_to_map(&file.values, "values")
}

pub fn load_values(path: impl AsRef<Path>) -> Result<VertexFunction> {
    let path = path.as_ref();
    values_from_json(&read(path)?).map_err(|e| Error::Data(format!("{}: {}", path.display(), strip(e))))
}

pub fn save_values(f: &VertexFunction, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &values_to_json(f)?)
}

/// Writes any serializable report as pretty JSON.
pub fn save_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &to_json(value)?)
}

