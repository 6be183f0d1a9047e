use thiserror::Error;

use crate::lattice::{Face, LatticeVertex};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid triangle: {0}")]
    InvalidTriangle(String),

    #[error("invalid triangle at face {face}: {reason}")]
    InvalidFace { face: Face, reason: String },

    #[error("conformal factor produces an invalid triangle at face {face}")]
    InvalidFactor { face: Face },

    #[error("triangle is not strictly acute: {0}")]
    NotAcute(String),

    #[error("invalid edge {0}-{1}")]
    InvalidEdge(LatticeVertex, LatticeVertex),

    #[error("vertex {vertex} is not flat (K = {curvature:e})")]
    NotFlat { vertex: LatticeVertex, curvature: f64 },

    #[error("missing value at vertex {0}")]
    IncompleteData(LatticeVertex),

    #[error("domain too small: need radius {required}, have {available}")]
    DomainTooSmall { required: u64, available: u64 },

    #[error("no admissible vertex found: {0}")]
    NotFound(String),

    #[error("conformal factor is not linear on the patch")]
    NotLinear,

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("solver stuck after {iterations} iterations (residual {residual:e})")]
    SolverStuck { iterations: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
