use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hexconf::error::{Error, Result};
use hexconf::io;
use hexconf::lattice::{Ball, Face, FaceKind, LatticeVertex};
use hexconf::layout::{develop, extract_similarity, find_overlap, overlap_radius, OverlapPair, Similarity};
use hexconf::patch::linear_factor;
use hexconf::quasiharm::{
    extract_weights, find_near_constant_ball, verify_propagation, weight_sites, NearConstantBall, QuasiHarmonicWeights,
};
use hexconf::solver::{solve, SolveStep, DEFAULT_MAX_ITER, DEFAULT_TOL};
use hexconf::svg::write_svg;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "hexconf", version, about = "PL-conformal hexagonal patches: curvature, layouts, overlaps, solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the linear conformal factor w(m,n) = mM + nN on a ball.
    GenLinear {
        #[arg(long, allow_hyphen_values = true)]
        m: f64,
        #[arg(long, allow_hyphen_values = true)]
        n: f64,
        #[arg(long)]
        radius: i64,
        #[arg(long, default_value = "0,0", value_parser = parse_vertex, allow_hyphen_values = true)]
        center: LatticeVertex,
        #[arg(long)]
        out: PathBuf,
    },
    /// Curvature at every interior vertex.
    Curvature {
        #[arg(long)]
        patch: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exit 1 unless every interior curvature is within the tolerance.
    VerifyFlat {
        #[arg(long)]
        patch: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Develop a patch into the plane.
    Develop {
        #[arg(long)]
        patch: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Base face as up:m,n or down:m,n (default: the up face at the center).
        #[arg(long, value_parser = parse_face, allow_hyphen_values = true)]
        base: Option<Face>,
    },
    /// Report overlapping faces of a layout.
    Overlap {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest radius at which the linear factor develops with an overlap.
    OverlapRadius {
        #[arg(long, allow_hyphen_values = true)]
        m: f64,
        #[arg(long, allow_hyphen_values = true)]
        n: f64,
        #[arg(long)]
        rmax: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Similarity advancing a layout of a linear factor along a lattice direction.
    Similarity {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        patch: PathBuf,
        #[arg(long, value_parser = parse_vertex, allow_hyphen_values = true)]
        at: LatticeVertex,
        #[arg(long, value_parser = parse_vertex, allow_hyphen_values = true)]
        dir: LatticeVertex,
        #[arg(long, default_value_t = 2)]
        span: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Averaging weights of the difference w(i+c) - w(i) at every admissible vertex.
    QhWeights {
        #[arg(long)]
        patch: PathBuf,
        #[arg(long, value_parser = parse_vertex, allow_hyphen_values = true)]
        c: LatticeVertex,
        /// Angle bound θ in radians (default: the largest inner angle of the patch).
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the one-function propagation estimate on a ball.
    QhPropagate {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        factor: f64,
        #[arg(long, value_parser = parse_vertex, allow_hyphen_values = true)]
        center: LatticeVertex,
        #[arg(long)]
        radius: u32,
        #[arg(long, allow_hyphen_values = true)]
        level: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a ball where two functions are both within eps of their levels.
    QhTwofun {
        #[arg(long)]
        f1: PathBuf,
        #[arg(long)]
        f2: PathBuf,
        #[arg(long)]
        factor: f64,
        #[arg(long)]
        radius: u32,
        #[arg(long)]
        eps: f64,
        /// Radius of the search domain, centered at the origin.
        #[arg(long)]
        domain: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Newton solve for prescribed curvature with fixed boundary values.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        /// Solution patch.
        #[arg(long)]
        out: PathBuf,
        /// Residual history.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Length cross ratio of an interior edge.
    CrossRatio {
        #[arg(long)]
        patch: PathBuf,
        #[arg(long, value_parser = parse_edge, allow_hyphen_values = true)]
        edge: (LatticeVertex, LatticeVertex),
    },
    /// Exit 1 if a flat interior star has a neighbor ratio e^{w(j)-w(i)} below 1/6.
    CheckBound {
        #[arg(long)]
        patch: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_vertex(s: &str) -> std::result::Result<LatticeVertex, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected m,n but got {s:?}"))?;
    let m = a.trim().parse().map_err(|_| format!("bad integer {a:?}"))?;
    let n = b.trim().parse().map_err(|_| format!("bad integer {b:?}"))?;
    Ok(LatticeVertex::new(m, n))
}

fn parse_edge(s: &str) -> std::result::Result<(LatticeVertex, LatticeVertex), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected m,n:m,n but got {s:?}"))?;
    Ok((parse_vertex(a)?, parse_vertex(b)?))
}

fn parse_face(s: &str) -> std::result::Result<Face, String> {
    let (kind, v) = s.split_once(':').ok_or_else(|| format!("expected up:m,n or down:m,n but got {s:?}"))?;
    let v = parse_vertex(v)?;
    match kind {
        "up" => Ok(Face::up(v)),
        "down" => Ok(Face::down(v)),
        _ => Err(format!("unknown face kind {kind:?}")),
    }
}

enum Outcome {
    Ok,
    CheckFailed(String),
}

fn emit<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => io::save_json(value, path),
        None => {
            print!("{}", io::to_json(value)?);
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CurvatureOut {
    max_abs_k: f64,
    theta_sup: f64,
    /// `[m, n, K]`
    k: Vec<(i64, i64, f64)>,
    cone_angle: Vec<(i64, i64, f64)>,
}

#[derive(Serialize)]
struct FaceOut {
    kind: &'static str,
    anchor: [i64; 2],
}

impl From<Face> for FaceOut {
    fn from(f: Face) -> Self {
        let kind = match f.kind {
            FaceKind::Up => "up",
            FaceKind::Down => "down",
        };
        FaceOut { kind, anchor: [f.anchor.m, f.anchor.n] }
    }
}

#[derive(Serialize)]
struct PairOut {
    a: FaceOut,
    b: FaceOut,
    area: f64,
}

impl From<&OverlapPair> for PairOut {
    fn from(p: &OverlapPair) -> Self {
        PairOut { a: p.a.into(), b: p.b.into(), area: p.area }
    }
}

#[derive(Serialize)]
struct OverlapOut {
    area_threshold: f64,
    pairs: Vec<PairOut>,
}

#[derive(Serialize)]
struct OverlapRadiusOut {
    m: f64,
    n: f64,
    rmax: u32,
    radius: Option<u32>,
    pairs: Vec<PairOut>,
}

#[derive(Serialize)]
struct SimilarityOut {
    k: [f64; 2],
    b: [f64; 2],
    fixed_point: Option<[f64; 2]>,
    contraction_norm: f64,
    max_map_error: f64,
}

impl From<Similarity> for SimilarityOut {
    fn from(s: Similarity) -> Self {
        SimilarityOut {
            k: [s.k.re, s.k.im],
            b: [s.b.re, s.b.im],
            fixed_point: s.fixed_point.map(|z| [z.re, z.im]),
            contraction_norm: s.contraction_norm,
            max_map_error: s.max_map_error,
        }
    }
}

#[derive(Serialize)]
struct SkippedSite {
    vertex: [i64; 2],
    reason: String,
}

#[derive(Serialize)]
struct WeightsOut {
    displacement: [i64; 2],
    theta_bound: f64,
    harmonic_factor_bound: f64,
    min_weight: f64,
    max_reconstruction_residual: f64,
    sites: Vec<QuasiHarmonicWeights>,
    skipped: Vec<SkippedSite>,
}

#[derive(Serialize)]
struct TwofunOut {
    ball: NearConstantBall,
    verified: bool,
}

#[derive(Serialize)]
struct TraceOut {
    converged: bool,
    iterations: Vec<SolveStep>,
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::GenLinear { m, n, radius, center, out } => {
            let ball = hexconf::lattice::ball(center, radius)?;
            io::save_patch(&linear_factor(m, n, &ball)?, out)?;
        }
        Command::Curvature { patch, out } => {
            let p = io::load_patch(patch)?;
            let report = p.curvature()?;
            println!("max|K| = {:e}", report.max_abs_k);
            println!("theta_sup = {}", report.max_inner_angle);
            if let Some(path) = out {
                let rows = |m: &std::collections::BTreeMap<LatticeVertex, f64>| m.iter().map(|(v, x)| (v.m, v.n, *x)).collect();
                let doc = CurvatureOut {
                    max_abs_k: report.max_abs_k,
                    theta_sup: report.max_inner_angle,
                    k: rows(&report.k),
                    cone_angle: rows(&report.cone_angle),
                };
                io::save_json(&doc, path)?;
            }
        }
        Command::VerifyFlat { patch, tol } => {
            let report = io::load_patch(patch)?.curvature()?;
            println!("max|K| = {:e} (tol {tol:e})", report.max_abs_k);
            if !report.is_flat(tol) {
                let (v, k) = report
                    .k
                    .iter()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .expect("non-flat patch has an interior vertex");
                return Ok(Outcome::CheckFailed(format!("not flat: K = {k:e} at {v}")));
            }
            println!("flat");
        }
        Command::Develop { patch, out, svg, base } => {
            let p = io::load_patch(patch)?;
            let base = base.unwrap_or_else(|| Face::up(p.ball().center()));
            let layout = develop(&p, base)?;
            io::save_layout(&layout, out)?;
            println!("holonomy residual = {:e}", layout.holonomy_residual);
            if let Some(path) = svg {
                let report = find_overlap(&layout);
                write_svg(&layout, &report, path)?;
            }
        }
        Command::Overlap { layout, out } => {
            let layout = io::load_layout(layout)?;
            let report = find_overlap(&layout);
            eprintln!("{} overlapping pair(s)", report.pairs.len());
            let doc = OverlapOut { area_threshold: report.area_threshold, pairs: report.pairs.iter().map(Into::into).collect() };
            emit(&doc, &out)?;
        }
        Command::OverlapRadius { m, n, rmax, out } => {
            let found = overlap_radius(m, n, rmax)?;
            match &found {
                Some(w) => println!("{}", w.radius),
                None => println!("none"),
            }
            if out.is_some() {
                let doc = OverlapRadiusOut {
                    m,
                    n,
                    rmax,
                    radius: found.as_ref().map(|w| w.radius),
                    pairs: found.as_ref().map_or_else(Vec::new, |w| w.report.pairs.iter().map(Into::into).collect()),
                };
                emit(&doc, &out)?;
            }
        }
        Command::Similarity { layout, patch, at, dir, span, out } => {
            let layout = io::load_layout(layout)?;
            let p = io::load_patch(patch)?;
            let s = extract_similarity(&layout, &p, at, dir, span)?;
            emit(&SimilarityOut::from(s), &out)?;
        }
        Command::QhWeights { patch, c, theta, out } => {
            let p = io::load_patch(patch)?;
            let theta = theta.unwrap_or_else(|| p.max_inner_angle());
            let mut sites = Vec::new();
            let mut skipped = Vec::new();
            for i in weight_sites(&p, c) {
                match extract_weights(&p, c, i, theta) {
                    Ok(w) => sites.push(w),
                    Err(e @ (Error::NotFlat { .. } | Error::NotAcute(_))) => {
                        skipped.push(SkippedSite { vertex: [i.m, i.n], reason: e.to_string() })
                    }
                    Err(e) => return Err(e),
                }
            }
            let doc = WeightsOut {
                displacement: [c.m, c.n],
                theta_bound: theta,
                harmonic_factor_bound: hexconf::quasiharm::harmonic_factor_bound(theta),
                min_weight: sites.iter().map(|w| w.min_weight()).fold(f64::INFINITY, f64::min),
                max_reconstruction_residual: sites.iter().map(|w| w.reconstruction_residual.abs()).fold(0.0, f64::max),
                sites,
                skipped,
            };
            println!("{} site(s), {} skipped", doc.sites.len(), doc.skipped.len());
            io::save_json(&doc, out)?;
        }
        Command::QhPropagate { f, factor, center, radius, level, eps, out } => {
            let f = io::load_values(f)?;
            let report = verify_propagation(&f, factor, center, radius, level, eps)?;
            emit(&report, &out)?;
            if report.check_failed() {
                return Ok(Outcome::CheckFailed(format!(
                    "propagation fails: {} value violation(s), {} chain violation(s)",
                    report.violations.len(),
                    report.chain_violations.len()
                )));
            }
        }
        Command::QhTwofun { f1, f2, factor, radius, eps, domain, out } => {
            let (f1, f2) = (io::load_values(f1)?, io::load_values(f2)?);
            let domain = Ball::new(LatticeVertex::ORIGIN, domain);
            let ball = find_near_constant_ball(&f1, &f2, factor, radius, eps, &domain)?;
            let verified = ball.verify(&f1, &f2, eps)?;
            emit(&TwofunOut { ball, verified }, &out)?;
            if !verified {
                return Ok(Outcome::CheckFailed("returned ball does not pass both bounds".into()));
            }
        }
        Command::Solve { problem, tol, max_iter, out, trace } => {
            let prob = io::load_problem(problem)?;
            let result = solve(&prob, tol, max_iter)?;
            io::save_patch(&result.final_w, out)?;
            if let Some(path) = trace {
                io::save_json(&TraceOut { converged: result.converged, iterations: result.iterations.clone() }, path)?;
            }
            println!("iterations = {}, residual = {:e}", result.iterations.len() - 1, result.final_residual());
            if !result.converged {
                return Err(Error::Data(format!("not converged after {max_iter} iterations")));
            }
        }
        Command::CrossRatio { patch, edge } => {
            let p = io::load_patch(patch)?;
            println!("{}", p.length_cross_ratio(edge.0, edge.1)?);
        }
        Command::CheckBound { patch, tol, out } => {
            let report = io::load_patch(patch)?.check_edge_ratio_bound(tol)?;
            println!("{} flat interior vertex(es), min ratio {}", report.flat_vertices, report.min_ratio);
            if out.is_some() {
                emit(&report, &out)?;
            }
            if !report.holds() {
                return Ok(Outcome::CheckFailed(format!("{} ratio violation(s)", report.violations.len())));
            }
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
