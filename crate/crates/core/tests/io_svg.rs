use hexconf::error::Error;
use hexconf::io::*;
use hexconf::lattice::{Ball, Face, LatticeVertex};
use hexconf::layout::{develop, find_overlap, overlap_radius};
use hexconf::patch::{linear_factor, ConformalPatch};
use hexconf::solver::YamabeProblem;
use hexconf::svg::{count_polygons, render_svg, write_svg};

const ORIGIN: LatticeVertex = LatticeVertex::ORIGIN;

#[test]
fn patch_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let p = linear_factor(0.1, 0.0, &Ball::new(ORIGIN, 4)).unwrap();
    let q = ConformalPatch::from_fn(Ball::new(LatticeVertex::new(2, -1), 3), 0.7, |v| {
        (v.m as f64 * 0.1).sin() / 3.0 + 1e-17 * v.n as f64
    })
    .unwrap();
    for x in [p, q] {
        save_patch(&x, &path).unwrap();
        let y = load_patch(&path).unwrap();
        assert_eq!(x.ball().vertices(), y.ball().vertices());
        assert_eq!(x.base_length().to_bits(), y.base_length().to_bits());
        for (a, b) in x.w_values().iter().zip(y.w_values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // saving twice gives identical bytes
        let first = std::fs::read(&path).unwrap();
        save_patch(&y, &path).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
    }
}

#[test]
fn patch_schema_errors_name_the_vertex() {
    let p = linear_factor(0.1, 0.0, &Ball::new(ORIGIN, 2)).unwrap();
    let mut file = patch_to_file(&p).unwrap();
    let removed = file.w.remove(5);
    let err = patch_from_file(&file).unwrap_err().to_string();
    assert!(err.contains(&format!("({},{})", removed.0, removed.1)), "{err}");

    let mut file = patch_to_file(&p).unwrap();
    let dup = file.w[3];
    file.w.push(dup);
    let err = patch_from_file(&file).unwrap_err().to_string();
    assert!(err.contains("duplicate") && err.contains(&format!("({},{})", dup.0, dup.1)), "{err}");

    let err = patch_from_json(r#"{"center":[0,0],"radius":1,"base_length":1.0}"#).unwrap_err();
    assert!(matches!(err, Error::Data(_)), "{err}");
    let err = patch_from_json(r#"{"center":[0,0],"radius":"x","base_length":1.0,"w":[]}"#).unwrap_err();
    assert!(err.to_string().contains("line 1"), "{err}");
}

#[test]
fn layout_and_problem_files() {
    let p = linear_factor(0.05, -0.02, &Ball::new(ORIGIN, 3)).unwrap();
    let l = develop(&p, Face::up(ORIGIN)).unwrap();
    let back = layout_from_json(&layout_to_json(&l).unwrap()).unwrap();
    assert_eq!(back.positions, l.positions);
    assert_eq!(back.placed_faces.len(), l.placed_faces.len());
    assert_eq!(back.holonomy_residual.to_bits(), l.holonomy_residual.to_bits());

    let prob = YamabeProblem::flat(Ball::new(ORIGIN, 3), |v| 0.01 * v.m as f64);
    let again = problem_from_json(&problem_to_json(&prob).unwrap()).unwrap();
    assert_eq!(again.boundary_w, prob.boundary_w);
    assert_eq!(again.target_k, prob.target_k);
    let text = problem_to_json(&prob).unwrap().replacen("[\n      0,\n      0,\n      0.0\n    ]", "[0, 9, 0.0]", 1);
    let err = problem_from_json(&text).unwrap_err().to_string();
    assert!(err.contains("target_K") && err.contains("(0,0)"), "{err}");
}

#[test]
fn svg_polygon_counts() {
    let regular = ConformalPatch::regular(Ball::new(ORIGIN, 2));
    let l = develop(&regular, Face::up(ORIGIN)).unwrap();
    let svg = render_svg(&l, &find_overlap(&l)).unwrap();
    assert_eq!(count_polygons(&svg), (24, 0));
    assert!(svg.contains("viewBox"));

    let w = overlap_radius(0.2, 0.0, 64).unwrap().unwrap();
    let p = linear_factor(0.2, 0.0, &Ball::new(ORIGIN, w.radius)).unwrap();
    let l = develop(&p, Face::up(ORIGIN)).unwrap();
    let report = find_overlap(&l);
    let svg = render_svg(&l, &report).unwrap();
    let (total, hot) = count_polygons(&svg);
    assert_eq!(total, l.placed_faces.len());
    assert!(hot >= 2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l.svg");
    write_svg(&l, &report, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), svg);
}
