use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use folia::{save_field, DomainShape, ScalarField};

fn folia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_folia")).args(args).output().unwrap()
}

fn field(dir: &Path, stem: &str, shape: DomainShape, f: impl Fn(f64, f64) -> f64) -> PathBuf {
    let ny = if shape == DomainShape::HalfDisk { 33 } else { 65 };
    save_field(&ScalarField::from_fn(shape, 65, ny, f).unwrap(), dir, stem).unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn classify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let linear = field(dir.path(), "linear", DomainShape::Square, |_, y| y);
    let plateau = field(dir.path(), "plateau", DomainShape::Square, |_, y| y.min(0.5));
    let out = dir.path().join("verdict.json");

    let run = folia(&["classify", "--field", arg(&linear), "--out", arg(&out)]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(json(&out)["status"], "weakly_regular");

    let run = folia(&["classify", "--field", arg(&plateau), "--out", arg(&out)]);
    assert_eq!(run.status.code(), Some(1));
    assert_eq!(json(&out)["status"], "not_regular");

    let missing = dir.path().join("missing.json");
    assert_eq!(folia(&["classify", "--field", arg(&missing)]).status.code(), Some(2));
    assert_eq!(folia(&["classify", "--field", arg(&linear), "--tol-level", "-1"]).status.code(), Some(2));
}

#[test]
fn levels_and_render_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let f = field(dir.path(), "y", DomainShape::Square, |_, y| y);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let svg = dir.path().join("a.svg");
    for out in [&a, &b] {
        let run = folia(&["levels", "--field", arg(&f), "-n", "11", "--out", arg(out), "--svg", arg(&svg)]);
        assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(json(&a)["curves"].as_array().unwrap().len(), 11);

    let rendered = dir.path().join("r.svg");
    assert_eq!(folia(&["render", "--input", arg(&a), "--out", arg(&rendered)]).status.code(), Some(0));
    let text = std::fs::read_to_string(&rendered).unwrap();
    assert_eq!(text, std::fs::read_to_string(&svg).unwrap());
    assert!(text.contains("viewBox=\"0 0 1024 1024\""));
    assert_eq!(text.matches("<polyline").count(), 1 + 11);
}

#[test]
fn rectify_squared_field_rows_follow_square_root() {
    let dir = tempfile::tempdir().unwrap();
    let f = field(dir.path(), "y2", DomainShape::Square, |_, y| y * y);
    let out = dir.path().join("h.json");
    let run = folia(&["rectify", "--field", arg(&f), "--model", "square", "--levels", "17", "--samples", "17", "--out", arg(&out)]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let h = json(&out);
    let grid = h["grid"].as_array().unwrap();
    assert_eq!(grid.len(), 17);
    for (j, row) in grid.iter().enumerate() {
        let want = (j as f64 / 16.0).sqrt();
        for p in row.as_array().unwrap() {
            assert!((p[1].as_f64().unwrap() - want).abs() < 2.0 / 64.0, "row {j}: {p}");
        }
    }
    let svg = dir.path().join("h.svg");
    assert_eq!(folia(&["render", "--input", arg(&out), "--out", arg(&svg)]).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<polyline").count(), 1 + 17 + 17);
}

#[test]
fn curve_commands() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    std::fs::write(&a, "[[0, 0], [1, 0]]").unwrap();
    std::fs::write(&b, "[[0, 1], [0.5, 1], [1, 1]]").unwrap();
    let out = dir.path().join("d.json");
    assert_eq!(folia(&["frechet", "--a", arg(&a), "--b", arg(&b), "--out", arg(&out)]).status.code(), Some(0));
    assert!((json(&out)["distance"].as_f64().unwrap() - 1.25f64.sqrt()).abs() < 1e-12);
    assert_eq!(folia(&["frechet", "--a", arg(&a), "--b", arg(&b), "--spacing", "0.01", "--out", arg(&out)]).status.code(), Some(0));
    assert!((json(&out)["distance"].as_f64().unwrap() - 1.0).abs() < 1e-3);

    let run = folia(&["mu", "--curve", arg(&a), "--eps", "1e-9", "--resample", "5", "--out", arg(&out)]);
    assert_eq!(run.status.code(), Some(0));
    let r = json(&out);
    assert!((r["mu_length"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-6);
    assert_eq!(r["resampled"].as_array().unwrap().len(), 5);

    std::fs::write(&b, "not json").unwrap();
    assert_eq!(folia(&["frechet", "--a", arg(&a), "--b", arg(&b)]).status.code(), Some(2));
}

#[test]
fn conjugate_identity_boundary_map() {
    let dir = tempfile::tempdir().unwrap();
    let f = field(dir.path(), "f", DomainShape::Square, |_, y| y);
    let g = field(dir.path(), "g", DomainShape::Square, |_, y| y * y);
    let phi0 = dir.path().join("phi0.json");
    let pairs: Vec<[f64; 2]> = (0..64)
        .map(|i| {
            let s = i as f64 / 64.0;
            let p = DomainShape::Square.boundary_point(s);
            let q = folia::Vector2::new(p.x, p.y.sqrt());
            [s, DomainShape::Square.boundary_param(q)]
        })
        .collect();
    std::fs::write(&phi0, serde_json::to_string(&pairs).unwrap()).unwrap();
    let out = dir.path().join("phi.json");
    let run = folia(&["conjugate", "--f", arg(&f), "--g", arg(&g), "--phi0", arg(&phi0), "--levels", "17", "--samples", "17", "--out", arg(&out)]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(json(&out)["report"]["passed"], true);
}
