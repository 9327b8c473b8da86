use std::path::Path;
use std::process::{Command, Output};

use gibc::meshio::to_off;
use gibc::mie::{mie_rcs, MieSurface};
use gibc::output::parse_coefficients_csv;
use gibc::surface::icosphere;

fn gibc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn column(csv_text: &str, name: &str) -> Vec<f64> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = reader.headers().unwrap().iter().position(|h| h == name).unwrap();
    reader
        .records()
        .map(|r| r.unwrap()[idx].parse().unwrap())
        .collect()
}

#[test]
fn validate_with_defaults_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = gibc(&["validate", "--output_dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("validate.csv").exists());
}

#[test]
fn pec_rcs_matches_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "omega = 1.5\na = 1\nmodel = pec\ntheta_points = 19\nsvg = false\noutput_dir = {}\n",
            dir.path().display()
        ),
    );
    let out = gibc(&["rcs", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("rcs.csv")).unwrap();
    let theta = column(&text, "theta");
    let sigma = column(&text, "sigma");
    assert_eq!(theta.len(), 19);
    for (t, s) in theta.iter().zip(&sigma) {
        let d = [t.sin(), 0.0, t.cos()];
        let oracle = mie_rcs(MieSurface::Pec, 1.5, 1.0, &d).unwrap();
        assert!((s - oracle).abs() <= 1e-8 * oracle, "theta {t}: {s} vs {oracle}");
    }
}

#[test]
fn mesh_decompose_of_gradient_reconstructs() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("sphere.off");
    std::fs::write(&mesh_path, to_off(&icosphere(3, 1.0).unwrap())).unwrap();
    let out = gibc(&[
        "decompose",
        "--mesh_path",
        mesh_path.to_str().unwrap(),
        "--field",
        "gradient",
        "--output_dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("decompose.csv")).unwrap();
    let err = column(&text, "reconstruction_error");
    assert_eq!(err.len(), 1280);
    assert!(err.iter().all(|e| *e <= 1e-10));
}

#[test]
fn unknown_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "omega = 1\na = 1\nmodel = pec\nfrobnicate = 3\n");
    let out = gibc(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn unknown_command_is_a_usage_error() {
    assert_eq!(gibc(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_required_key_is_reported() {
    let out = gibc(&["solve", "--omega", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_is_deterministic_and_round_trips() {
    let run = |dir: &Path| {
        let out = gibc(&[
            "solve",
            "--omega=1",
            "--a=1",
            "--model=scalar lambda=1+0.5i",
            "--output_dir",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(dir.join("coefficients.csv")).unwrap()
    };
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run(d1.path());
    assert_eq!(first, run(d2.path()));
    let field = parse_coefficients_csv(&first).unwrap();
    assert_eq!(gibc::output::coefficients_csv(&field).unwrap(), first);
}

#[test]
fn fem_equivalence_passes_at_automatic_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let out = gibc(&[
        "equivalence",
        "--omega=1",
        "--a=1",
        "--model=div_only lambda=1i gamma=-1i",
        "--radial_solver=fem",
        "--output_dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = std::fs::read_to_string(dir.path().join("equivalence.csv")).unwrap();
    assert!(column(&text, "rel_diff").iter().all(|d| *d <= 1e-4));
}
