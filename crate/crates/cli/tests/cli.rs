use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const PHI: f64 = 1.618_033_988_749_895;

fn gnwood(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnwood")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = gnwood(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(path: PathBuf) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

/// Mesh and survey for 17 electrodes on `[-50, 50]`.
fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["mesh", "--nele", "17", "--radius", "80", "--extent", "-50", "50", "--out", "mesh.json"]);
    ok(dir.path(), &["survey", "--mesh", "mesh.json", "--out", "survey.csv"]);
    dir
}

fn observations(dir: &Path, kind: &str, out: &str) -> Vec<f64> {
    let model = format!("{kind}.json");
    ok(dir, &["model", "--mesh", "mesh.json", "--kind", kind, "--out", &model]);
    ok(dir, &["forward", "--mesh", "mesh.json", "--survey", "survey.csv", "--model", &model, "--out", out]);
    csv_rows(dir.join(out)).iter().map(|r| r[1].parse().unwrap()).collect()
}

#[test]
fn mesh_is_byte_identical_across_runs() {
    let dir = setup();
    ok(dir.path(), &["mesh", "--nele", "17", "--out", "again.json"]);
    assert_eq!(fs::read(dir.path().join("mesh.json")).unwrap(), fs::read(dir.path().join("again.json")).unwrap());
}

#[test]
fn survey_has_six_n_minus_56_rows() {
    let dir = setup();
    assert_eq!(csv_rows(dir.path().join("survey.csv")).len(), 46);
}

#[test]
fn homogeneous_data_reads_background_resistivity() {
    let dir = setup();
    let g = observations(dir.path(), "homogeneous", "obs.csv");
    let survey = csv_rows(dir.path().join("survey.csv"));
    let interior: Vec<usize> = survey
        .iter()
        .enumerate()
        .filter(|(_, r)| [&r[1], &r[3], &r[4]].iter().all(|e| (5..=11).contains(&e.parse::<i64>().unwrap())))
        .map(|(i, _)| i)
        .collect();
    assert!(!interior.is_empty());
    for i in interior {
        assert!((0.85 * 3500.0..=1.15 * 3500.0).contains(&g[i]), "config {i}: {}", g[i]);
    }
}

#[test]
fn checkerboard_data_varies_and_is_reproducible() {
    let dir = setup();
    let g = observations(dir.path(), "checkerboard", "a.csv");
    observations(dir.path(), "checkerboard", "b.csv");
    let (lo, hi) = g.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi > 1.05 * lo, "{lo} {hi}");
    assert_eq!(fs::read(dir.path().join("a.csv")).unwrap(), fs::read(dir.path().join("b.csv")).unwrap());
}

#[test]
fn woodbury_inversion_reports_two_steps() {
    let dir = setup();
    observations(dir.path(), "checkerboard", "obs.csv");
    let args = ["invert", "--mesh", "mesh.json", "--survey", "survey.csv", "--obs", "obs.csv"];
    ok(dir.path(), &[&args[..], &["--algo", "woodbury", "--beta", "0.1", "--steps", "2", "--out", "w.json", "--report", "w.csv"]].concat());
    let header = fs::read_to_string(dir.path().join("w.csv")).unwrap();
    assert!(header.starts_with("nele,N,M,step,n_iter,t_H,t_C,t_chol,t_norm\n"));
    let rows = csv_rows(dir.path().join("w.csv"));
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r[0], "17");
        assert!(r[4].parse::<usize>().unwrap() <= 30, "{r:?}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("w.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["beta"], 0.1);
    assert_eq!(manifest["config"]["algorithm"], "woodbury_minres");
    assert_eq!(manifest["files"]["observations"], "obs.csv");

    ok(dir.path(), &[&args[..], &["--algo", "direct", "--out", "d.json", "--report", "d.csv", "--manifest", "d.manifest"]].concat());
    for r in csv_rows(dir.path().join("d.csv")) {
        assert_eq!(r[4], "");
        assert!(r[6].parse::<f64>().unwrap() > 0.0);
    }
    assert!(dir.path().join("d.manifest").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gnwood(dir.path(), &["mesh", "--nele", "1", "--out", "m.json"]).status.code(), Some(2));
    let invert = ["invert", "--mesh", "m", "--survey", "s", "--obs", "o", "--out", "r", "--report", "c"];
    assert_eq!(gnwood(dir.path(), &[&invert[..], &["--beta", "0"]].concat()).status.code(), Some(2));
    assert_eq!(gnwood(dir.path(), &["frobnicate"]).status.code(), Some(2));
    let threads = Command::new(env!("CARGO_BIN_EXE_gnwood"))
        .current_dir(dir.path())
        .env("GNWOOD_THREADS", "zero")
        .args(["spectrum", "--out", "s.csv"])
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = setup();
    let out = gnwood(dir.path(), &["forward", "--mesh", "mesh.json", "--survey", "survey.csv", "--model", "none.json", "--out", "o.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn spectrum_of_unperturbed_operator_has_three_values() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["spectrum", "--nmeas", "0", "--out", "s.csv"]);
    assert!(stdout.contains("phi = 1.618033988749"));
    assert!(stdout.contains("PASS"));
    for r in csv_rows(dir.path().join("s.csv")) {
        let l: f64 = r[1].parse().unwrap();
        assert!([1.0, PHI, 1.0 - PHI].iter().any(|v| (l - v).abs() < 1e-8), "{l}");
    }
}

#[test]
fn spectrum_with_data_term_stays_in_bound() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["spectrum", "--beta", "1", "--nmeas", "5", "--seed", "3", "--out", "s.csv"]);
    assert!(stdout.contains("PASS"), "{stdout}");
    assert!(csv_rows(dir.path().join("s.csv")).iter().all(|r| r[2] == "true"));
}

#[test]
fn spectrum_refuses_large_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let out = gnwood(dir.path(), &["spectrum", "--nx", "20", "--nz", "20", "--out", "s.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceed"));
}

#[test]
fn bench_table_rows_and_trends() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["bench", "--nele", "17,33,65", "--algos", "woodbury,laplace", "--out", "bench.csv"]);
    let rows = csv_rows(dir.path().join("bench.csv"));
    assert_eq!(rows.len(), 12);
    let iters = |algo: &str, step: &str| -> Vec<usize> {
        rows.iter().filter(|r| r[0] == algo && r[5] == step).map(|r| r[6].parse().unwrap()).collect()
    };
    for step in ["1", "2"] {
        let w = iters("woodbury_minres", step);
        assert!(w.iter().max().unwrap() <= &(2 * w.iter().min().unwrap()), "{w:?}");
        let l = iters("laplace_minres", step);
        assert!(l.windows(2).all(|p| p[1] > p[0]), "{l:?}");
    }
}
