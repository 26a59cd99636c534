use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_projgeo"));
    c.env_remove("PROJGEO_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.push("--json");
    let out = run(&all);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn real_doc(rows: &[Vec<f64>]) -> Value {
    let n = rows.len();
    json!({"n": n, "re": rows, "im": vec![vec![0.0; n]; n]})
}

/// Projection onto a real unit vector.
fn rank_one(v: &[f64]) -> Vec<Vec<f64>> {
    v.iter()
        .map(|a| v.iter().map(|b| a * b).collect())
        .collect()
}

fn write(dir: &Path, name: &str, doc: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(doc).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn pi4_files(dir: &Path) -> (PathBuf, PathBuf) {
    let (c, sn) = (FRAC_PI_4.cos(), FRAC_PI_4.sin());
    let p = real_doc(&[
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0],
    ]);
    let q = real_doc(&[
        vec![1.0, 0.0, 0.0],
        vec![0.0, c * c, c * sn],
        vec![0.0, c * sn, sn * sn],
    ]);
    (write(dir, "p.json", &p), write(dir, "q.json", &q))
}

#[test]
fn decompose_pi4_example() {
    let dir = TempDir::new().unwrap();
    let (p, q) = pi4_files(dir.path());
    let r = run_json(&["decompose", s(&p), s(&q)]);
    let ranks = &r["results"]["ranks"];
    let got: Vec<u64> = ["e11", "e00", "e10", "e01", "e0"]
        .iter()
        .map(|k| ranks[k].as_u64().unwrap())
        .collect();
    assert_eq!(got, vec![1, 0, 0, 0, 2]);
    let angles = r["results"]["angles"].as_array().unwrap();
    assert_eq!(angles.len(), 1);
    assert!((f(&angles[0]) - FRAC_PI_4).abs() < 1e-12);
    assert_eq!(r["results"]["exists"], true);
    assert_eq!(r["results"]["unique"], true);
    assert_eq!(r["inputs"].as_array().unwrap().len(), 2);
    assert!(r["residuals"]["halmos"].is_number());
}

#[test]
fn decompose_equal_files() {
    let dir = TempDir::new().unwrap();
    let (p, _) = pi4_files(dir.path());
    let r = run_json(&["decompose", s(&p), s(&p)]);
    assert_eq!(r["results"]["exists"], true);
    assert_eq!(r["results"]["unique"], true);
    assert_eq!(f(&r["results"]["distance"]), 0.0);
}

#[test]
fn malformed_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"n\": 2, \"re\": [[1, 0]").unwrap();
    let out = run(&["decompose", s(&bad), s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));

    let shape = write(
        dir.path(),
        "shape.json",
        &json!({"n": 2, "re": [[1.0]], "im": [[0.0]]}),
    );
    assert_eq!(
        run(&["decompose", s(&shape), s(&shape)]).status.code(),
        Some(2)
    );

    let not_proj = write(
        dir.path(),
        "np.json",
        &real_doc(&[vec![2.0, 0.0], vec![0.0, 0.0]]),
    );
    assert_eq!(
        run(&["decompose", s(&not_proj), s(&not_proj)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn geodesic_midpoint_of_pi3_pair() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.json", &real_doc(&rank_one(&[1.0, 0.0])));
    let q = write(
        dir.path(),
        "q.json",
        &real_doc(&rank_one(&[FRAC_PI_3.cos(), FRAC_PI_3.sin()])),
    );
    let out = dir.path().join("bundle.json");
    let r = run_json(&["geodesic", s(&p), s(&q), "--t", "0.5", "--out", s(&out)]);
    assert!((f(&r["results"]["distance"]) - FRAC_PI_3).abs() < 1e-12);
    let mid = &r["results"]["samples"][0]["point"];
    let expected = rank_one(&[FRAC_PI_6.cos(), FRAC_PI_6.sin()]);
    for i in 0..2 {
        for j in 0..2 {
            assert!((f(&mid["re"][i][j]) - expected[i][j]).abs() < 1e-12);
            assert!(f(&mid["im"][i][j]).abs() < 1e-12);
        }
    }
    for k in ["skewness", "codiagonality", "norm_excess", "endpoint"] {
        assert!(f(&r["residuals"][k]) < 1e-8);
    }
    // the bundle holds the same exponent, bit for bit
    let bundle: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(bundle["z"], r["results"]["z"]);
}

#[test]
fn geodesic_rank_mismatch_exits_3() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.json", &real_doc(&rank_one(&[1.0, 0.0])));
    let q = write(
        dir.path(),
        "q.json",
        &real_doc(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
    );
    let out = run(&["geodesic", s(&p), s(&q)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn geodesic_rho_length_of_orthogonal_pair() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.json", &real_doc(&rank_one(&[1.0, 0.0])));
    let q = write(dir.path(), "q.json", &real_doc(&rank_one(&[0.0, 1.0])));
    let r = run_json(&["geodesic", s(&p), s(&q), "--rho", "2"]);
    let len = f(&r["results"]["rho_lengths"][0]["length"]);
    assert!((len - FRAC_PI_2).abs() < 1e-12);
    assert_eq!(r["results"]["unique"], false);
    assert_eq!(
        run(&["geodesic", s(&p), s(&q), "--rho", "0.5"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn geodesic_seed_selects_wedge_isometry() {
    let dir = TempDir::new().unwrap();
    let mut pm = vec![vec![0.0; 4]; 4];
    let mut qm = vec![vec![0.0; 4]; 4];
    pm[0][0] = 1.0;
    pm[1][1] = 1.0;
    qm[2][2] = 1.0;
    qm[3][3] = 1.0;
    let p = write(dir.path(), "p.json", &real_doc(&pm));
    let q = write(dir.path(), "q.json", &real_doc(&qm));
    let a = run_json(&["geodesic", s(&p), s(&q), "--seed", "1"]);
    let b = run_json(&["geodesic", s(&p), s(&q), "--seed", "2"]);
    let env = bin()
        .args(["geodesic", s(&p), s(&q), "--json"])
        .env("PROJGEO_SEED", "1")
        .output()
        .unwrap();
    let env: Value = serde_json::from_slice(&env.stdout).unwrap();
    assert_ne!(a["results"]["z"], b["results"]["z"]);
    assert_eq!(a["results"]["z"], env["results"]["z"]);
    for r in [&a, &b] {
        assert!((f(&r["results"]["distance"]) - FRAC_PI_2).abs() < 1e-12);
    }
}

#[test]
fn jones_reports() {
    let r = run_json(&["jones", "--m", "2", "--k", "1"]);
    assert!((f(&r["results"]["d"]["measured"]) - FRAC_PI_4).abs() < 1e-12);
    assert_eq!(r["results"]["d"]["passed"], true);

    let r = run_json(&["jones", "--m", "4", "--k", "1", "--rho", "2"]);
    let res = &r["results"];
    assert!((f(&res["tau"]) - 0.25).abs() < 1e-15);
    assert!((f(&res["d"]["measured"]) - FRAC_PI_3).abs() < 1e-12);
    let d2 = &res["d_rho"][0];
    assert!((f(&d2["expected"]) - FRAC_PI_6).abs() < 1e-15);
    // measured from z* z = θ² on the generic part, which has trace 1/2
    assert!((f(&d2["measured"]) - 0.5f64.sqrt() * FRAC_PI_3).abs() < 1e-12);
    let agrees = (f(&d2["measured"]) - f(&d2["expected"])).abs() <= 1e-9;
    assert_eq!(d2["passed"], agrees);
    assert_eq!(res["all_passed"], agrees);
}

#[test]
fn jones_bad_flags_exit_2() {
    assert_eq!(run(&["jones", "--m", "1"]).status.code(), Some(2));
    assert_eq!(
        run(&["jones", "--m", "3", "--k", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["jones"]).status.code(), Some(2));
}

#[test]
fn transport_rotated_diagonal() {
    let r = run_json(&[
        "transport",
        "--spec0",
        "diag:2",
        "--spec1",
        "diag:2@pi/8",
        "--steps",
        "1000",
    ]);
    assert!(f(&r["residuals"]["max"]) < 1e-6);
    let order = f(&r["results"]["convergence_order"]);
    assert!((3.5..=4.5).contains(&order));
    assert_eq!(r["results"]["samples"].as_array().unwrap().len(), 5);
}

#[test]
fn transport_identical_specs() {
    let r = run_json(&[
        "transport",
        "--spec0",
        "tensor:2,2",
        "--spec1",
        "tensor:2,2",
        "--trials",
        "3",
    ]);
    for k in ["ode", "axioms", "propagator", "max"] {
        assert!(f(&r["residuals"][k]) < 1e-12, "{k}");
    }
    assert!(r["results"]["convergence_order"].is_null());
}

#[test]
fn transport_quarter_turn() {
    let out = run(&["transport", "--spec0", "diag:2", "--spec1", "diag:2@pi/4"]);
    assert_eq!(out.status.code(), Some(3));
    let r = run_json(&[
        "transport",
        "--spec0",
        "diag:2",
        "--spec1",
        "diag:2@pi/4",
        "--unguarded",
    ]);
    assert_eq!(r["results"]["guarded"], false);
    assert!((f(&r["results"]["separation"]) - 1.0).abs() < 1e-9);
}

#[test]
fn transport_span_file_and_usage_errors() {
    let dir = TempDir::new().unwrap();
    let span = json!([
        real_doc(&[vec![1.0, 0.0], vec![0.0, 0.0]]),
        real_doc(&[vec![0.0, 0.0], vec![0.0, 1.0]]),
    ]);
    let path = write(dir.path(), "span.json", &span);
    let spec = format!("span:{}", s(&path));
    let r = run_json(&[
        "transport",
        "--spec0",
        &spec,
        "--spec1",
        "diag:2",
        "--trials",
        "1",
    ]);
    assert!(f(&r["residuals"]["max"]) < 1e-12);
    assert_eq!(r["inputs"].as_array().unwrap().len(), 1);

    let not_algebra = write(
        dir.path(),
        "bad.json",
        &json!([
            real_doc(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
            real_doc(&[vec![0.0, 1.0], vec![0.0, 0.0]])
        ]),
    );
    let spec = format!("span:{}", s(&not_algebra));
    assert_eq!(
        run(&["transport", "--spec0", &spec, "--spec1", "diag:2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["transport", "--spec0", "diag:2", "--spec1", "diag:3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["transport", "--spec0", "cube:2", "--spec1", "diag:2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "transport",
            "--spec0",
            "diag:2",
            "--spec1",
            "diag:2",
            "--steps",
            "10"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn random_is_deterministic() {
    let args = [
        "random", "--n", "8", "--trials", "100", "--seed", "7", "--json",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let seq = run_json(&[
        "random",
        "--n",
        "8",
        "--trials",
        "100",
        "--seed",
        "7",
        "--sequential",
    ]);
    let par: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(seq["results"], par["results"]);
    assert_eq!(par["results"]["summary"]["passed"], 100);

    let env = bin()
        .args(["random", "--n", "8", "--trials", "100", "--json"])
        .env("PROJGEO_SEED", "7")
        .output()
        .unwrap();
    let env: Value = serde_json::from_slice(&env.stdout).unwrap();
    assert_eq!(env["results"], par["results"]);
    assert_eq!(env["seed"], 7);
}

#[test]
fn random_force_wedge() {
    let r = run_json(&[
        "random",
        "--n",
        "6",
        "--trials",
        "20",
        "--seed",
        "3",
        "--force-wedge",
    ]);
    let trials = r["results"]["trials"].as_array().unwrap();
    for t in trials {
        let e10 = t["ranks"]["e10"].as_u64().unwrap();
        assert!(e10 >= 1);
        assert_eq!(e10, t["ranks"]["e01"].as_u64().unwrap());
        assert_eq!(t["unique"], false);
        assert_eq!(t["passed"], true);
    }
    assert_eq!(r["results"]["non_unique"], 20);
}

#[test]
fn random_limits() {
    assert_eq!(run(&["random", "--n", "100000"]).status.code(), Some(2));
    assert_eq!(
        run(&["random", "--n", "4", "--ranks", "9"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["random", "--n", "4", "--ranks", "4", "--force-wedge"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["random", "--tol-rank", "-1"]).status.code(), Some(2));
}

#[test]
fn text_output_lists_residuals() {
    let out = run(&["jones", "--m", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("residuals.relation:"));
    assert!(text.contains("results.tau:"));
}
