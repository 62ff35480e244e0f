use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_simplex-grasp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TRIANGLE: &str = r#"{"n": 2, "vertices": [[0, 0], [1, 0], [0, 1]]}"#;

#[test]
fn normals_of_triangle() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "tri.json", TRIANGLE);
    let out = run(&["normals", "--input", s(&input)]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("volume = 0.5"), "{text}");
    assert!(text.contains("k0 = (1 1)  kappa = -1  facet volume = 1.41421356"), "{text}");
    assert!(text.contains("k1 = (-1 0)"));

    let out = run(&["normals", "--input", s(&input), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["volume"].as_f64(), Some(0.5));
    assert_eq!(v["fan"]["kappa"][0].as_f64(), Some(-1.0));
}

#[test]
fn collinear_simplex_is_a_geometry_error() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "flat.json", r#"{"n": 2, "vertices": [[0, 0], [1, 1], [2, 2]]}"#);
    assert_eq!(run(&["normals", "--input", s(&input)]).status.code(), Some(3));
}

#[test]
fn malformed_input_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "bad.json", r#"{"n": 2, "vertices": [[0, 0], [1, 0]"#);
    assert_eq!(run(&["normals", "--input", s(&input)]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["normals", "--input", s(&missing)]).status.code(), Some(2));
    let short = write(&dir, "short.json", r#"{"n": 2, "vertices": [[0, 0], [1, 0]]}"#);
    assert_eq!(run(&["normals", "--input", s(&short)]).status.code(), Some(2));
}

#[test]
fn worked_example_reproduces() {
    let out = run(&["worked-example"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("symmetric: yes, APD: no, immobilizes: NO"), "{text}");
    assert!(text.contains("k1 = (16 -11.3333333 0 -6.61111111)"), "{text}");

    let out = run(&["worked-example", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["normals"].as_array().unwrap().len(), 5);
    assert!((v["penetration_matrix"][3][3].as_f64().unwrap() + 13.6).abs() < 1e-9);
    assert_eq!(v["reproduced"].as_bool(), Some(true));
}

#[test]
fn worked_example_oracle_witness_lies_in_last_eigenplane() {
    let out = run(&["worked-example", "--oracle", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["oracle"]["verdict"], "RefuteWithWitness");
    let generator: Vec<f64> =
        v["oracle"]["witness"]["generator"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    // A is diagonal, so its eigenbasis is the standard one; only the (2, 3) coordinate is set
    assert!(generator[..5].iter().all(|c| c.abs() < 1e-12), "{generator:?}");
    assert!(generator[5].abs() > 0.0);
}

#[test]
fn centroids_immobilize_with_unit_margin() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "tri.json", TRIANGLE);
    let contacts = dir.path().join("c.json");
    let out = run(&["synthesize", "--input", s(&input), "--mode", "centroid", "--output", s(&contacts)]);
    assert!(out.status.success());

    let file: serde_json::Value = serde_json::from_str(&fs::read_to_string(&contacts).unwrap()).unwrap();
    let lambda = &file["barycentric"];
    for j in 0..3 {
        for i in 0..3 {
            let expected = if i == j { 0.0 } else { 0.5 };
            assert_eq!(lambda[j][i].as_f64(), Some(expected));
        }
    }

    let out = run(&["check", "--input", s(&input), "--contacts", s(&contacts), "--oracle"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("immobilizes: YES, margin 1.000"), "{text}");
    assert!(text.contains("oracle: ConfirmImmobilizing"), "{text}");
}

#[test]
fn asymmetric_contacts_are_refuted() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "tri.json", TRIANGLE);
    let contacts = write(&dir, "c.json", r#"{"barycentric": [[0, 0.9, 0.1], [0.5, 0, 0.5], [0.9, 0.1, 0]]}"#);
    let out = run(&["check", "--input", s(&input), "--contacts", s(&contacts), "--oracle"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("symmetric: no, immobilizes: NO"), "{text}");
    assert!(text.contains("oracle: RefuteWithWitness"), "{text}");
    assert!(text.contains("witness generator:"), "{text}");
}

#[test]
fn off_face_contacts_are_a_geometry_error() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "tri.json", TRIANGLE);
    let contacts = write(&dir, "c.json", r#"{"points": [[0.5, 0.5], [0.1, 0.5], [0.5, 0]]}"#);
    let out = run(&["check", "--input", s(&input), "--contacts", s(&contacts)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn centred_synthesis() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "tri.json", TRIANGLE);
    let contacts = dir.path().join("c.json");
    let out = run(&["synthesize", "--input", s(&input), "--mode", "centred", "--output", s(&contacts), "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // μ_i = |k_i| / Σ|k_l| with |k| = (√2, 1, 1)
    let total = 2.0 + 2f64.sqrt();
    assert!((v["witness"]["mu"][0].as_f64().unwrap() - 2f64.sqrt() / total).abs() < 1e-15);
    assert_eq!(v["verdict"]["immobilizes"].as_bool(), Some(true));

    let out = run(&["check", "--input", s(&input), "--contacts", s(&contacts)]);
    assert!(stdout(&out).contains("immobilizes: YES"));

    let out = run(&["synthesize", "--input", s(&input), "--mode", "centred", "--z", "5,5"]);
    assert_eq!(out.status.code(), Some(5));
    let out = run(&["synthesize", "--input", s(&input), "--mode", "centred", "--z=-1,0.2"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn displacement_splits_the_spectrum() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "tri.json", TRIANGLE);
    let contacts = dir.path().join("c.json");
    assert!(run(&["synthesize", "--input", s(&input), "--output", s(&contacts)]).status.success());

    // |k01| = 1/√2, |k10| = 1: eigenvalues 0.5 ± t/√2
    let t = 0.1;
    let coeffs = write(&dir, "k.json", &format!(r#"{{"coeffs": [{{"i": 0, "j": 1, "t": {t}}}]}}"#));
    let moved = dir.path().join("moved.json");
    let out = run(&[
        "displace",
        "--input",
        s(&input),
        "--contacts",
        s(&contacts),
        "--coeffs",
        s(&coeffs),
        "--output",
        s(&moved),
        "--json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let eig: Vec<f64> = v["after"]["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let split = t / 2f64.sqrt();
    assert!((eig[0] - (0.5 - split)).abs() < 1e-12 && (eig[1] - (0.5 + split)).abs() < 1e-12, "{eig:?}");
    assert!(v["min_pair_sum_change"].as_f64().unwrap() <= 0.0);
    assert!(moved.exists());

    let zero = write(&dir, "zero.json", r#"{"coeffs": []}"#);
    let out = run(&["displace", "--input", s(&input), "--contacts", s(&contacts), "--coeffs", s(&zero), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["before"], v["after"]);

    let huge = write(&dir, "huge.json", r#"{"coeffs": [{"i": 0, "j": 1, "t": 100}]}"#);
    let out = run(&["displace", "--input", s(&input), "--contacts", s(&contacts), "--coeffs", s(&huge)]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let input =
        write(&dir, "tri.json", r#"{"n": 3, "vertices": [[0.1, 0, 0], [1, 0.2, 0], [0, 1, 0.3], [0.2, 0.1, 1]]}"#);
    let contacts = write(
        &dir,
        "c.json",
        r#"{"barycentric": [[0, 0.2, 0.3, 0.5], [0.1, 0, 0.6, 0.3], [0.3, 0.3, 0, 0.4], [0.25, 0.25, 0.5, 0]]}"#,
    );
    let args = ["check", "--input", s(&input), "--contacts", s(&contacts), "--oracle", "--json", "--seed", "5"];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert!(!first.stdout.is_empty());
}

#[test]
fn legacy_command_name_still_works() {
    assert!(run(&["paper-example"]).status.success());
}
