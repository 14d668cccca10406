use std::path::Path;
use std::process::{Command, Output};

fn b3seg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_b3seg"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn small_run(out: &Path, extra: &[&str]) -> Output {
    let out = out.to_str().unwrap();
    let mut args = vec![
        "run",
        "--generate",
        "seed=3,objects=1,per_object=30,background=80,extent=4",
        "--target",
        "1",
        "--iters",
        "2",
        "--candidates",
        "4",
        "--res",
        "32x32",
        "--out",
        out,
    ];
    args.extend_from_slice(extra);
    b3seg(&args)
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_run(
        dir.path(),
        &["--strategy", "random_sphere", "--noise-flip", "0.05"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for f in ["run.csv", "scatter.csv", "labels.csv", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let run_csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert_eq!(run_csv.lines().count(), 3);
}

#[test]
fn bad_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        small_run(dir.path(), &["--strategy", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(
        small_run(dir.path(), &["--res", "32by32"]).status.code(),
        Some(2)
    );
    assert_eq!(
        small_run(dir.path(), &["--iters", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        small_run(dir.path(), &["--noise-flip", "2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        b3seg(&["run", "--target", "1", "--out", "x"]).status.code(),
        Some(2)
    );
}

#[test]
fn missing_scene_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.b3sp");
    let o = b3seg(&[
        "run",
        "--scene",
        missing.to_str().unwrap(),
        "--target",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn external_backend_failure_exits_3_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_run(dir.path(), &["--backend", "external:segment-anything"]);
    assert_eq!(o.status.code(), Some(3));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 0);
}

#[test]
fn generate_then_run_from_file() {
    let dir = tempfile::tempdir().unwrap();
    for (format, name) in [("binary", "scene.b3sp"), ("json", "scene.json")] {
        let path = dir.path().join(name);
        let o = b3seg(&[
            "generate",
            "--spec",
            "seed=5,objects=2,per_object=20,background=40,extent=3",
            "--format",
            format,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let out = dir.path().join(format!("out_{format}"));
        let o = b3seg(&[
            "run",
            "--scene",
            path.to_str().unwrap(),
            "--target",
            "2",
            "--iters",
            "1",
            "--candidates",
            "3",
            "--res",
            "24x24",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let bad = b3seg(&[
        "generate",
        "--spec",
        "objects=0",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(2));
}
