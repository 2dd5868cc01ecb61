use std::path::PathBuf;
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qoe-cache"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn solve_writes_one_row() {
    let cfg = config("tiny.toml");
    let out = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--scheme",
        "ec-ve",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("axis,value,scheme,status,mean_mos"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("point,3000.0,ec-ve,feasible,"), "{row}");
    assert!(lines.next().is_none());
}

#[test]
fn infeasible_exits_with_two() {
    let cfg = config("reference_21540.toml");
    let out = run(&["solve", cfg.to_str().unwrap(), "--scheme", "ve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains(",ve,infeasible,"));
}

#[test]
fn errors_exit_with_one() {
    assert_eq!(
        run(&["solve", "/nonexistent.toml", "--scheme", "ve"])
            .status
            .code(),
        Some(1)
    );
    let cfg = config("tiny.toml");
    assert_eq!(
        run(&["solve", cfg.to_str().unwrap(), "--scheme", "nope"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn parse_error_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config("tiny.toml"))
        .unwrap()
        .replace("theta = 0.8", "theta = \"high\"");
    std::fs::write(&path, text).unwrap();
    let out = run(&["solve", path.to_str().unwrap(), "--scheme", "ve"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cap.csv");
    let cfg = config("reference_26880.toml");
    let out = run(&[
        "min-capacity",
        cfg.to_str().unwrap(),
        "--scheme",
        "ve",
        "--resolution",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "ve,100.0,1.0,feasible,26880.0"
    );
}

#[test]
fn oracle_check_lists_every_method() {
    let cfg = config("tiny.toml");
    let out = run(&["oracle-check", cfg.to_str().unwrap(), "--grid", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for method in [
        "oracle-equal-split",
        "oracle-optimal-split",
        "ec-ve",
        "ec-ve-snapped",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{method},"))),
            "{method} missing"
        );
    }
}

#[test]
fn step_flag_reaches_greedy() {
    let cfg = config("tiny.toml");
    let out = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--scheme",
        "greedy-ec-ve",
        "--step",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().nth(1).unwrap().ends_with(",0.05"));
}

#[test]
fn sweep_is_byte_identical_under_seed() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sweep.toml");
    let scenario = std::fs::read_to_string(config("tiny.toml")).unwrap();
    let body = scenario
        .replace("[[classes]]", "[[scenario.classes]]")
        .replacen("F = 2", "[scenario]\nF = 2", 1);
    std::fs::write(
        &spec,
        format!("axis = \"capacity\"\nvalues = [1000.0, 2000.0, 4000.0]\nschemes = [\"ec-ve\", \"ecst\"]\n\n{body}"),
    )
    .unwrap();
    let a = run(&["sweep", spec.to_str().unwrap(), "--seed", "11"]);
    let b = run(&["sweep", spec.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 7);
}
