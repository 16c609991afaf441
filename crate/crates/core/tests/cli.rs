use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tissue-uq"))
}

#[test]
fn grid_nodes_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["grid", "nodes", "--dim", "4", "--level", "3", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(dir.path().join("grid_d4_l3.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "y1,y2,y3,y4,weight");
    assert_eq!(lines.count(), 137);
}

#[test]
fn dispersion_eval_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["dispersion", "eval", "--points", "5", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(dir.path().join("dispersion.csv")).unwrap();
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"grid": {"level": "three"}}"#).unwrap();
    let st = bin()
        .args(["grid", "nodes", "--dim", "2", "--level", "1", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bin().args(["grid", "nodes", "--dim", "2"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rank.json");
    // Five grid points cannot carry ten KL modes.
    std::fs::write(&cfg, r#"{"kl": {"log_step": 1.0, "rank": 10, "samples": 20}}"#).unwrap();
    let st = bin()
        .args(["kl", "build", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(3));
}

#[test]
fn kl_build_then_sample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    std::fs::write(&cfg, r#"{"kl": {"log_step": 0.05, "samples": 100}}"#).unwrap();
    let run = |args: &[&str]| {
        bin()
            .args(args)
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path())
            .status()
            .unwrap()
    };
    assert!(run(&["kl", "build"]).success());
    let model = dir.path().join("kl_model.json");
    assert!(run(&["kl", "sample", "--count", "3", "--model", model.to_str().unwrap()]).success());
    let text = std::fs::read_to_string(dir.path().join("kl_samples.csv")).unwrap();
    assert!(text.starts_with("omega,mean,s1,s2,s3"));
}
