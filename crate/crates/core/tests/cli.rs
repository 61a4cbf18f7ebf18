use std::path::Path;
use std::process::{Command, Output};

fn dcs(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcs")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn build_and_sample(dir: &Path, model: &str, d: &str, p: &str, shots: &str) {
    let o = dcs(dir, &["build-graph", "--model", model, "--dx", d, "--p", p, "--out", "g.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = dcs(dir, &["--seed", "3", "sample", "--graph", "g.json", "--shots", shots, "--out", "s.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn help_lists_exit_codes() {
    let o = dcs(Path::new("."), &["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("3 capability"), "{text}");
}

#[test]
fn missing_command_is_a_config_error() {
    let o = dcs(Path::new("."), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).starts_with("dcs: "));
}

#[test]
fn invalid_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcs(dir.path(), &["build-graph", "--model", "code-capacity", "--dx", "4", "--p", "0.1", "--out", "g.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("odd"));
    assert!(!dir.path().join("g.json").exists());
    let o = dcs(dir.path(), &["build-graph", "--model", "code-capacity", "--dx", "3", "--p", "0.7", "--out", "g.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn sampling_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcs(dir.path(), &["build-graph", "--model", "code-capacity", "--dx", "3", "--p", "0.1", "--out", "g.json"]);
    assert_eq!(code(&o), 0);
    let o = dcs(dir.path(), &["sample", "--graph", "g.json", "--shots", "5", "--out", "s.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn exact_odds_beyond_enumeration_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    build_and_sample(dir.path(), "phenomenological", "5", "0.01", "5");
    let o = dcs(dir.path(), &["score", "--graph", "g.json", "--syndromes", "s.csv", "--exact-odds", "on", "--out", "sc.csv"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("capability"));
    assert!(!dir.path().join("sc.csv").exists());
}

#[test]
fn schema_errors_name_the_column() {
    let dir = tempfile::tempdir().unwrap();
    build_and_sample(dir.path(), "code-capacity", "3", "0.1", "5");
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    std::fs::write(dir.path().join("bad.csv"), text.replace("syndrome", "syndromes")).unwrap();
    let o = dcs(dir.path(), &["decode", "--graph", "g.json", "--syndromes", "bad.csv", "--out", "d.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("`syndrome`"), "{}", stderr(&o));

    let wrong_kind = text.replace("kind=samples", "kind=pool");
    std::fs::write(dir.path().join("kind.csv"), wrong_kind).unwrap();
    let o = dcs(dir.path(), &["decode", "--graph", "g.json", "--syndromes", "kind.csv", "--out", "d.csv"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn infeasible_calibration_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let rows = [
        "# dcs format=1 kind=scores config=0000000000000000 seed=none",
        "# config {}",
        "shot_id,correction_weight,gap,swim,lambda,p_l,success",
        "0,0.0,1.0,1.0,,,1",
        "1,0.5,2.0,2.0,,,1",
        "2,0.5,3.0,3.0,,,1",
    ];
    std::fs::write(dir.path().join("sc.csv"), rows.join("\n") + "\n").unwrap();
    let o = dcs(dir.path(), &["calibrate", "--scores", "sc.csv", "--bins", "3", "--out", "c.json"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("calibration infeasible"));
}

#[test]
fn config_and_subcommand_are_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.toml"), "version = 1\nseed = 1\n").unwrap();
    let o = dcs(dir.path(), &["--config", "p.toml", "plan", "--mu-model", "m.csv", "--n-windows", "10", "--out", "x.json"]);
    assert_eq!(code(&o), 2);
    let o = dcs(dir.path(), &["--config", "p.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    std::fs::write(dir.path().join("q.toml"), "version = 1\nseed = 1\ncolour = 3\n").unwrap();
    let o = dcs(dir.path(), &["--config", "q.toml"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn stage_failures_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
version = 1
seed = 5

[[stages]]
stage = "build-graph"
model = "code-capacity"
dx = 3
p = 0.1
out = "g.json"

[[stages]]
stage = "sample"
graph = "missing.json"
shots = 4
out = "s.csv"
"#;
    std::fs::write(dir.path().join("p.toml"), cfg).unwrap();
    let o = dcs(dir.path(), &["--config", "p.toml", "--out-dir", "out"]);
    assert_ne!(code(&o), 0);
    assert!(stderr(&o).contains("stage `sample` failed"), "{}", stderr(&o));
    assert!(dir.path().join("out/g.json").exists());
}
