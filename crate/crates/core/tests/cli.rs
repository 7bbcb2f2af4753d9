use std::path::Path;
use std::process::{Command, Output};

fn qsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsynth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn help_exits_zero() {
    let o = qsynth(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("synth"));
}

#[test]
fn bad_epsilon_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        dir.path(),
        "c.json",
        r#"{"n": 2, "epsilon": 0.7, "algorithm": "postselect"}"#,
    );
    let o = qsynth(&[
        "synth",
        "--config",
        &c,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(0, 1/2)"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(qsynth(&["synth", "--bogus"]).status.code(), Some(2));
}

#[test]
fn synth_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        dir.path(),
        "c.json",
        r#"{"n": 2, "epsilon": 0.1, "algorithm": "one-query", "seed": 5, "output": {"report": "run"}}"#,
    );
    let out = dir.path().join("reports");
    let o = qsynth(&["synth", "--config", &c, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(out.join("run.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("algorithm,strategy,mode,n,epsilon,t,T,s,query_count"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "one-query");
    assert_eq!(row[8], "1");
    assert!(row[11].parse::<f64>().unwrap() <= 0.1);

    let o = qsynth(&[
        "synth",
        "--config",
        &c,
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(v[0]["algorithm"], "one-query");
}

#[test]
fn sweep_writes_one_row_per_config() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        dir.path(),
        "s.json",
        r#"{"base": {"n": 1, "epsilon": 0.2, "algorithm": "postselect"}, "grid": {"n": [1, 2], "seed": [1, 2, 3]}}"#,
    );
    let o = qsynth(&[
        "sweep",
        "--config",
        &c,
        "--out",
        dir.path().to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn oracle_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        dir.path(),
        "c.json",
        r#"{"n": 2, "epsilon": 0.2, "algorithm": "postselect", "seed": 8}"#,
    );
    let o = qsynth(&[
        "oracle",
        "export",
        "--config",
        &c,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let spec = qsynth::synthesis::OracleSpec::read_file(&dir.path().join("oracle.osyn")).unwrap();
    assert_eq!(spec.n(), 2);
    assert_eq!(spec.big_t(), 1 << spec.t());
}

#[test]
fn geometry_subcommands_print_json() {
    let o = qsynth(&[
        "geometry",
        "deficit",
        "--n",
        "10",
        "--epsilon",
        "0.25",
        "--s",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["deficit"].as_f64().unwrap() - 581.141_857_220_88).abs() < 1e-8);
    let o = qsynth(&[
        "geometry",
        "deficit",
        "--n",
        "10",
        "--epsilon",
        "0.3",
        "--s",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = qsynth(&[
        "geometry",
        "cap",
        "--n",
        "1",
        "--epsilon",
        "0.5",
        "--trials",
        "20000",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["cap_fraction"], 0.25);
}

#[test]
fn verify_subset_passes() {
    let o = qsynth(&["verify", "--instances", "5", "--only", "f2linalg"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3);
}
