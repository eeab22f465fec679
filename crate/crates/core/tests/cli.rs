//! The `cflab` binary end to end.

use std::process::{Command, Output};

fn cflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cflab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn measure_n1_is_exact() {
    let o = cflab(&["measure", "--n", "1", "--method", "oracle"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0.152003093445050"));
}

#[test]
fn zero_cutoff_is_rejected() {
    let o = cflab(&["measure", "--n", "1", "--cutoff", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn resource_guard_is_reported() {
    let o = cflab(&["measure", "--n", "5", "--cutoff", "100000", "--method", "oracle"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(n-1)*log2(D)"));
}

#[test]
fn measure_both_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    let o = cflab(&["measure", "--n", "2", "--cutoff", "2000", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let rows: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    let oracle = &rows[0];
    let op = rows[1]["value"].as_f64().unwrap();
    assert!(oracle["lower"].as_f64().unwrap() <= op && op <= oracle["upper"].as_f64().unwrap());
    assert_eq!(oracle["vs_e1"], "greater");
    assert!(dir.path().join("m.json.manifest.json").exists());
}

#[test]
fn sample_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.cfd");
    let g = dir.path().join("t.cfd");
    for p in [&f, &g] {
        assert!(cflab(&["sample", "--seed", "7", "--count", "1000", "--out", p.to_str().unwrap()]).status.success());
    }
    assert_eq!(std::fs::read(&f).unwrap(), std::fs::read(&g).unwrap());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.cfd.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["count"], 1000);

    let csv = dir.path().join("stats.csv");
    let o = cflab(&["stats", "--input", f.to_str().unwrap(), "--max-len", "1", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 6);
}

#[test]
fn empty_sample_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("e.cfd");
    assert!(cflab(&["sample", "--seed", "1", "--count", "0", "--out", f.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read(&f).unwrap().len(), 12);
}

#[test]
fn theorem_control_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("run");
    let o = cflab(&["theorem", "--m", "1", "--k", "1", "--digits", "300000", "--out", prefix.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for suffix in [".json", ".csv", ".manifest.json", ".experiment.json"] {
        assert!(dir.path().join(format!("run{suffix}")).exists(), "{suffix}");
    }
}

#[test]
fn offset_does_not_change_targets() {
    let a = stdout(&cflab(&["theorem", "--m", "2", "--k", "1", "--digits", "400000"]));
    let b = stdout(&cflab(&["theorem", "--m", "2", "--k", "3", "--digits", "400000"]));
    let target = |s: &str| s.lines().find(|l| l.starts_with("[1,1]")).unwrap().split("target").nth(1).unwrap().to_string();
    assert_eq!(target(&a), target(&b));
}

#[test]
fn skew_and_wirsing_run() {
    let o = cflab(&["skew", "--m", "2", "--family", "identity", "--count", "10000"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("transitive = false"));
    let o = cflab(&["wirsing", "--n-max", "3", "--grid", "256", "--truncation", "2000"]);
    assert!(o.status.success(), "{}", stdout(&o));
}
