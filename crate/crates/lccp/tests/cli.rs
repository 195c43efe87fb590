//! End-to-end tests of the command-line binary.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lccp"))
}

fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn solve_single_node() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_tmp(&dir, "one.txt", "1\n5\n0\n");
    let out = bin().arg("solve").arg(&inst).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["objective"], 1);
    assert_eq!(doc["cycles"][0][0], 0);
    assert_eq!(doc["report"]["status"], "optimal");
}

#[test]
fn timeout_returns_incumbent_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let gen = bin()
        .args(["generate", "--n", "9", "--seed", "3", "--crit-low", "150", "--crit-high", "400"])
        .output()
        .unwrap();
    assert_eq!(gen.status.code(), Some(0));
    let inst = write_tmp(&dir, "nine.json", &String::from_utf8(gen.stdout).unwrap());
    let out = bin()
        .args(["solve", "--format", "json", "--time-limit", "0.0"])
        .arg(&inst)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["report"]["status"], "timeout");
    assert!(doc["objective"].as_u64().unwrap() <= 9);
}

#[test]
fn cover_mode_rejects_non_metric() {
    let dir = tempfile::tempdir().unwrap();
    // triangle violation: 0-2 direct is 10, via 1 it is 2
    let inst = write_tmp(&dir, "nm.txt", "3\n100 100 100\n0 1 10\n1 0 1\n10 1 0\n");
    let out = bin()
        .args(["solve", "--mode", "cover"])
        .arg(&inst)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("covering mode requires metric instance"));
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_tmp(&dir, "tri.txt", "3\n100 100 100\n0 1 2\n1 0 1\n2 1 0\n");
    let good = write_tmp(&dir, "good.json", r#"{"objective": 1, "cycles": [[0, 1, 2]]}"#);
    let out = bin().args(["validate"]).arg(&inst).arg(&good).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let missing = write_tmp(&dir, "bad.json", r#"{"objective": 1, "cycles": [[0, 1]]}"#);
    let out = bin().args(["validate"]).arg(&inst).arg(&missing).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2"));

    // cycle that is too long for its critical times
    let tight = write_tmp(&dir, "tight.txt", "3\n3 3 3\n0 1 2\n1 0 1\n2 1 0\n");
    let out = bin().args(["validate"]).arg(&tight).arg(&good).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("4") && err.contains("3"), "diagnostic should name t(C) and q(C): {err}");
}

#[test]
fn generate_then_solve_then_validate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = dir.path().join("gen.json");
    let g = bin()
        .args(["generate", "--n", "7", "--seed", "11", "--crit-low", "150", "--crit-high", "400"])
        .arg("--output")
        .arg(&inst_path)
        .output()
        .unwrap();
    assert_eq!(g.status.code(), Some(0));
    let sol_path = dir.path().join("sol.json");
    let s = bin()
        .args(["solve", "--format", "json"])
        .arg(&inst_path)
        .arg("--output")
        .arg(&sol_path)
        .output()
        .unwrap();
    assert_eq!(s.status.code(), Some(0), "{}", String::from_utf8_lossy(&s.stderr));
    let v = bin()
        .args(["validate", "--format", "json"])
        .arg(&inst_path)
        .arg(&sol_path)
        .output()
        .unwrap();
    assert_eq!(v.status.code(), Some(0), "{}", String::from_utf8_lossy(&v.stderr));
}

#[test]
fn oracle_subcommand_matches_solver() {
    let dir = tempfile::tempdir().unwrap();
    let gen = bin()
        .args(["generate", "--n", "6", "--seed", "21", "--crit-low", "120", "--crit-high", "320"])
        .output()
        .unwrap();
    let inst = write_tmp(&dir, "six.json", &String::from_utf8(gen.stdout).unwrap());
    let o = bin().args(["oracle", "--format", "json"]).arg(&inst).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let od: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let s = bin().args(["solve", "--format", "json"]).arg(&inst).output().unwrap();
    let sd: serde_json::Value = serde_json::from_slice(&s.stdout).unwrap();
    assert_eq!(od["objective"], sd["objective"]);
}

#[test]
fn bench_emits_rows_and_geomean() {
    let dir = tempfile::tempdir().unwrap();
    let inst_dir = dir.path().join("instances");
    fs::create_dir(&inst_dir).unwrap();
    for seed in [1u64, 2] {
        let g = bin()
            .args(["generate", "--n", "6", "--crit-low", "120", "--crit-high", "320", "--seed"])
            .arg(seed.to_string())
            .arg("--output")
            .arg(inst_dir.join(format!("i{seed}.json")))
            .output()
            .unwrap();
        assert_eq!(g.status.code(), Some(0));
    }
    let out = bin()
        .args(["bench", "--format", "json", "--variants", "full,basic", "--time-limit", "30"])
        .arg(&inst_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
    let summaries = doc["summaries"].as_array().unwrap();
    assert_eq!(summaries.len(), 2);
    for s in summaries {
        assert_eq!(s["solved"], 2);
        assert!(s["shifted_geomean_time_s"].as_f64().unwrap() >= 0.0);
    }
    // both variants must agree on the objective per instance
    let rows = doc["rows"].as_array().unwrap();
    for seed in ["i1.json", "i2.json"] {
        let objs: Vec<_> = rows
            .iter()
            .filter(|r| r["instance"] == seed)
            .map(|r| r["objective"].as_u64().unwrap())
            .collect();
        assert_eq!(objs[0], objs[1]);
    }
}

#[test]
fn same_command_line_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let gen = bin()
        .args(["generate", "--n", "8", "--seed", "5", "--crit-low", "150", "--crit-high", "400"])
        .output()
        .unwrap();
    let inst = write_tmp(&dir, "eight.json", &String::from_utf8(gen.stdout).unwrap());
    let run = || {
        let out = bin().args(["solve", "--format", "json"]).arg(&inst).output().unwrap();
        let mut doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        doc["report"].as_object_mut().unwrap().remove("wall_time_s");
        doc
    };
    assert_eq!(run(), run());
}
