use starfish_cli::{run, EXIT_OK, EXIT_VALIDATION};
use starfish_core::unlearn::HistoryStore;
use std::path::Path;
use std::process::Command;

fn conf(dir: &Path, body: &str) -> String {
    let p = dir.join("run.conf");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = "seed = 3\nn = 4\nm = 6\nt = 10\neta_l = auto\neta_u = auto\n";

#[test]
fn train_then_unlearn_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let c = conf(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    assert_eq!(run(["starfish", "train", "--config", &c, "--out", o]), EXIT_OK);
    let h0 = HistoryStore::read(&out.join("history.p0.sfh")).unwrap();
    let h1 = HistoryStore::read(&out.join("history.p1.sfh")).unwrap();
    let plain = HistoryStore::reconstruct(&h0, &h1).unwrap();
    assert_eq!(plain.models.len(), 11);

    assert_eq!(run(["starfish", "unlearn", "--config", &c, "--out", o, "--target", "2"]), EXIT_OK);
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["model"].as_array().unwrap().len(), 6);
    assert_eq!(model["selected"].as_array().unwrap().len(), 6);
    let transcript = std::fs::read_to_string(out.join("transcript.jsonl")).unwrap();
    let ops: Vec<String> = transcript
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["op"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ops[0], "threshold");
    assert_eq!(ops[1], "sec_rs");
    assert_eq!(ops.iter().filter(|o| *o == "aggregate").count(), 6);
}

#[test]
fn compare_reports_bound_and_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = conf(dir.path(), SMALL);
    let out = dir.path().join("cmp");
    assert_eq!(run(["starfish", "compare", "--config", &c, "--out", out.to_str().unwrap()]), EXIT_OK);
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(r["oracle_max_error"].as_f64().unwrap() <= r["error_budget"].as_f64().unwrap());
    assert_eq!(r["selected"], r["oracle_selected"]);
    assert_eq!(r["bound"]["violations"], 0);
}

#[test]
fn validation_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let o = o.to_str().unwrap();
    let bad_key = conf(dir.path(), "sead = 1\n");
    assert_eq!(run(["starfish", "train", "--config", &bad_key, "--out", o]), EXIT_VALIDATION);
    let c = conf(dir.path(), SMALL);
    // no history yet
    assert_eq!(run(["starfish", "unlearn", "--config", &c, "--out", o]), EXIT_VALIDATION);
    assert_eq!(run(["starfish", "unlearn", "--config", &c, "--out", o, "--target", "9"]), EXIT_VALIDATION);
    assert_eq!(run(["starfish", "compare", "--config", &c, "--out", o, "--transport", "tcp"]), EXIT_VALIDATION);
    assert_eq!(run(["starfish", "frobnicate"]), EXIT_VALIDATION);
    assert_eq!(run(["starfish", "train", "--party", "2"]), EXIT_VALIDATION);
}

#[test]
fn binary_audit_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let st = Command::new(env!("CARGO_BIN_EXE_starfish"))
        .args(["audit", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&st.stdout).contains("all 28 rows match"));
}
