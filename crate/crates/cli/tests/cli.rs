use std::path::PathBuf;
use std::process::{Command, Output};

fn omlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omlab")).args(args).env_remove("OMLAB_BUDGET").output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn check_exit_codes() {
    let o1 = omlab(&["check", "--bundled", "O1-2node"]);
    assert_eq!(o1.status.code(), Some(2));
    let v = json(&o1);
    assert_eq!(v["verdict"]["answer"], "Unsolvable");
    assert!(v["verdict"]["witness"]["source_incompatible"]["events"].is_array());
    assert_eq!(v["beta"]["classes"].as_array().unwrap().len(), 1);

    let h = omlab(&["check", "--bundled", "H-2node"]);
    assert_eq!(h.status.code(), Some(3));
    assert_eq!(json(&h)["beta"]["classes"].as_array().unwrap().len(), 2);

    assert_eq!(omlab(&["check", "--bundled", "reliable-2node"]).status.code(), Some(0));
    let b = omlab(&["check", "--bundled", "H-2node", "--problem", "broadcast"]);
    assert_eq!(b.status.code(), Some(2));
}

#[test]
fn check_text_names_rule_and_witness() {
    let out = omlab(&["check", "--bundled", "fig12", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("rule:"));
    assert!(text.contains("a=3 b=3 c=2 d=2"), "{text}");
}

#[test]
fn check_emits_dot() {
    let path = scratch("o1-witness.dot");
    let out = omlab(&["check", "--bundled", "O1-2node", "--emit-dot", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let dot = std::fs::read_to_string(&path).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("OMIT_W") && dot.contains("OMIT_B"));
    assert!(dot.contains("graph beta"));
}

#[test]
fn gen_hypercube_count_and_round_trip() {
    let path = scratch("q3-f2.json");
    let out =
        omlab(&["gen", "--hypercube", "3", "--bounded", "2", "--metric", "global", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["events"].as_array().unwrap().len(), 301);

    let again = scratch("q3-f2-again.json");
    let out = omlab(&["gen", "--family", path.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&again).unwrap(), text);

    let check = omlab(&["check", "--family", path.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0));
}

#[test]
fn simulate_reports() {
    let out = omlab(&["simulate", "--bundled", "H-2node", "--protocol", "h-one-round", "--all-scenarios", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["violation_count"], 0);
    assert_eq!(v["scenarios"], 2);

    let fail = omlab(&["simulate", "--bundled", "O1-2node", "--protocol", "h-one-round", "--all-scenarios", "1"]);
    assert_eq!(fail.status.code(), Some(1));

    let trace = omlab(&[
        "simulate",
        "--bundled",
        "fig12",
        "--protocol",
        "broadcast-consensus",
        "--origin",
        "c",
        "--rounds",
        "2",
        "--scenario",
        "H1,H2",
        "--init",
        "a=1,b=0,c=1,d=0",
    ]);
    assert_eq!(trace.status.code(), Some(0));
    let v = json(&trace);
    assert_eq!(v["scenario_names"], serde_json::json!(["H1", "H2"]));
    let decisions = v["decisions"].as_array().unwrap();
    assert!(decisions.iter().all(|d| d["value"] == true));
    assert_eq!(v["violations"], serde_json::json!([]));
}

#[test]
fn simulate_seeded_is_reproducible() {
    let args = [
        "simulate",
        "--bundled",
        "O1-2node",
        "--protocol",
        "flooding",
        "--origin",
        "white",
        "--seed",
        "7",
        "--length",
        "5",
    ];
    let a = omlab(&args);
    let b = omlab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["scenario"].as_array().unwrap().len(), 5);
}

#[test]
fn oracle_and_audit() {
    let out = omlab(&["oracle", "--bundled", "fig12", "--max-horizon", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["outcome"]["rounds"], 1);
    assert_eq!(v["protocol_check_passed"], true);

    let o1 = omlab(&["oracle", "--bundled", "O1-2node", "--max-horizon", "3"]);
    assert_eq!(o1.status.code(), Some(2));
    let v = json(&o1);
    assert_eq!(v["outcome"]["unsolvable_up_to"], 3);
    assert_eq!(v["chain_verified"], true);

    let audit = omlab(&["audit", "--complete", "3", "--bounded", "1"]);
    assert_eq!(audit.status.code(), Some(0));
    assert_eq!(json(&audit)["agree"], true);
    let nonconvex = omlab(&["audit", "--bundled", "H-2node"]);
    assert_eq!(nonconvex.status.code(), Some(64));
}

#[test]
fn parse_and_budget_errors() {
    assert_eq!(omlab(&["check", "--family", "/definitely/missing.json"]).status.code(), Some(64));
    assert_eq!(omlab(&["check", "--no-such-flag"]).status.code(), Some(64));
    assert_eq!(omlab(&["check"]).status.code(), Some(64));
    assert_eq!(omlab(&["check", "--bundled", "O1-2node", "--hypercube", "3"]).status.code(), Some(64));
    assert_eq!(
        omlab(&[
            "simulate",
            "--bundled",
            "H-2node",
            "--protocol",
            "flooding",
            "--origin",
            "white",
            "--scenario",
            "NOPE"
        ])
        .status
        .code(),
        Some(64)
    );

    let bad = scratch("bad.json");
    std::fs::write(&bad, "{\"graph\": {\"nodes\": [\"a\"], \"arcs\": []}, \"events\": [").unwrap();
    assert_eq!(omlab(&["check", "--family", bad.to_str().unwrap()]).status.code(), Some(64));

    let over = Command::new(env!("CARGO_BIN_EXE_omlab"))
        .args(["gen", "--hypercube", "3", "--bounded", "2"])
        .env("OMLAB_BUDGET", "100")
        .output()
        .unwrap();
    assert_eq!(over.status.code(), Some(65));
    let oracle = omlab(&["oracle", "--bundled", "O1-2node", "--max-horizon", "3", "--budget", "50"]);
    assert_eq!(oracle.status.code(), Some(65));
}

#[test]
fn exit_codes_are_stable() {
    for _ in 0..3 {
        assert_eq!(omlab(&["check", "--bundled", "H-2node"]).status.code(), Some(3));
    }
}
