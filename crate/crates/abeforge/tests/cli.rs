use std::path::Path;
use std::process::{Command, Output};

use abeforge::format::{corpus_file, parse_corpus};
use abeforge_core::corpus::load_corpus;
use serde_json::Value;

fn abeforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abeforge")).args(args).env_remove("ABEFORGE_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn replay_builtin() {
    let o = abeforge(&["replay"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).ends_with("13/13 verified\n"));
    let o = abeforge(&["replay", "--emit", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verified"], 13);
    assert_eq!(v["scripts"].as_array().unwrap().len(), 13);
    assert_eq!(v["scripts"][12]["id"], "thm");
    assert_eq!(v["scripts"][12]["target"], "trans");
    assert_eq!(v["scripts"][12]["fingerprint"].as_str().unwrap().len(), 16);
}

#[test]
fn replay_show_prints_branches() {
    let o = abeforge(&["replay", "--show", "thm"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for needle in ["script thm proves trans", "hyp 2: a -> c != 1", "split on lem18", "branch 0:", "branch 1:", "status: verified"] {
        assert!(text.contains(needle), "missing {needle:?} in\n{text}");
    }
    let o = abeforge(&["replay", "--show", "trans", "--emit", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["script"]["steps"][0]["rule"], "split");
    assert_eq!(code(&abeforge(&["replay", "--show", "nosuch"])), 3);
}

#[test]
fn replay_broken_script_reports_the_step() {
    let dir = tempfile::tempdir().unwrap();
    let mut file = corpus_file(&load_corpus());
    file.statements.clear();
    file.axiom_systems.clear();
    file.properties.clear();
    file.scripts.retain(|s| s.id == "lem10");
    let step = &mut file.scripts[0].steps[1];
    step.dir = Some(if step.dir.as_deref() == Some("l2r") { "r2l" } else { "l2r" }.into());
    let path = write(dir.path(), "broken.json", &serde_json::to_string(&file).unwrap());
    let o = abeforge(&["replay", "--script", &path]);
    assert_eq!(code(&o), 2);
    let text = stdout(&o);
    assert!(text.contains("failed    lem10"), "{text}");
    assert!(text.contains("script `lem10`, step 2:"), "{text}");
    assert!(text.contains("skipped"), "{text}");
    assert!(text.ends_with("3/13 verified\n"), "{text}");
}

#[test]
fn replay_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(
        dir.path(),
        "unknown.json",
        r#"{"scripts": [{"id": "extra", "target": "ax1", "depends_on": ["lem99"], "steps": []}]}"#,
    );
    let o = abeforge(&["replay", "--script", &unknown]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("lem99"), "{}", stderr(&o));
    let garbage = write(dir.path(), "garbage.json", "{\"scripts\": [");
    assert_eq!(code(&abeforge(&["replay", "--script", &garbage])), 3);
    assert_eq!(code(&abeforge(&["replay", "--script", "/nonexistent/file.json"])), 3);
}

#[test]
fn full_corpus_file_replays() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("corpus.json");
    let o = abeforge(&["corpus", "export", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(parse_corpus(&text).unwrap(), load_corpus());
    assert_eq!(stdout(&abeforge(&["corpus", "export"])), text);
    let o = abeforge(&["replay", "--script", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).ends_with("13/13 verified\n"));
}

#[test]
fn corpus_show() {
    let o = abeforge(&["corpus", "show", "ax5"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("ax5 (axiom): x -> y = 1 & y -> x = 1 => x = y\n"), "{}", stdout(&o));
    let o = abeforge(&["corpus", "show", "lem16"]);
    assert!(stdout(&o).contains("script lem16 proves lem16"));
    let o = abeforge(&["corpus", "show", "commutativity", "--emit", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["statement"]["kind"], "identity");
    assert!(v.get("script").is_none());
    assert_eq!(code(&abeforge(&["corpus", "show", "nosuch"])), 3);
}

#[test]
fn enumerate_reports() {
    let o = abeforge(&["enumerate", "--axioms", "implicative-aBE", "--max-size", "4", "--emit", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let counts: Vec<u64> = v["sizes"].as_array().unwrap().iter().map(|s| s["count"].as_u64().unwrap()).collect();
    assert_eq!(counts, vec![1, 1, 1, 2]);
    assert_eq!(v["properties"][0]["id"], "trans");
    assert_eq!(v["properties"][0]["status"], "holds");

    let o = abeforge(&["enumerate", "--axioms", "aBE", "--max-size", "3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("  3         3           9  complete\n"), "{text}");
    assert!(text.contains("commutativity: counterexample of size 3, witness x=a, y=b"), "{text}");
    assert!(text.contains("trans: holds in every model up to size 3"), "{text}");
}

#[test]
fn enumerate_budget_is_not_an_error() {
    let o = abeforge(&["enumerate", "--axioms", "aBE", "--max-size", "5", "--budget-nodes", "100", "--emit", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let last = v["sizes"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["n"], 4);
    assert_eq!(last["status"], "budget exceeded");
    assert!(last["count"].is_null());
}

#[test]
fn bad_arguments_exit_3() {
    for args in [
        &["enumerate", "--axioms", "nosuch", "--max-size", "2"][..],
        &["enumerate", "--axioms", "aBE", "--max-size", "8"],
        &["enumerate", "--axioms", "aBE", "--max-size", "0"],
        &["enumerate", "--axioms", "aBE"],
        &["enumerate", "--axioms", "aBE", "--max-size", "2", "--property", "nosuch"],
        &["search", "--axioms", "aBE", "--violates", "nosuch", "--max-size", "2"],
        &["replay", "--emit", "xml"],
        &["frobnicate"],
        &[],
    ] {
        let o = abeforge(args);
        assert_eq!(code(&o), 3, "{args:?}: {}", stderr(&o));
    }
    let o = abeforge(&["enumerate", "--axioms", "nosuch", "--max-size", "2"]);
    assert!(stderr(&o).contains("Usage: abeforge enumerate"), "{}", stderr(&o));
    assert_eq!(code(&abeforge(&["--help"])), 0);
}

#[test]
fn check_models() {
    let dir = tempfile::tempdir().unwrap();
    let two = write(dir.path(), "two.json", r#"{"size": 2, "unit": 1, "table": [[1, 1], [0, 1]]}"#);
    let o = abeforge(&["check", "--model", &two, "--axioms", "implicative-aBE", "--property", "trans"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "model: yes; trans: holds\n");

    let bad = write(dir.path(), "bad.json", r#"{"size": 2, "unit": 1, "table": [[0, 1], [0, 1]]}"#);
    let o = abeforge(&["check", "--model", &bad, "--axioms", "implicative-aBE"]);
    assert_eq!(code(&o), 4);
    assert!(stdout(&o).contains("ax3 violated, witness x=a"), "{}", stdout(&o));

    let cex = write(
        dir.path(),
        "cex.json",
        r#"{"size": 4, "unit": 3, "table": [[3, 0, 3, 3], [3, 3, 2, 3], [0, 1, 3, 3], [0, 1, 2, 3]]}"#,
    );
    let o = abeforge(&["check", "--model", &cex, "--axioms", "aBE", "--property", "trans", "--emit", "json"]);
    assert_eq!(code(&o), 4);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["model"], true);
    assert_eq!(v["property"]["status"], "violated");
    assert_eq!(v["property"]["witness"]["text"], "x=b, y=a, z=c");

    let truncated = write(dir.path(), "truncated.json", r#"{"size": 2, "unit": 1, "table": [[1, 1"#);
    assert_eq!(code(&abeforge(&["check", "--model", &truncated, "--axioms", "aBE"])), 3);
    let ragged = write(dir.path(), "ragged.json", r#"{"size": 2, "unit": 1, "table": [[1, 1], [0]]}"#);
    assert_eq!(code(&abeforge(&["check", "--model", &ragged, "--axioms", "aBE"])), 3);
    assert_eq!(code(&abeforge(&["check", "--model", "/nonexistent.json", "--axioms", "aBE"])), 3);
}

#[test]
fn search_outcomes() {
    let o = abeforge(&["search", "--axioms", "implicative-aBE", "--violates", "trans", "--max-size", "6"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).ends_with("none up to 6\n"), "{}", stdout(&o));

    let o = abeforge(&["search", "--axioms", "implicative-aBE", "--violates", "commutativity", "--max-size", "5"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).ends_with("none up to 5\n"));

    let o = abeforge(&["search", "--axioms", "implicative-aBE", "--violates", "ax3", "--max-size", "5"]);
    assert_eq!(code(&o), 0);

    let o = abeforge(&["search", "--axioms", "aBE", "--violates", "trans", "--max-size", "5", "--emit", "json"]);
    assert_eq!(code(&o), 4);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["reverified"], true);
    assert_eq!(v["properties"][0]["model"]["table"], serde_json::json!([[3, 0, 3, 3], [3, 3, 2, 3], [0, 1, 3, 3], [0, 1, 2, 3]]));
    assert_eq!(v["sizes"].as_array().unwrap().len(), 4);

    let o = abeforge(&["search", "--axioms", "aBE", "--violates", "trans", "--max-size", "5"]);
    assert!(stdout(&o).contains("witness x=b, y=a, z=c\nre-verified: yes\n"), "{}", stdout(&o));

    let o = abeforge(&["search", "--axioms", "implicative-aBE", "--violates", "trans", "--max-size", "6", "--budget-nodes", "100"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).ends_with("none up to 4; size 5: budget exceeded\n"), "{}", stdout(&o));
}

#[test]
fn oracle_counts() {
    let o = abeforge(&["oracle", "--axioms", "implicative-aBE", "--size", "2"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "labeled 1, classes 1\n"));
    let o = abeforge(&["oracle", "--axioms", "implicative-aBE", "--size", "3"]);
    assert_eq!(stdout(&o), "labeled 1, classes 1\n");
    let o = abeforge(&["oracle", "--axioms", "aBE", "--size", "3", "--emit", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((v["labeled"].as_u64(), v["classes"].as_u64()), (Some(5), Some(3)));
    let o = abeforge(&["oracle", "--axioms", "aBE", "--size", "4"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("limited to size 3"));
}

#[test]
fn thread_settings_do_not_change_output() {
    let args = ["enumerate", "--axioms", "aBE", "--max-size", "4", "--emit", "json"];
    let base = stdout(&abeforge(&args));
    for threads in ["1", "3"] {
        let mut a = args.to_vec();
        a.extend(["--threads", threads]);
        assert_eq!(stdout(&abeforge(&a)), base);
    }
    let capped = Command::new(env!("CARGO_BIN_EXE_abeforge")).args(args).env("ABEFORGE_THREADS", "2").output().unwrap();
    assert_eq!(String::from_utf8(capped.stdout).unwrap(), base);
}
