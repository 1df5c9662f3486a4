//! End-to-end tests against the compiled binary: exit codes, stream shapes,
//! and the error contract (machine-readable JSON on stderr).

mod common;

use std::path::Path;
use std::process::Output;

use serde_json::Value;

use common::{bin, heart_path, load_heart};

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

/// Failures must put exactly one JSON object on stderr.
fn stderr_error(out: &Output) -> (String, String) {
    let text = String::from_utf8_lossy(&out.stderr);
    let value: Value = serde_json::from_str(text.trim())
        .unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"));
    let error = value["error"]
        .as_object()
        .unwrap_or_else(|| panic!("no error object in {text}"));
    assert_eq!(
        error.len(),
        2,
        "error object carries exactly kind and message"
    );
    (
        error["kind"].as_str().unwrap().to_string(),
        error["message"].as_str().unwrap().to_string(),
    )
}

fn heart() -> String {
    heart_path().display().to_string()
}

/// The heart table with some entries removed, written to `dir`.
fn partial_heart(dir: &Path, drop: &[&str]) -> String {
    let game = load_heart();
    let mut values = game.values().clone();
    for key in drop {
        let s = game.parse_key(key).unwrap();
        assert!(values.remove(&s).is_some(), "fixture has no '{key}'");
    }
    let partial = coalition_ledger::game::Game::new(game.names().to_vec(), values, None).unwrap();
    let path = dir.join("partial.json");
    partial.save(&path).unwrap();
    path.display().to_string()
}

#[test]
fn solve_full_table_prints_the_report() {
    let out = run(&["solve", "--game", &heart(), "--full"]);
    assert!(out.status.success(), "{out:?}");
    assert!(out.stderr.is_empty());
    let report = stdout_json(&out);
    assert_eq!(report["players"], serde_json::json!(["a", "b", "c"]));
    let lc = &report["methods"]["least_core"];
    assert_eq!(lc["phi"]["a"], 0.142867);
    assert_eq!(lc["phi"]["b"], 0.249967);
    assert_eq!(lc["phi"]["c"], 0.464267);
    assert_eq!(lc["e_star"], 0.357133);
    assert_eq!(
        report["methods"].as_object().unwrap().len(),
        1,
        "default method set is least_core alone"
    );
    assert_eq!(report["evaluated_count"], 6);
    assert_eq!(report["binding"], serde_json::json!(["a", "b", "c"]));
}

#[test]
fn solve_accepts_method_lists_and_aliases() {
    let out = run(&[
        "solve",
        "--game",
        &heart(),
        "--full",
        "--methods",
        "least_core,shapley,loo",
    ]);
    assert!(out.status.success(), "{out:?}");
    let report = stdout_json(&out);
    let methods: Vec<&String> = report["methods"].as_object().unwrap().keys().collect();
    assert_eq!(methods, ["least_core", "shapley", "leave_one_out"]);
    assert_eq!(report["methods"]["shapley"]["phi"]["a"], 0.178583);
    let pair = &report["comparison"]["least_core_vs_shapley"];
    assert!(pair["cosine"].as_f64().unwrap() > 0.9);
}

#[test]
fn solve_renders_a_table_when_asked() {
    let out = run(&["solve", "--game", &heart(), "--full", "--format", "table"]);
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("least_core"), "{text}");
    assert!(text.contains("0.142867"), "{text}");
    assert!(text.contains("e_star"), "{text}");
    assert!(!text.contains("-0.000000"), "{text}");
}

#[test]
fn solve_writes_the_out_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let out = run(&[
        "solve",
        "--game",
        &heart(),
        "--full",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["methods"]["least_core"]["e_star"], 0.357133);
}

#[test]
fn missing_singleton_fails_before_any_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let path = partial_heart(dir.path(), &["b"]);
    let out = run(&["solve", "--game", &path]);
    assert_eq!(out.status.code(), Some(2));
    let (kind, message) = stderr_error(&out);
    assert_eq!(kind, "validation");
    assert!(message.contains("singleton 'b'"), "{message}");
}

#[test]
fn mid_walk_table_miss_is_an_oracle_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = partial_heart(dir.path(), &["a,b"]);
    let out = run(&["solve", "--game", &path]);
    assert_eq!(out.status.code(), Some(3));
    let (kind, message) = stderr_error(&out);
    assert_eq!(kind, "oracle");
    assert!(message.contains("'a,b'"), "{message}");
    assert!(
        message.contains("coalitions evaluated before the failure"),
        "{message}"
    );
}

#[test]
fn full_flag_requires_a_complete_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = partial_heart(dir.path(), &["a,b"]);
    let out = run(&["solve", "--game", &path, "--full"]);
    assert_eq!(out.status.code(), Some(2));
    let (kind, message) = stderr_error(&out);
    assert_eq!(kind, "validation");
    assert!(message.contains("complete table"), "{message}");
    assert!(message.contains("a,b"), "{message}");
}

#[test]
fn unknown_method_is_rejected() {
    let out = run(&[
        "solve",
        "--game",
        &heart(),
        "--methods",
        "least_core,uncore",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let (kind, message) = stderr_error(&out);
    assert_eq!(kind, "validation");
    assert!(message.contains("unknown method 'uncore'"), "{message}");
}

#[test]
fn bad_synthetic_spec_is_rejected() {
    let out = run(&["solve", "--synthetic", "coverage:99:1"]);
    assert_eq!(out.status.code(), Some(2));
    let (kind, message) = stderr_error(&out);
    assert_eq!(kind, "validation");
    assert!(message.contains("player count"), "{message}");
}

#[test]
fn conflicting_sources_are_a_usage_error() {
    let out = run(&["solve", "--game", &heart(), "--synthetic", "additive:1,2"]);
    assert_eq!(out.status.code(), Some(2));
    // clap's own usage message, not our JSON contract
    assert!(!out.stderr.is_empty());
}

#[test]
fn failing_oracle_command_is_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.json");
    let out = bin()
        .args(["solve", "--oracle-cmd", "false", "--players", "a,b"])
        .arg("--cache")
        .arg(&cache)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let (kind, _) = stderr_error(&out);
    assert_eq!(kind, "oracle");
}

#[test]
fn live_solve_fills_the_cache_with_everything_it_queried() {
    let dir = tempfile::tempdir().unwrap();
    let stub = common::write_additive_stub(dir.path(), &[("a", 0.25), ("b", 0.75)]);
    let cache = dir.path().join("cache.json");
    let out = bin()
        .args(["solve", "--oracle-cmd", &stub, "--players", "a,b"])
        .arg("--cache")
        .arg(&cache)
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let cached = coalition_ledger::game::Game::load(&cache).unwrap();
    // grand plus both singletons for a two-player walk
    assert_eq!(cached.values().len(), 3);
    assert_eq!(cached.grand_value(), Some(1.0));
}

#[test]
fn overflowing_payoff_arithmetic_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("huge.json");
    std::fs::write(
        &path,
        r#"{"players":["a","b","c"],"values":{"a":1e308,"b":-1e308,"c":1e308,"a,b":-1e308,"a,c":1e308,"b,c":-1e308,"a,b,c":1e308}}"#,
    )
    .unwrap();
    let out = run(&["solve", "--game", path.to_str().unwrap(), "--full"]);
    assert_eq!(out.status.code(), Some(4));
    let (kind, message) = stderr_error(&out);
    assert_eq!(kind, "solver");
    assert!(message.contains("overflowed"), "{message}");
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = bin()
        .args(["prune", "--game", &heart()])
        .env("COALITION_LEDGER_THREADS", "abc")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let (kind, message) = stderr_error(&out);
    assert_eq!(kind, "validation");
    assert!(message.contains("COALITION_LEDGER_THREADS"), "{message}");
}

#[test]
fn prune_streams_one_json_object_per_evaluation() {
    let out = run(&["prune", "--game", &heart(), "--t1", "0", "--t2", "0"]);
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 7, "six evaluations plus a summary");
    for entry in &lines[..6] {
        assert!(entry["coalition"].is_string());
        assert!(entry["value"].is_number());
        assert!(entry["parent"].is_string());
        assert!(entry["decision"].is_string());
    }
    let summary = &lines[6]["summary"];
    assert_eq!(summary["evaluated_count"], 6);
    assert_eq!(summary["t1"], 0.0);
    assert_eq!(summary["v_grand"], 0.8571);
    let classified = ["expanded", "pruned_rule1", "pruned_rule2", "leaves"]
        .iter()
        .map(|k| summary[*k].as_u64().unwrap())
        .sum::<u64>();
    assert_eq!(classified, 6);
    assert_eq!(
        lines[0]["coalition"], "a",
        "walk starts at the first singleton"
    );
}

#[test]
fn prune_thresholds_drop_low_gain_branches() {
    let out = run(&["prune", "--game", &heart(), "--t1", "0.7", "--t2", "0"]);
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    // only the three singletons survive a gain bar that high; a and b fall
    // to the gain rule, c is a leaf (no higher-indexed player to add)
    assert_eq!(text.lines().count(), 4);
    let summary: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(summary["summary"]["evaluated_count"], 3);
    assert_eq!(summary["summary"]["pruned_rule1"], 2);
    assert_eq!(summary["summary"]["leaves"], 1);
}

#[test]
fn worker_thread_count_does_not_change_the_stream() {
    let args = [
        "prune",
        "--synthetic",
        "coverage:10:7",
        "--t1",
        "0.05",
        "--t2",
        "0.05",
    ];
    let sequential = bin()
        .args(args)
        .env("COALITION_LEDGER_THREADS", "1")
        .output()
        .unwrap();
    let threaded = bin()
        .args(args)
        .env("COALITION_LEDGER_THREADS", "4")
        .output()
        .unwrap();
    assert!(sequential.status.success());
    assert!(threaded.status.success());
    assert!(!sequential.stdout.is_empty());
    assert_eq!(sequential.stdout, threaded.stdout);
}

#[test]
fn validate_summarizes_a_table_source() {
    let out = run(&["validate", "--game", &heart()]);
    assert!(out.status.success(), "{out:?}");
    let summary = stdout_json(&out);
    assert_eq!(summary["ok"], true);
    assert_eq!(summary["n"], 3);
    assert_eq!(summary["entries"], 7);
    assert_eq!(summary["complete"], true);
    assert_eq!(summary["missing"], 0);
    assert_eq!(summary["grand_value"], 0.8571);
    assert_eq!(summary["missing_singletons"], serde_json::json!([]));
    assert_eq!(summary["weights"], false);
}

#[test]
fn validate_flags_holes_in_a_partial_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = partial_heart(dir.path(), &["b", "a,c"]);
    let out = run(&["validate", "--game", &path]);
    assert!(
        out.status.success(),
        "validate reports, it does not reject: {out:?}"
    );
    let summary = stdout_json(&out);
    assert_eq!(summary["complete"], false);
    assert_eq!(summary["missing"], 2);
    assert_eq!(summary["missing_singletons"], serde_json::json!(["b"]));
}

#[test]
fn validate_names_the_synthetic_family() {
    let out = run(&["validate", "--synthetic", "additive:1,2,3"]);
    assert!(out.status.success(), "{out:?}");
    let summary = stdout_json(&out);
    assert_eq!(summary["kind"], "additive");
    assert_eq!(summary["n"], 3);
    assert_eq!(summary["players"], serde_json::json!(["a", "b", "c"]));
}

#[test]
fn compare_a_game_with_itself_is_perfect_agreement() {
    let out = run(&["compare", &heart(), &heart(), "--full"]);
    assert!(out.status.success(), "{out:?}");
    let cmp = stdout_json(&out);
    assert_eq!(cmp["players"], serde_json::json!(["a", "b", "c"]));
    let pairs = cmp["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 1);
    let stats = &pairs[0]["methods"]["least_core"];
    assert_eq!(stats["cosine"], 1.0);
    assert_eq!(stats["max_abs_diff"], 0.0);
    assert_eq!(pairs[0]["delta_e_star"], 0.0);
}

#[test]
fn compare_accepts_a_report_file_next_to_a_game_file() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let solve = run(&[
        "solve",
        "--game",
        &heart(),
        "--full",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert!(solve.status.success());
    let out = run(&["compare", report_path.to_str().unwrap(), &heart(), "--full"]);
    assert!(out.status.success(), "{out:?}");
    let cmp = stdout_json(&out);
    let stats = &cmp["pairs"][0]["methods"]["least_core"];
    assert_eq!(stats["cosine"], 1.0);
    assert_eq!(stats["max_abs_diff"], 0.0);
}

#[test]
fn compare_rejects_mismatched_rosters() {
    let dir = tempfile::tempdir().unwrap();
    let two = coalition_ledger::game::Game::new(
        vec!["a".into(), "b".into()],
        std::collections::BTreeMap::from([
            (coalition_ledger::game::Coalition::from_mask(0b01), 0.4),
            (coalition_ledger::game::Coalition::from_mask(0b10), 0.4),
            (coalition_ledger::game::Coalition::from_mask(0b11), 1.0),
        ]),
        None,
    )
    .unwrap();
    let path = dir.path().join("two.json");
    two.save(&path).unwrap();
    let out = run(&["compare", &heart(), path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let (kind, message) = stderr_error(&out);
    assert_eq!(kind, "validation");
    assert!(message.contains("different rosters"), "{message}");
}
