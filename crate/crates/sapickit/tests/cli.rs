//! The command-line tool: exit codes, JSON output against the shipped
//! schema, output files, and determinism.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sapickit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sapickit")).args(args).env_remove("SAPICKIT_SEED").output().expect("binary runs")
}

fn corpus(name: &str) -> String {
    common::corpus_path(name).to_string_lossy().into_owned()
}

fn validator() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/output.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(v: &jsonschema::Validator, out: &Output) -> Value {
    let doc: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    let errors: Vec<String> = v.iter_errors(&doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{:?}\n{}", errors, doc);
    doc
}

fn temp_spec(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".sapic").tempfile().unwrap();
    std::io::Write::write_all(&mut f, text.as_bytes()).unwrap();
    f
}

fn with_lemma(name: &str, lemma: &str) -> tempfile::NamedTempFile {
    let text = std::fs::read_to_string(common::corpus_path(name)).unwrap();
    temp_spec(&text.replacen("\nend", &format!("\n{}\nend", lemma), 1))
}

#[test]
fn well_formed_files_check() {
    for name in common::DIFF_CORPUS {
        let out = sapickit(&["check", &corpus(name)]);
        assert_eq!(out.status.code(), Some(0), "{}", name);
    }
}

#[test]
fn input_errors_exit_with_two() {
    let reserved = temp_spec("theory T\nbegin\nprocess:\n  [ ] --[ Insert('a', 'b') ]-> [ ]\nend\n");
    let garbled = temp_spec("theory T\nbegin\nprocess:\n  out(\nend\n");
    for args in [
        vec!["check".to_string(), reserved.path().to_string_lossy().into_owned()],
        vec!["check".to_string(), garbled.path().to_string_lossy().into_owned()],
        vec!["check".to_string(), "/nonexistent/file.sapic".to_string()],
        vec!["run-pi".to_string(), corpus("zero"), "--visible".to_string(), "0".to_string()],
    ] {
        let out = sapickit(&args.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(out.status.code(), Some(2), "{:?}", args);
        assert!(!out.stderr.is_empty(), "{:?}", args);
    }
    let out = Command::new(env!("CARGO_BIN_EXE_sapickit"))
        .args(["run-pi", &corpus("zero")])
        .env("SAPICKIT_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unsatisfiable_existential_lemma_exits_with_one() {
    let f = with_lemma("zero", "lemma bottom: exists-trace \"F\"");
    let out = sapickit(&["eval", &f.path().to_string_lossy(), "bottom"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("violated"));
}

#[test]
fn exhausted_state_cap_exits_with_three() {
    let out = sapickit(&["run-pi", &corpus("repl-new"), "--visible", "6", "--state-cap", "5"]);
    assert_eq!(out.status.code(), Some(3));
    let out = sapickit(&["diff", &corpus("pnew"), "--state-cap", "5"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn json_output_validates_against_the_schema() {
    let v = validator();
    let leak = with_lemma("pnew", "lemma leak: all-traces \"All h k #i. NewKey(h, k) @ #i ==> not Ex #j. K(h) @ #j\"");
    let leak = leak.path().to_string_lossy().into_owned();
    let pnew = corpus("pnew");
    let runs: Vec<(Vec<&str>, i32)> = vec![
        (vec!["check", &pnew], 0),
        (vec!["translate", &pnew], 0),
        (vec!["run-pi", &pnew, "--visible", "3"], 0),
        (vec!["run-msr", &pnew, "--visible", "3"], 0),
        (vec!["run-msr", &pnew, "--visible", "2", "--reference", "--state-cap", "50"], 3),
        (vec!["diff", &pnew, "--visible", "3"], 0),
        (vec!["diff", &pnew, "--adversary", "demand", "--visible", "3", "--fresh-pool", "1"], 0),
        (vec!["eval", &pnew, "creation", "--side", "msr"], 0),
        (vec!["eval", &leak, "leak", "--visible", "3"], 1),
        (vec!["check", "/nonexistent/file.sapic"], 2),
    ];
    for (mut args, want) in runs {
        args.push("--json");
        let out = sapickit(&args);
        assert_eq!(out.status.code(), Some(want), "{:?}", args);
        let doc = assert_valid(&v, &out);
        if want == 1 {
            assert!(doc["report"]["witness"].is_array());
        }
    }
    let reserved = temp_spec("theory T\nbegin\nprocess:\n  [ ] --[ Insert('a', 'b') ]-> [ ]\nend\n");
    let out = sapickit(&["check", "--json", &reserved.path().to_string_lossy()]);
    let doc = assert_valid(&v, &out);
    assert_eq!(doc["error"], "ill-formed");
    assert!(!doc["violations"].as_array().unwrap().is_empty());
}

#[test]
fn out_writes_the_report_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pnew.spthy");
    let out = sapickit(&["translate", &corpus("pnew"), "--out", &path.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written.as_bytes(), sapickit(&["translate", &corpus("pnew")]).stdout.as_slice());
    assert!(written.contains("rule Init"));
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec!["translate", "lock-pair"],
        vec!["run-pi", "guarded-counter", "--json"],
        vec!["run-msr", "store", "--json"],
        vec!["diff", "internal-comm", "--json"],
    ] {
        let path = corpus(args[1]);
        let mut full = args.clone();
        full[1] = &path;
        let first = sapickit(&full);
        assert_eq!(first.status.code(), Some(0), "{:?}", args);
        for _ in 0..2 {
            assert_eq!(sapickit(&full).stdout, first.stdout, "{:?}", args);
        }
        let seeded = Command::new(env!("CARGO_BIN_EXE_sapickit")).args(&full).env("SAPICKIT_SEED", "99").output().unwrap();
        if args[0] != "translate" {
            let strip = |o: &[u8]| {
                let mut v: Value = serde_json::from_slice(o).unwrap();
                v["report"]["bounds"]["seed"] = Value::Null;
                v
            };
            assert_eq!(strip(&seeded.stdout), strip(&first.stdout), "{:?}", args);
        }
    }
}
