//! Command-line contract: exit codes, output channels, determinism, replay.

use std::process::{Command, Output};

fn hosos_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hosos"))
}

fn run(args: &[&str]) -> Output {
    hosos_bin().args(args).output().unwrap()
}

fn asset(name: &str) -> String {
    format!("{}/../../assets/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn exit_codes_follow_the_contract() {
    // 0: valid spec / no counterexample.
    assert_eq!(run(&["check-spec", &asset("xcl.hos")]).status.code(), Some(0));
    assert_eq!(
        run(&["bisim", "xcl", "S", "S", "--depth", "3", "--pool-size", "2"]).status.code(),
        Some(0)
    );
    // 2: input error (unparseable term, unknown spec).
    assert_eq!(run(&["run", "xcl", "app(S)"]).status.code(), Some(2));
    assert_eq!(run(&["run", "no_such_spec", "S"]).status.code(), Some(2));
    // 3: distinguished.
    assert_eq!(
        run(&["bisim", "xcl", "I", "K", "--depth", "3", "--pool-size", "3"]).status.code(),
        Some(3)
    );
}

#[test]
fn invalid_spec_file_lists_gaps_and_exits_one() {
    let src = std::fs::read_to_string(asset("xcl.hos")).unwrap();
    let without_app1: String = src
        .lines()
        .filter(|l| !l.contains("rule app1"))
        .collect::<Vec<_>>()
        .join("\n");
    let path = std::env::temp_dir().join(format!("hosos_gap_{}.hos", std::process::id()));
    std::fs::write(&path, without_app1).unwrap();

    let out = run(&["check-spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("gap"), "{stderr}");
    assert!(stderr.contains("(app, {1})"), "{stderr}");
    assert!(stderr.contains("(app, {1,2})"), "{stderr}");
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["status"], "invalid");
    assert_eq!(doc["diagnostics"].as_array().unwrap().len(), 2);

    std::fs::remove_file(&path).ok();
}

#[test]
fn machine_output_is_one_json_document_on_stdout() {
    for args in [
        vec!["run", "xcl", "(S K) I", "--steps", "10"],
        vec!["bisim", "xcl", "I", "K", "--depth", "3", "--pool-size", "2"],
        vec!["enumerate", "xcl", "--max-size", "2"],
        vec!["check-spec", &asset("xcl.hos")],
    ] {
        let out = hosos_bin().args(&args).output().unwrap();
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert_eq!(stdout.lines().count(), 1, "{args:?} -> {stdout}");
        serde_json::from_str::<serde_json::Value>(&stdout).unwrap();
    }
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = [
        "congruence", "xcl", "(S K) I", "(S K) K",
        "--contexts", "40", "--ctx-size", "6", "--depth", "4", "--seed", "42",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let different_seed = [
        "congruence", "xcl", "(S K) I", "(S K) K",
        "--contexts", "40", "--ctx-size", "6", "--depth", "4", "--seed", "43",
    ];
    let c = run(&different_seed);
    assert_eq!(c.status.code(), Some(0));
}

#[test]
fn replay_mode_validates_witnesses() {
    let out = run(&[
        "bisim", "xcl", "I", "K", "--depth", "3", "--pool-size", "3", "--replay",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["replay_ok"], true);

    let out = run(&[
        "bisim", "lambda_cbn", "\\x.x", "\\x.(\\y.y) x", "--depth", "3", "--replay",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["replay_ok"], true);

    let out = run(&[
        "bisim", "xcl_nd", "plus(I, K)", "I", "--depth", "2", "--pool-size", "2", "--replay",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["replay_ok"], true);
    assert_eq!(doc["mismatch"], "nd_unmatched");
}

#[test]
fn asset_directory_env_var_resolves_bare_names() {
    let dir = std::path::Path::new(&asset("xcl.hos")).parent().unwrap().to_path_buf();
    let out = hosos_bin()
        .env("HOSOS_ASSET_DIR", &dir)
        .args(["run", "xcl.hos", "(S K) I", "--steps", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn text_format_renders_line_records() {
    let out = run(&["--format", "text", "run", "xcl", "(S K) I", "--steps", "10"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "0\tS K I\treduce\tS'(K) I");
    assert_eq!(lines[1], "1\tS'(K) I\treduce\tS''(K, I)");
    assert_eq!(lines[2], "2\tS''(K, I)\tfun\tK · (I ·)");
    assert_eq!(lines[3], "terminal\tfun");
}

#[test]
fn enumerate_lists_canonical_terms() {
    let out = run(&["enumerate", "xcl", "--max-size", "2"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let terms: Vec<&str> =
        doc["terms"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()).collect();
    assert_eq!(
        terms,
        vec!["S", "K", "I", "S'(S)", "S'(K)", "S'(I)", "K'(S)", "K'(K)", "K'(I)"]
    );

    let out = run(&["enumerate", "lambda_cbn", "--max-size", "2", "--ctx", "0"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["count"], 1);
}

#[test]
fn lambda_runs_accept_both_syntaxes() {
    let named = run(&["run", "lambda_cbn", "(\\x.x x)(\\x.x x)", "--steps", "3"]);
    assert_eq!(named.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&named.stdout).unwrap();
    assert_eq!(doc["terminal"], "cutoff");
    assert_eq!(doc["trace"].as_array().unwrap().len(), 3);

    let db = run(&[
        "run", "lambda_cbn",
        "app(lam(app(@0, @0)), lam(app(@0, @0)))",
        "--steps", "3", "--debruijn",
    ]);
    assert_eq!(db.status.code(), Some(0));
    let doc2: serde_json::Value = serde_json::from_slice(&db.stdout).unwrap();
    assert_eq!(doc, doc2);
}

#[test]
fn cbv_and_cbn_differ_on_argument_order() {
    // (λx. λy. y) Ω: call-by-name fires β at once; call-by-value keeps
    // stepping the argument forever.
    let term = "(\\x. \\y. y) OMEGA";
    let cbn = run(&["run", "lambda_cbn", term, "--steps", "5"]);
    let cbn_doc: serde_json::Value = serde_json::from_slice(&cbn.stdout).unwrap();
    assert_eq!(cbn_doc["terminal"], "fun");

    let cbv = run(&["run", "lambda_cbv", term, "--steps", "5"]);
    let cbv_doc: serde_json::Value = serde_json::from_slice(&cbv.stdout).unwrap();
    assert_eq!(cbv_doc["terminal"], "cutoff");
}
