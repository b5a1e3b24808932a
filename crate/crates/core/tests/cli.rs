use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_glk-inar"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

const LOW: [&str; 10] =
    ["--alpha", "0.3", "--a", "5.3239", "--b", "0.0592", "--c", "0.6", "--beta", "0.5917"];

fn simulate(dir: &TempDir, name: &str, seed: &str, length: &str) -> String {
    let out = path(dir, name);
    let mut args = vec!["simulate"];
    args.extend(LOW);
    args.extend(["--length", length, "--seed", seed, "--out", &out]);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn error_kind(o: &Output) -> String {
    let v: Value = serde_json::from_slice(&o.stderr).expect("error JSON on stderr");
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn simulate_writes_values_and_echoes_moments() {
    let dir = TempDir::new().unwrap();
    let out = simulate(&dir, "low.csv", "42", "1000");
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("value"));
    let values: Vec<u64> = lines.map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 1000);
    let o = run(&["moments", "--alpha", "0.3", "--a", "5.3239", "--b", "0.0592", "--c", "0.6", "--beta", "0.5917"]);
    assert!(o.status.success());
}

#[test]
fn simulate_is_byte_identical_under_a_seed() {
    let dir = TempDir::new().unwrap();
    let a = simulate(&dir, "a.csv", "7", "500");
    let b = simulate(&dir, "b.csv", "7", "500");
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn simulate_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "x.csv");
    let mut args = vec!["simulate"];
    args.extend(LOW);
    args.extend(["--length", "0", "--seed", "1", "--out", &out]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "usage");
    // κ = 1 - 0.6 - 1·0.6/0.6 < 0
    let o = run(&["simulate", "--alpha", "0.3", "--a", "1", "--b", "1", "--c", "0.6", "--beta", "0.6", "--length", "10", "--seed", "1", "--out", &out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!Path::new(&out).exists());
}

#[test]
fn ci_mode_requires_a_seed() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "x.csv");
    let mut args = vec!["--ci", "simulate"];
    args.extend(LOW);
    args.extend(["--length", "10", "--out", &out]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flags_are_usage_errors() {
    let o = run(&["fit", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "usage");
    assert!(run(&["--help"]).status.success());
}

#[test]
fn moments_of_fig_one_parameters() {
    let o = run(&["moments", "--alpha", "0.5", "--a", "3.86", "--b", "0", "--c", "0.6", "--beta", "0.7", "--lags", "0,1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let text = v.to_string();
    assert!(text.contains("3.333333333333"), "{text}");
    let o = run(&["moments", "--alpha", "0", "--a", "3.86", "--b", "0", "--c", "0.6", "--beta", "0.7"]);
    assert_eq!(o.status.code(), Some(3));
}

fn fit(input: &str, model: &str, out: &str, extra: &[&str]) -> Output {
    let mut args = vec!["--ci", "fit", "--input", input, "--model", model, "--seed", "5", "--out", out];
    args.extend(["--iterations", "6000", "--burnin", "1000", "--thin", "5"]);
    args.extend(extra);
    run(&args)
}

#[test]
fn fit_report_is_complete_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "d.csv", "3", "400");
    let (a, b) = (path(&dir, "a.json"), path(&dir, "b.json"));
    let chain = path(&dir, "chain.csv");
    let o = fit(&data, "glk", &a, &["--chain-out", &chain]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fit(&data, "glk", &b, &[]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let v: Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["model"], "glk");
    let params = v["parameters"].as_array().unwrap();
    assert_eq!(params.len(), 5);
    for p in params {
        let (e, lo, hi) = (p["estimate"].as_f64().unwrap(), p["ci_low"].as_f64().unwrap(), p["ci_high"].as_f64().unwrap());
        assert!(lo <= e && e <= hi, "{p}");
    }
    assert_eq!(v["diagnostics"]["after_thinning"]["draws"], 1000);
    assert_eq!(v["diagnostics"]["before_thinning"]["draws"], 6000);
    assert!(v["meta"].get("wall_clock_seconds").is_none());
    let digest = glk_inar::cli_io::digest_hex(&fs::read(&data).unwrap());
    assert_eq!(v["meta"]["data_digest"], digest.as_str());
    assert_eq!(fs::read_to_string(&chain).unwrap().lines().count(), 6001);
}

#[test]
fn fit_without_thinning_keeps_every_draw() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "d.csv", "4", "200");
    let out = path(&dir, "r.json");
    let o = run(&["fit", "--input", &data, "--model", "nb", "--seed", "1", "--out", &out, "--iterations", "800", "--burnin", "0", "--thin", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["diagnostics"]["before_thinning"]["draws"], 800);
    assert!(v["diagnostics"]["after_thinning"].is_null());
}

#[test]
fn fit_reports_input_errors() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r.json");
    let bad = path(&dir, "bad.csv");
    fs::write(&bad, "value\n3\n-1\n").unwrap();
    let o = run(&["fit", "--input", &bad, "--model", "glk", "--seed", "1", "--out", &out]);
    assert_eq!(o.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"]["line"], 3);
    let o = run(&["fit", "--input", &path(&dir, "missing.csv"), "--model", "glk", "--seed", "1", "--out", &out]);
    assert_eq!(o.status.code(), Some(3));
    let data = simulate(&dir, "d.csv", "4", "50");
    let o = run(&["fit", "--input", &data, "--model", "zip", "--seed", "1", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_stars_and_rejects_duplicates() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "d.csv", "6", "300");
    let out = path(&dir, "cmp.json");
    let o = run(&["--ci", "compare", "--input", &data, "--models", "glk,nb", "--seed", "2", "--iterations", "6000", "--burnin", "1000", "--thin", "5", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    assert_eq!(table.matches('*').count(), 2, "{table}");
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);

    let o = run(&["compare", "--input", &data, "--models", "glk,glk", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn diagnose_blocks_and_errors() {
    let dir = TempDir::new().unwrap();
    let chain = path(&dir, "c.csv");
    let rows: String = (0..400).map(|i| format!("{},{}\n", (i as f64 * 0.37).sin(), (i % 7) as f64)).collect();
    fs::write(&chain, format!("x,y\n{rows}")).unwrap();
    let o = run(&["diagnose", "--chain", &chain, "--lags", "1,5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["after_thinning"].is_null());
    let o = run(&["diagnose", "--chain", &chain, "--lags", "1", "--thin", "2", "--burnin", "100"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["after_thinning"]["draws"], 150);
    let o = run(&["diagnose", "--chain", &chain, "--lags", "400"]);
    assert_eq!(o.status.code(), Some(3));
    fs::write(&chain, "x,y\n1,2\n3\n").unwrap();
    let o = run(&["diagnose", "--chain", &chain]);
    assert_eq!(o.status.code(), Some(3));
}
