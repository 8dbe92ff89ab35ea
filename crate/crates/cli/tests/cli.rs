use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SCHEMA_BASE: &str = "https://example.org/ternary-ok/schemas/";

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

struct LocalSchemas;

impl jsonschema::Retrieve for LocalSchemas {
    fn retrieve(&self, uri: &jsonschema::Uri<String>) -> Result<Value, Box<dyn std::error::Error + Send + Sync>> {
        let name = uri.as_str().strip_prefix(SCHEMA_BASE).ok_or("unknown schema base")?;
        Ok(serde_json::from_str(&std::fs::read_to_string(schema_dir().join(name))?)?)
    }
}

fn assert_schema(name: &str, doc: &Value) {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(schema_dir().join(format!("{name}.schema.json"))).unwrap())
            .unwrap();
    let v = jsonschema::options().with_retriever(LocalSchemas).build(&schema).unwrap();
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ternary-ok")).current_dir(dir).args(args).output().unwrap()
}

fn run(args: &[&str]) -> Output {
    run_in(&std::env::temp_dir(), args)
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn uniform_abc_at_centroid() {
    let doc = stdout_json(&run(&["energy", "--pattern", "ABC", "--uniform"]));
    assert_schema("energy", &doc);
    assert!((doc["energy"]["total"].as_f64().unwrap() - 3.25).abs() < 1e-12);
    assert_eq!(doc["energy"]["short_range"], 3.0);
    assert_eq!(doc["config"]["matrix"]["family"], "ren");
    assert_schema("run_config", &doc["config"]);
}

#[test]
fn malformed_pattern_exits_with_validation_code() {
    let out = run(&["energy", "--pattern", "ABB"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("adjacent duplicate"), "{}", stderr(&out));
}

#[test]
fn optimized_abac_has_equal_a_layers() {
    let doc = stdout_json(&run(&["--omega", "0.14,0.43,0.43", "energy", "--pattern", "ABAC", "--optimize"]));
    assert_schema("energy", &doc);
    assert_eq!(doc["optimization"]["converged"], true);
    let w: Vec<f64> = serde_json::from_value(doc["widths"].clone()).unwrap();
    assert!((w[0] - w[2]).abs() < 1e-6, "{w:?}");
    assert!((w[0] + w[2] - 0.14).abs() < 1e-9);
}

#[test]
fn explicit_widths_are_checked() {
    let ok = stdout_json(&run(&["energy", "--pattern", "ABC", "--widths", "0.2,0.3,0.5", "--omega", "0.2,0.3,0.5"]));
    assert_eq!(ok["widths"], serde_json::json!([0.2, 0.3, 0.5]));
    let bad = run(&["energy", "--pattern", "ABC", "--widths", "0.3,0.3,0.4"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn optimize_over_repeats() {
    let doc = stdout_json(&run(&["--omega", "0.14,0.43,0.43", "--gamma", "1558.7", "optimize", "--pattern", "ABAC", "--repeats", "6"]));
    assert_schema("energy", &doc);
    let best = doc["repeats"]["best_n"].as_u64().unwrap() as usize;
    assert_eq!(doc["pattern"].as_str().unwrap(), "ABAC".repeat(best));
    let energies: Vec<f64> = serde_json::from_value(doc["repeats"]["energies"].clone()).unwrap();
    assert!(energies.iter().all(|e| *e >= doc["energy"]["total"].as_f64().unwrap() - 1e-9));
}

#[test]
fn search_length_cap() {
    let out = run(&["search", "--max-len", "25"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cap"), "{}", stderr(&out));
}

fn search(dir: &Path, gamma: &str, threads: &str) -> Value {
    let out = run_in(dir, &["--omega", "0.14,0.43,0.43", "--gamma", gamma, "--threads", threads, "search", "--max-len", "12"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = read_json(&dir.join("search_report.json"));
    assert_schema("search", &doc);
    doc
}

#[test]
fn search_reproduces_both_regimes() {
    let dir = TempDir::new().unwrap();
    let low = search(dir.path(), "5.7", "2");
    assert_eq!(low["report"]["best"]["pattern"].as_str().unwrap().len(), 3);
    let high = search(dir.path(), "1558.7", "2");
    let best = high["report"]["best"]["pattern"].as_str().unwrap();
    assert_eq!(best, "ABAC".repeat(best.len() / 4), "{best}");
    assert!(best.len() >= 8);
}

#[test]
fn search_output_independent_of_threads() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    search(a.path(), "300", "1");
    search(b.path(), "300", "4");
    let read = |d: &TempDir| std::fs::read(d.path().join("search_report.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn search_writes_record_table() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("records.csv");
    let out = run_in(dir.path(), &["search", "--max-len", "6", "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# config: {"));
    assert!(text.lines().nth(1).unwrap().starts_with("pattern,length,energy"));
}

fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn ohta_omega_section_is_all_babc() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("grid.json");
    let out = run_in(
        dir.path(),
        &["--family", "ohta", "phasediag", "--section", "omega", "--resolution", "5", "--json", json.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&dir.path().join("phasediag_omega_ohta.csv"));
    assert_eq!(rows.len(), 25);
    assert!(rows.iter().all(|r| r[4] == "BABC"), "{rows:?}");
    let svg = std::fs::read_to_string(dir.path().join("phasediag_omega_ohta.svg")).unwrap();
    assert!(svg.starts_with("<?xml") || svg.starts_with("<svg"));
    assert!(svg.contains("viewBox") && svg.trim_end().ends_with("</svg>"));
    assert_schema("phasediag", &read_json(&json));
}

#[test]
fn ren_tension_centre_is_abc() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("t.csv");
    let svg = dir.path().join("t.svg");
    let out = run_in(
        dir.path(),
        &["phasediag", "--section", "tension", "--resolution", "6", "--csv", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&csv);
    let dist = |r: &Vec<String>| (0..3).map(|i| (r[i].parse::<f64>().unwrap() - 1.0 / 3.0).powi(2)).sum::<f64>();
    let centre = rows.iter().min_by(|a, b| dist(a).total_cmp(&dist(b))).unwrap();
    assert_eq!(centre[4], "ABC");
    assert!(svg.exists());
}

#[test]
fn general_family_is_rejected_for_phase_diagrams() {
    let out = run(&["--family", "general", "phasediag", "--resolution", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn matrix_examples() {
    let doc = stdout_json(&run(&["matrix", "--check", "--f", "1,0,0"]));
    assert_schema("matrix", &doc);
    assert_eq!(doc["check"]["admissible"], false);

    let doc = stdout_json(&run(&["matrix", "--check", "--decompose", "--f", "-1,-1,-1"]));
    assert_schema("matrix", &doc);
    assert_eq!(doc["check"]["admissible"], true);
    assert_eq!(doc["decomposition"]["psd"], true);
    for k in ["f12", "f13", "f23"] {
        assert!((doc["decomposition"]["coefficients"][k].as_f64().unwrap() + 1.0).abs() < 1e-12);
    }

    let doc = stdout_json(&run(&["--family", "blend", "--omega", "0.2,0.3,0.5", "matrix", "--decompose"]));
    let c = &doc["decomposition"]["coefficients"];
    assert!(c["f12"].as_f64().unwrap() < 0.0);
    assert_eq!((c["f13"].as_f64().unwrap(), c["f23"].as_f64().unwrap()), (0.0, 0.0));
    assert_eq!(doc["decomposition"]["psd"], true);
}

#[test]
fn matrix_canonical_form_annihilates_fractions() {
    let doc = stdout_json(&run(&["--omega", "0.2,0.3,0.5", "--family", "ohta", "matrix"]));
    assert_schema("matrix", &doc);
    let g: [[f64; 3]; 3] = serde_json::from_value(doc["canonical"].clone()).unwrap();
    for row in g {
        assert!((row[0] * 0.2 + row[1] * 0.3 + row[2] * 0.5).abs() < 1e-12);
    }
}

#[test]
fn binary_balls_alternate() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("b.csv");
    let doc = stdout_json(&run(&["balls", "--mode", "binary", "--n", "4", "--csv", csv.to_str().unwrap()]));
    assert_schema("balls", &doc);
    assert_eq!(doc["report"]["minimizers"], serde_json::json!(["ABABABAB"]));
    assert_eq!(csv_rows(&csv).len(), doc["report"]["evaluated"].as_u64().unwrap() as usize);
}

#[test]
fn ternary_balls_with_ren_matrix() {
    let doc = stdout_json(&run(&["--omega", "0.2,0.3,0.5", "balls", "--mode", "ternary", "--n", "2"]));
    assert_schema("balls", &doc);
    assert_eq!(doc["report"]["minimizers"], serde_json::json!(["ABCABC"]));
}

#[test]
fn conjecture_sweep_has_no_counterexamples() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("sweep.json");
    let out = run(&["balls", "--mode", "conjecture-sweep", "--n", "3", "--json", json.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(", 0 counterexamples"), "{text}");
    assert!(!text.contains(" FAIL"));
    let doc = read_json(&json);
    assert_schema("balls", &doc);
    assert_eq!(doc["sweep"]["counterexamples"], 0);
    assert_eq!(doc["sweep"]["cells"].as_array().unwrap().len(), 3 * 20 * 15);
}

#[test]
fn balls_size_caps() {
    assert_eq!(run(&["balls", "--mode", "ternary", "--n", "9"]).status.code(), Some(2));
    assert_eq!(run(&["balls", "--mode", "binary", "--n", "0"]).status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"omega": [0.2, 0.3, 0.5], "tensions": {"c12": 1, "c13": 0.8, "c23": 0.9},
            "matrix": {"family": "ohta", "gamma": 4}, "tolerances": {"max_iters": 500}}"#,
    )
    .unwrap();
    let doc = stdout_json(&run(&["--config", cfg.to_str().unwrap(), "--gamma", "7", "energy", "--pattern", "ABC", "--uniform"]));
    assert_schema("run_config", &doc["config"]);
    assert_eq!(doc["config"]["matrix"]["family"], "ohta");
    assert_eq!(doc["config"]["matrix"]["gamma"], 7.0);
    assert_eq!(doc["config"]["omega"], serde_json::json!([0.2, 0.3, 0.5]));
    assert_eq!(doc["config"]["tolerances"]["max_iters"], 500);
    assert_eq!(doc["energy"]["short_range"].as_f64().unwrap(), 2.7);
}

#[test]
fn config_errors_exit_with_validation_code() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"omega": [0.2, 0.3, 0.5], "gama": 3}"#).unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "energy", "--pattern", "ABC"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown field"));

    std::fs::write(&cfg, r#"{"matrix": {"family": "general", "gamma": 1}}"#).unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "energy", "--pattern", "ABC"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("gamma_tilde"));

    let out = run(&["--omega", "0.5,0.5,0.5", "energy", "--pattern", "ABC"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn general_family_from_config() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"matrix": {"family": "general", "gamma": 2, "gamma_tilde": [[1, 0.5], [0.5, 1]]}}"#).unwrap();
    let doc = stdout_json(&run(&["--config", cfg.to_str().unwrap(), "energy", "--pattern", "ABAC", "--optimize"]));
    assert_schema("energy", &doc);
    assert_schema("run_config", &doc["config"]);
}

#[test]
fn json_output_mirrors_stdout() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("out/e.json");
    let out = run(&["energy", "--pattern", "ABCABC", "--json", json.to_str().unwrap()]);
    let doc = stdout_json(&out);
    assert_eq!(read_json(&json), doc);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), std::fs::read_to_string(&json).unwrap());
}

#[test]
fn zero_threads_rejected() {
    assert_eq!(run(&["--threads", "0", "energy", "--pattern", "ABC"]).status.code(), Some(2));
}
