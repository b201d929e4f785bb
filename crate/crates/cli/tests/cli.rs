use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/synth_seed42")
}

fn exposure(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exposure"))
        .args(args)
        .output()
        .unwrap()
}

fn run_ok(args: &[&str]) {
    let out = exposure(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

fn schema(name: &str) -> jsonschema::Validator {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas");
    let load = |f: &str| fs::read_to_string(dir.join(f)).unwrap();
    // inline the shared metadata schema so no external resolution is needed
    let mut doc: Value =
        serde_json::from_str(&load(name).replace("\"metadata.schema.json\"", "\"#/$defs/metadata\"")).unwrap();
    let mut meta: Value = serde_json::from_str(&load("metadata.schema.json")).unwrap();
    meta.as_object_mut()
        .unwrap()
        .retain(|k, _| k != "$id" && k != "$schema");
    doc["$defs"]["metadata"] = meta;
    jsonschema::validator_for(&doc).unwrap()
}

fn assert_valid(schema_file: &str, doc: &Value) {
    let v = schema(schema_file);
    let errors: Vec<String> = v
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{schema_file}: {errors:#?}");
}

fn stderr_error(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stderr)
        .unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&out.stderr)));
    v["error"].clone()
}

fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn reports_match_their_schemas() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let data = fixture();
    let d = data.to_str().unwrap();
    for cmd in ["compute", "validate", "hhi"] {
        run_ok(&["--data", d, "--output", o, cmd]);
    }
    assert_valid(
        "exposure_report.schema.json",
        &read_json(&out.path().join("exposure_report.json")),
    );
    assert_valid(
        "validation_report.schema.json",
        &read_json(&out.path().join("validation_report.json")),
    );
    assert_valid(
        "concentration_report.schema.json",
        &read_json(&out.path().join("concentration_report.json")),
    );
}

#[test]
fn schema_rejects_out_of_range_index() {
    let out = tempfile::tempdir().unwrap();
    run_ok(&[
        "--data",
        fixture().to_str().unwrap(),
        "--output",
        out.path().to_str().unwrap(),
        "compute",
    ]);
    let mut doc = read_json(&out.path().join("exposure_report.json"));
    doc["regions"][0]["index"] = Value::from(1.5);
    assert!(!schema("exposure_report.schema.json").is_valid(&doc));
}

#[test]
fn compute_is_byte_identical_across_runs_and_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let d = fixture();
    run_ok(&[
        "--data",
        d.to_str().unwrap(),
        "--output",
        a.path().to_str().unwrap(),
        "compute",
    ]);
    run_ok(&[
        "--data",
        d.to_str().unwrap(),
        "--output",
        b.path().to_str().unwrap(),
        "--workers",
        "3",
        "compute",
    ]);
    let first = fs::read(a.path().join("exposure_report.json")).unwrap();
    assert_eq!(first, fs::read(b.path().join("exposure_report.json")).unwrap());
    run_ok(&[
        "--data",
        d.to_str().unwrap(),
        "--output",
        a.path().to_str().unwrap(),
        "compute",
    ]);
    assert_eq!(first, fs::read(a.path().join("exposure_report.json")).unwrap());
}

#[test]
fn synth_reproduces_the_fixture() {
    let out = tempfile::tempdir().unwrap();
    run_ok(&["--seed", "42", "--output", out.path().to_str().unwrap(), "synth"]);
    for entry in fs::read_dir(fixture()).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap();
        assert_eq!(
            fs::read(&p).unwrap(),
            fs::read(out.path().join(name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn synth_size_flags_are_applied() {
    let out = tempfile::tempdir().unwrap();
    run_ok(&[
        "--seed",
        "9",
        "--output",
        out.path().to_str().unwrap(),
        "synth",
        "--occupations",
        "12",
        "--states",
        "3",
        "--counties",
        "6",
    ]);
    let m = read_json(&out.path().join("manifest.json"));
    assert_eq!(m["occupations"], 12);
    assert_eq!(m["states"], 3);
    assert_eq!(m["counties"], 6);
    assert_eq!(m["employment_cells"], 72);
}

#[test]
fn missing_employment_is_an_input_error_naming_the_path() {
    let data = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(fixture()).unwrap() {
        let p = entry.unwrap().path();
        if p.file_name().unwrap() != "employment.csv" {
            fs::copy(&p, data.path().join(p.file_name().unwrap())).unwrap();
        }
    }
    let out = tempfile::tempdir().unwrap();
    let res = exposure(&[
        "--data",
        data.path().to_str().unwrap(),
        "--output",
        out.path().to_str().unwrap(),
        "compute",
    ]);
    assert_eq!(res.status.code(), Some(1));
    let err = stderr_error(&res);
    assert_eq!(err["kind"], "input");
    assert_eq!(err["code"], "io");
    assert!(err["message"].as_str().unwrap().contains("employment.csv"), "{err}");
    assert!(!out.path().join("exposure_report.json").exists());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let res = exposure(&["compute", "--no-such-flag"]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(stderr_error(&res)["code"], "usage");
}

#[test]
fn bad_policy_value_is_rejected() {
    let out = tempfile::tempdir().unwrap();
    let res = exposure(&[
        "--data",
        fixture().to_str().unwrap(),
        "--output",
        out.path().to_str().unwrap(),
        "--weight-policy",
        "bogus",
        "compute",
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(stderr_error(&res)["kind"], "input");
}

#[test]
fn help_exits_zero() {
    assert!(exposure(&["--help"]).status.success());
}

#[test]
fn identical_external_tiers_give_full_agreement() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let d = fixture();
    run_ok(&["--data", d.to_str().unwrap(), "--output", o, "plotdata"]);
    // reuse our own index tiers as the external ranking
    let mut tiers = String::from("state,tier\n");
    for row in csv_rows(&out.path().join("tiers.csv")) {
        tiers.push_str(&format!("{},{}\n", row[0], row[1]));
    }
    fs::write(out.path().join("ext.csv"), tiers).unwrap();
    let cfg = format!(
        "data = {:?}\n[inputs]\nexternal_tiers = {:?}\n",
        d.to_str().unwrap(),
        out.path().join("ext.csv").to_str().unwrap()
    );
    fs::write(out.path().join("run.toml"), cfg).unwrap();
    run_ok(&[
        "--config",
        out.path().join("run.toml").to_str().unwrap(),
        "--output",
        o,
        "validate",
    ]);
    let report = read_json(&out.path().join("validation_report.json"));
    assert_eq!(report["tiers"]["agreement"]["overall"], 1.0);
}

#[test]
fn metric_regressed_on_itself_is_perfect() {
    // state_metrics whose gdp column equals the iceberg index
    let data = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(fixture()).unwrap() {
        let p = entry.unwrap().path();
        fs::copy(&p, data.path().join(p.file_name().unwrap())).unwrap();
    }
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    run_ok(&["--data", data.path().to_str().unwrap(), "--output", o, "plotdata"]);
    let metrics_path = data.path().join("state_metrics.csv");
    let text = fs::read_to_string(&metrics_path).unwrap();
    let header = text.lines().next().unwrap().to_string();
    let cols: Vec<&str> = header.split(',').collect();
    let gdp = cols.iter().position(|c| *c == "gdp").unwrap();
    let scatter: std::collections::BTreeMap<String, String> = csv_rows(&out.path().join("scatter.csv"))
        .into_iter()
        .map(|r| (r[0].clone(), r[1].clone()))
        .collect();
    let mut rewritten = header.clone() + "\n";
    for line in text.lines().skip(1) {
        let mut f: Vec<String> = line.split(',').map(str::to_string).collect();
        f[gdp] = scatter[&f[0]].clone();
        rewritten.push_str(&f.join(","));
        rewritten.push('\n');
    }
    fs::write(&metrics_path, rewritten).unwrap();
    run_ok(&["--data", data.path().to_str().unwrap(), "--output", o, "validate"]);
    let report = read_json(&out.path().join("validation_report.json"));
    let row = report["regressions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["metric"] == "gdp" && r["index_scope"] == "all")
        .unwrap();
    assert!((row["r2"].as_f64().unwrap() - 1.0).abs() < 1e-12, "{row}");
}

#[test]
fn plot_tables_agree_with_compute() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let d = fixture();
    run_ok(&["--data", d.to_str().unwrap(), "--output", o, "compute"]);
    run_ok(&["--data", d.to_str().unwrap(), "--output", o, "plotdata"]);
    let report = read_json(&out.path().join("exposure_report.json"));
    let states: Vec<&Value> = report["regions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["level"] == "state")
        .collect();
    let choropleth = csv_rows(&out.path().join("choropleth.csv"));
    assert_eq!(choropleth.len(), states.len());
    for row in &choropleth {
        let r = states
            .iter()
            .find(|r| r["id"] == row[0].as_str() && r["scope"] == row[1].as_str())
            .unwrap();
        assert_eq!(row[2].parse::<f64>().unwrap(), r["index"].as_f64().unwrap());
    }
    let n_states = csv_rows(&d.join("state_metrics.csv")).len();
    assert_eq!(csv_rows(&out.path().join("scatter.csv")).len(), n_states);
    assert_eq!(csv_rows(&out.path().join("tiers.csv")).len(), n_states);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "data = {:?}\noutput = \"from-config\"\nweight_policy = \"level\"\nreduction = \"boolean\"\ntau = 0.6\n",
        fixture().to_str().unwrap()
    );
    fs::write(dir.path().join("run.toml"), cfg).unwrap();
    let flag_out = dir.path().join("from-flag");
    run_ok(&[
        "--config",
        dir.path().join("run.toml").to_str().unwrap(),
        "--output",
        flag_out.to_str().unwrap(),
        "--weight-policy",
        "importance",
        "compute",
    ]);
    assert!(!dir.path().join("from-config").exists());
    let m = read_json(&flag_out.join("exposure_report.json"))["metadata"].clone();
    assert_eq!(m["weight_policy"], "importance");
    assert_eq!(m["reduction"]["policy"], "boolean");
    assert_eq!(m["reduction"]["tau"], 0.6);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "wieght_policy = \"level\"\n").unwrap();
    let res = exposure(&["--config", dir.path().join("run.toml").to_str().unwrap(), "compute"]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(stderr_error(&res)["kind"], "input");
}
