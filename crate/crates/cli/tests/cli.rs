use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn lgnkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgnkit"))
        .args(args)
        .current_dir(dir)
        .env_remove("LGNKIT_OUT_DIR")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lgnkit(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn mnist() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-10k")
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(lgnkit(d.path(), &[]).status.code(), Some(2));
    assert_eq!(lgnkit(d.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(lgnkit(d.path(), &["estimate"]).status.code(), Some(2));
    assert_eq!(lgnkit(d.path(), &["encode", "--images", "x", "--labels", "y", "--bits", "9"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let d = tempfile::tempdir().unwrap();
    let out = lgnkit(d.path(), &["estimate", "--spec", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let spec = write(d.path(), "spec.json", &serde_json::json!({"bit_depth": 1, "layer_width": 8000, "depth": 3, "class_count": 10, "input_bits": 784}));
    let cal = write(d.path(), "cal.json", &serde_json::json!({"k": 9}));
    assert_eq!(lgnkit(d.path(), &["estimate", "--spec", &spec, "--cal", &cal]).status.code(), Some(1));
}

#[test]
fn estimate_writes_a_consistent_report() {
    let d = tempfile::tempdir().unwrap();
    let spec = write(
        d.path(),
        "spec.json",
        &serde_json::json!({"bit_depth": 2, "layer_width": 8000, "depth": 3, "end_fraction": 0.5, "class_count": 10, "input_bits": 1568}),
    );
    ok(d.path(), &["estimate", "--spec", &spec]);
    let e = json(d.path().join("estimate.json"));
    let n = |k: &str| e[k].as_u64().unwrap();
    assert_eq!(n("lut_total"), n("lut_input") + n("lut_logic") + n("lut_sum") + n("lut_delta"));
    for k in ["ff_total", "cycles", "power_watts", "fits_slr", "fits_device", "sections"] {
        assert!(!e[k].is_null(), "{k}");
    }
}

#[test]
fn out_dir_comes_from_the_environment() {
    let d = tempfile::tempdir().unwrap();
    let target = d.path().join("elsewhere");
    std::fs::create_dir(&target).unwrap();
    let spec = write(d.path(), "spec.json", &serde_json::json!({"bit_depth": 1, "layer_width": 1000, "depth": 1, "class_count": 10, "input_bits": 784}));
    let out = Command::new(env!("CARGO_BIN_EXE_lgnkit"))
        .args(["estimate", "--spec", &spec])
        .current_dir(d.path())
        .env("LGNKIT_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("estimate.json").exists());
    assert!(!d.path().join("estimate.json").exists());
}

#[test]
fn search_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let budget = |lut: u64| serde_json::json!({"lut_budget": lut, "ff_budget": 2000000, "max_cycles": 12, "input_bits": 784, "require_single_slr": true});
    let cfg = write(d.path(), "cfg.json", &serde_json::json!({"samples": 64, "chains": 2, "steps_per_chain": 16}));
    let none = write(d.path(), "none.json", &budget(1));
    let out = lgnkit(d.path(), &["search", "--budget", &none, "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    let s = json(d.path().join("search.json"));
    assert_eq!(s["status"], "none_feasible");
    assert_eq!(s["nearest_misses"].as_array().unwrap().len(), 5);
    let slr = write(d.path(), "slr.json", &budget(297_333));
    ok(d.path(), &["search", "--budget", &slr, "--config", &cfg, "--seed", "4"]);
    let s = json(d.path().join("search.json"));
    assert_eq!(s["status"], "found");
    let pareto = s["pareto"].as_array().unwrap();
    assert!(!pareto.is_empty());
    assert!(pareto.iter().all(|c| c["estimate"]["lut_total"].as_u64().unwrap() <= 297_333 && c["estimate"]["cycles"].as_u64().unwrap() <= 12));
    let csv = std::fs::read_to_string(d.path().join("search.csv")).unwrap();
    assert_eq!(csv.lines().count(), pareto.len() + 1);
}

#[test]
fn grid_is_resumable_and_reports() {
    let d = tempfile::tempdir().unwrap();
    let specs: Vec<Value> = [(8000, None), (8000, Some(0.5)), (16000, None), (16000, Some(0.75))]
        .iter()
        .map(|&(w, f)| serde_json::json!({"bit_depth": 1, "layer_width": w, "depth": 3, "end_fraction": f, "class_count": 10, "input_bits": 784}))
        .collect();
    let specs = write(d.path(), "specs.json", &Value::Array(specs));
    let first = ok(d.path(), &["grid", "--specs", &specs]);
    assert!(first.starts_with("4 rows (4 computed, 0 reused)"), "{first}");
    let again = ok(d.path(), &["grid", "--specs", &specs]);
    assert!(again.starts_with("4 rows (0 computed, 4 reused)"), "{again}");
    assert_eq!(std::fs::read_dir(d.path().join("rows")).unwrap().count(), 4);
    let cal = write(d.path(), "cal.json", &serde_json::json!({"delta_const": 10.0}));
    let changed = ok(d.path(), &["grid", "--specs", &specs, "--cal", &cal]);
    assert!(changed.starts_with("4 rows (4 computed, 0 reused)"), "{changed}");
    let csv = std::fs::read_to_string(d.path().join("grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let table = ok(d.path(), &["report", "--grid", d.path().join("grid.json").to_str().unwrap()]);
    assert!(table.starts_with("front"));
    for f in ["caps.txt", "caps.json", "correlation.csv", "correlation-baseline-end.csv"] {
        assert!(d.path().join(f).exists(), "{f}");
    }
}

#[test]
fn standard_grid_row_count() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(d.path(), &["grid", "--table1"]);
    assert!(out.starts_with("1472 rows"), "{out}");
    assert_eq!(json(d.path().join("grid.json"))["rows"].as_array().unwrap().len(), 1472);
    assert_eq!(std::fs::read_to_string(d.path().join("grid.csv")).unwrap().lines().count(), 1473);
}

#[test]
fn unmatched_rows_warn() {
    let d = tempfile::tempdir().unwrap();
    let specs = serde_json::json!([
        {"bit_depth": 1, "layer_width": 8000, "depth": 3, "class_count": 10, "input_bits": 784},
        {"bit_depth": 1, "layer_width": 8000, "depth": 3, "end_fraction": 0.5, "class_count": 10, "input_bits": 784},
        {"bit_depth": 1, "layer_width": 9000, "depth": 3, "end_fraction": 0.5, "class_count": 10, "input_bits": 784}
    ]);
    let specs = write(d.path(), "specs.json", &specs);
    ok(d.path(), &["grid", "--specs", &specs]);
    let out = lgnkit(d.path(), &["report", "--grid", "grid.json"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no baseline for L_W=9000"));
}

#[test]
fn encode_train_compile_simulate() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let images = mnist().join("images-idx3-ubyte");
    let labels = mnist().join("labels-idx1-ubyte");
    ok(p, &["encode", "--images", images.to_str().unwrap(), "--labels", labels.to_str().unwrap(), "--bits", "2", "--limit", "300"]);
    let cache = std::fs::read(p.join("mnist-b2.bin")).unwrap();
    assert_eq!(&cache[..4], b"LGNB");
    assert_eq!(u32::from_le_bytes(cache[4..8].try_into().unwrap()), 1);
    assert_eq!(u32::from_le_bytes(cache[8..12].try_into().unwrap()), 300);
    assert_eq!(u32::from_le_bytes(cache[12..16].try_into().unwrap()), 1568);
    assert_eq!(cache.len(), 20 + 300 + 300 * 196);

    ok(p, &["train", "--data", "mnist-b2.bin", "--width", "300", "--depth", "2", "--epochs", "2", "--folds", "3", "--max-fold-runs", "1"]);
    let summary = json(p.join("train-summary.json"));
    assert!(summary["test_hard_accuracy"].as_f64().unwrap() > 0.1);
    ok(p, &["compile", "--model", "model.json", "--module-name", "digits"]);
    assert!(std::fs::read_to_string(p.join("digits.v")).unwrap().contains("module digits ("));
    ok(p, &["simulate", "--netlist", "netlist.json", "--data", "mnist-b2.bin", "--model", "model.json", "--trace", "5"]);
    let sim = json(p.join("simulation.json"));
    assert_eq!(sim["model_mismatches"], 0);
    assert_eq!(sim["samples"], 300);
    assert!(std::fs::read_to_string(p.join("trace.txt")).unwrap().starts_with("# lgnkit trace v1\n"));
    ok(p, &["estimate", "--netlist", "netlist.json"]);
    let e = json(p.join("estimate.json"));
    assert_eq!(e["cycles"], sim["latency_cycles"]);

    // a model trained on another width does not fit this data
    ok(p, &["encode", "--images", images.to_str().unwrap(), "--labels", labels.to_str().unwrap(), "--bits", "1", "--limit", "50"]);
    assert_eq!(lgnkit(p, &["simulate", "--netlist", "netlist.json", "--data", "mnist-b1.bin"]).status.code(), Some(1));
}
