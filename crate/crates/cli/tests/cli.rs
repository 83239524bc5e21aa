//! End-to-end runs of the `qplab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qplab_core::eigen::Boundary;
use qplab_core::gaps::{GapReport, PreGap, GAP_REPORT_SCHEMA};

fn qplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qplab")).args(args).env_remove("QPLAB_THREADS").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn lyapunov_example_writes_header() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = qplab(&["lyapunov", "--lambda", "3", "--omega", "golden", "--N", "10000", "--grid", "1024", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("lyapunov.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("E,N,y,L,spread"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 21);
    // Herman: L ≥ log λ everywhere
    for r in rows {
        let l: f64 = r.split(',').nth(3).unwrap().parse().unwrap();
        assert!(l >= 3f64.ln() - 0.05, "{r}");
    }
    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["command"], "lyapunov");
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["code_version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn verify_passes_on_clean_build() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qplab(&["verify", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("verify.csv")).unwrap();
    assert!(text.starts_with("check,samples,max_error,tolerance,status\n"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",pass")), "{text}");
    assert_eq!(manifest(tmp.path())["error"], serde_json::Value::Null);
}

#[test]
fn malformed_config_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    for (i, body) in ["N = 200, 100\n", "tau = -1\n", "colour = blue\n", "grid\n", "omega = 1.5\n"].iter().enumerate() {
        fs::write(&cfg, body).unwrap();
        let out = tmp.path().join(format!("out{i}"));
        let o = qplab(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{body}");
        assert!(!out.exists(), "{body}");
    }
    let out = tmp.path().join("flag");
    assert_eq!(code(&qplab(&["lyapunov", "--N", "0", "--out", out.to_str().unwrap()])), 2);
    assert_eq!(code(&qplab(&["lyapunov", "--set", "lambda", "--out", out.to_str().unwrap()])), 2);
    assert_eq!(code(&qplab(&["no-such-command"])), 2);
    assert!(!out.exists());
}

#[test]
fn flags_override_file_and_set() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("a.cfg");
    fs::write(&cfg, "lambda = 2\nN = 30\nE = 0\ngrid = 128\n").unwrap();
    let out = tmp.path().join("out");
    let o = qplab(&["lyapunov", "--config", cfg.to_str().unwrap(), "--set", "lambda=2.5", "--set", "N=40", "--lambda", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["config"]["potential_spec"], "amo(lambda=3)");
    assert_eq!(m["config"]["scales"], serde_json::json!([40]));
    assert_eq!(m["config"]["grid"], 128);
}

#[test]
fn numerical_failure_names_the_error() {
    let tmp = tempfile::tempdir().unwrap();
    // no spectrum above the hull: the scan finds no resonance to follow
    let o = qplab(&["pregap", "--set", "interval=9,10", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let m = manifest(tmp.path());
    assert_eq!(m["status"], "error");
    assert_eq!(m["error"]["name"], "NotFound");
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    for cmd in ["spectrum", "zeros", "rellich"] {
        let runs: Vec<_> = ["1", "8"]
            .iter()
            .map(|t| {
                let out = tmp.path().join(format!("{cmd}{t}"));
                let o = qplab(&[cmd, "--N", "12,24", "--E=-1.5,0.3", "--grid", "128", "--threads", t, "--out", out.to_str().unwrap()]);
                assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
                data_files(&out)
            })
            .collect();
        assert!(!runs[0].is_empty());
        assert_eq!(runs[0], runs[1], "{cmd}");
    }
}

#[test]
fn env_threads_are_honoured_and_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("a");
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_qplab"))
            .args(["lyapunov", "--N", "20", "--E", "0", "--grid", "128", "--out", out.to_str().unwrap()])
            .env("QPLAB_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("zero")), 2);
    assert!(!out.exists());
    assert_eq!(code(&run("3")), 0);
    assert_eq!(manifest(&out)["threads"], 3);
}

fn report(n: i64, gaps: &[(f64, f64)], pregaps: &[(f64, f64)]) -> GapReport {
    GapReport {
        schema: GAP_REPORT_SCHEMA,
        n,
        bc: Boundary::Dirichlet,
        grid: 256,
        hull: (-8.0, 8.0),
        bands: Vec::new(),
        gaps: gaps.to_vec(),
        resonances: Vec::new(),
        pregaps: pregaps
            .iter()
            .map(|&(lo, hi)| PreGap { lo, hi, edges: (lo, hi), x_max: 0.5, x_min: 0.5, scale: n, resonance: None })
            .collect(),
        zero_sequences: Vec::new(),
    }
}

fn write_report(dir: &Path, r: &GapReport) {
    fs::write(dir.join(format!("gaps_N{}.json", r.n)), serde_json::to_string(r).unwrap()).unwrap();
}

fn merge(dir: &Path) -> (i32, serde_json::Value) {
    let o = qplab(&["report-merge", dir.to_str().unwrap()]);
    let g = fs::read_to_string(dir.join("genealogy.json")).map(|t| serde_json::from_str(&t).unwrap()).unwrap_or_default();
    (code(&o), g)
}

#[test]
fn report_merge_single_scale_passes_through() {
    let tmp = tempfile::tempdir().unwrap();
    write_report(tmp.path(), &report(50, &[(1.0, 2.0)], &[(4.6, 4.8)]));
    let (c, g) = merge(tmp.path());
    assert_eq!(c, 0);
    assert_eq!(g["scales"], serde_json::json!([50]));
    let chains = g["chains"].as_array().unwrap();
    assert_eq!(chains.len(), 2);
    assert!(chains.iter().all(|ch| ch["nodes"].as_array().unwrap().len() == 1 && ch["survives"] == true));
}

#[test]
fn report_merge_links_a_surviving_pregap() {
    let tmp = tempfile::tempdir().unwrap();
    write_report(tmp.path(), &report(150, &[], &[(4.62, 4.80)]));
    write_report(tmp.path(), &report(450, &[], &[(4.64, 4.79)]));
    // the alias spelling works too
    let o = qplab(&["report_merge", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let g: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("genealogy.json")).unwrap()).unwrap();
    let chains = g["chains"].as_array().unwrap();
    assert_eq!(chains.len(), 1);
    assert_eq!(chains[0]["kind"], "pregap");
    assert_eq!(chains[0]["nodes"].as_array().unwrap().len(), 2);
    assert_eq!(chains[0]["survives"], true);
}

#[test]
fn report_merge_keeps_disjoint_reports_apart() {
    let tmp = tempfile::tempdir().unwrap();
    write_report(tmp.path(), &report(50, &[(1.0, 2.0)], &[]));
    write_report(tmp.path(), &report(100, &[(3.0, 4.0)], &[]));
    let (c, g) = merge(tmp.path());
    assert_eq!(c, 0);
    let chains = g["chains"].as_array().unwrap();
    assert_eq!(chains.len(), 2);
    assert!(chains.iter().all(|ch| ch["nodes"].as_array().unwrap().len() == 1));
}

#[test]
fn report_merge_rejects_foreign_schema() {
    let tmp = tempfile::tempdir().unwrap();
    write_report(tmp.path(), &report(50, &[(1.0, 2.0)], &[]));
    let mut v = serde_json::to_value(report(100, &[(1.0, 2.0)], &[])).unwrap();
    v["schema"] = serde_json::json!(GAP_REPORT_SCHEMA + 1);
    fs::write(tmp.path().join("gaps_N100.json"), v.to_string()).unwrap();
    let (c, _) = merge(tmp.path());
    assert_eq!(c, 3);
    fs::write(tmp.path().join("gaps_N100.json"), "{\"schema\": 1, \"N\": 100}").unwrap();
    assert_eq!(merge(tmp.path()).0, 3);
    assert!(!tmp.path().join("genealogy.json").exists());
}

#[test]
fn spectrum_then_merge_chains_real_gaps() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qplab(&["spectrum", "--N", "25,50", "--grid", "256", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("spectrum_N50.csv")).unwrap();
    assert!(csv.starts_with("N,kind,lo,hi\n"));
    let (c, g) = merge(tmp.path());
    assert_eq!(c, 0);
    // the two wide central gaps of the λ = 3 spectrum persist
    let long = g["chains"].as_array().unwrap().iter().filter(|ch| ch["nodes"].as_array().unwrap().len() == 2).count();
    assert!(long >= 2, "{g}");
}
