use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.json"))
}

fn gdifs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdifs")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn line_system(ratios_translations: &[(f64, f64)]) -> Value {
    let edges: Vec<Value> = ratios_translations
        .iter()
        .map(|(r, t)| json!({"source": 0, "target": 0, "map": {"ratio": r, "translation": [t]}}))
        .collect();
    json!({"version": "v1", "kind": "gdifs", "ambient_dim": 1, "vertices": 1, "edges": edges})
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn dim_of_cantor() {
    let o = gdifs(&["dim", "--config", s(&fixture("cantor")), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let value = v["value"].as_f64().unwrap();
    let (lo, hi) = (v["bracket"][0].as_f64().unwrap(), v["bracket"][1].as_f64().unwrap());
    assert!((value - 2f64.ln() / 3f64.ln()).abs() < 1e-10);
    assert!(hi - lo <= 1e-10);
}

#[test]
fn dim_of_full_shift_with_halves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "version": "v1", "kind": "sft", "ambient_dim": 1, "alphabet": 2,
        "matrix": [[1, 1], [1, 1]],
        "maps": [{"ratio": 0.5, "translation": [0.0]}, {"ratio": 0.5, "translation": [0.5]}]
    });
    let p = write_json(dir.path(), "full.json", &cfg);
    let o = gdifs(&["dim", "--config", s(&p), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn disconnected_graph_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "version": "v1", "kind": "gdifs", "ambient_dim": 1, "vertices": 2,
        "edges": [
            {"source": 0, "target": 0, "map": {"ratio": 0.3, "translation": [0.0]}},
            {"source": 1, "target": 1, "map": {"ratio": 0.3, "translation": [0.5]}}
        ]
    });
    let p = write_json(dir.path(), "split.json", &cfg);
    let o = gdifs(&["dim", "--config", s(&p)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("strongly connected"));
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_json(dir.path(), "bad.json", &line_system(&[(0.3, 0.0), (1.2, 0.5)]));
    let o = gdifs(&["dim", "--config", s(&p)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("edges[1].map"), "{}", stderr(&o));
}

#[test]
fn dense_cantor_certificate_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    let cfg = fixture("cantor");
    let o = gdifs(&["approximate", "--config", s(&cfg), "--epsilon", "0.05", "--mode", "dense", "--out", s(&cert)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&cert).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!(v["achieved_dimension"]["value"].as_f64().unwrap() > 0.5809);
    for key in ["version", "input_hash", "mode", "j", "epsilon", "ssifs", "separation", "group_report", "timings"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["ssifs"][0]["provenance_edges"].is_array());

    let o = gdifs(&["verify", "--certificate", s(&cert), "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));

    // Lossless round trip: canonical forms agree byte for byte.
    let canon = |t: &str| serde_json::to_string(&serde_json::from_str::<Value>(t).unwrap()).unwrap();
    let again = serde_json::to_string_pretty(&v).unwrap();
    assert_eq!(canon(&again), canon(&text));
    assert_eq!(serde_json::from_str::<Value>(&again).unwrap(), v);
}

#[test]
fn tampered_certificates_exit_4_naming_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("rank1_pair");
    let cert = dir.path().join("cert.json");
    let o = gdifs(&["approximate", "--config", s(&cfg), "--epsilon", "0.1", "--out", s(&cert)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();

    let mut ratio = v.clone();
    let r = ratio["ssifs"][0]["ratio"].as_f64().unwrap();
    ratio["ssifs"][0]["ratio"] = json!(r * (1.0 + 1e-3));
    let mut gap = v.clone();
    let g = gap["separation"][0]["gap"].as_f64().unwrap();
    gap["separation"][0]["gap"] = json!(g * 10.0);
    let mut prov = v.clone();
    let edges = prov["ssifs"][0]["provenance_edges"].as_array().unwrap().clone();
    let mut doubled = edges.clone();
    doubled.extend(edges);
    prov["ssifs"][0]["provenance_edges"] = json!(doubled);

    for (name, doc, check) in [("ratio", ratio, "provenance"), ("gap", gap, "separation"), ("prov", prov, "provenance")] {
        let p = write_json(dir.path(), &format!("{name}.json"), &doc);
        let o = gdifs(&["verify", "--certificate", s(&p), "--config", s(&cfg)]);
        assert_eq!(o.status.code(), Some(4), "{name}: {}", stderr(&o));
        assert!(stderr(&o).contains(&format!("verification failed at {check}")), "{name}: {}", stderr(&o));
    }
}

#[test]
fn exact_mode_on_infinite_group_exits_3() {
    let o = gdifs(&[
        "approximate",
        "--config",
        s(&fixture("planar_irrational")),
        "--mode",
        "exact",
        "--target-rotation",
        "0",
        "--epsilon",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("group not finite"));
}

#[test]
fn uniform_mode_records_ratio_and_distance() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("u.json");
    let o = gdifs(&[
        "approximate",
        "--config",
        s(&fixture("cantor")),
        "--mode",
        "uniform",
        "--target-rotation",
        "[1]",
        "--epsilon",
        "0.1",
        "--out",
        s(&cert),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    let ratios: Vec<f64> = v["ssifs"].as_array().unwrap().iter().map(|m| m["ratio"].as_f64().unwrap()).collect();
    assert!(ratios.iter().all(|r| *r == ratios[0]));
    assert!(v["group_report"]["max_distance_to_target"].as_f64().unwrap() < 0.1);
}

#[test]
fn uniform_mode_without_target_is_an_input_error() {
    let o = gdifs(&["approximate", "--config", s(&fixture("cantor")), "--mode", "uniform", "--epsilon", "0.1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn render_is_deterministic_p6() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.ppm");
    let b = dir.path().join("b.ppm");
    let cfg = fixture("planar_three");
    for out in [&a, &b] {
        let o = gdifs(&["render", "--config", s(&cfg), "--out", s(out), "--width", "96", "--height", "64", "--seed", "3"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert!(bytes.starts_with(b"P6\n96 64\n255\n"));
    assert_eq!(bytes.len(), b"P6\n96 64\n255\n".len() + 3 * 96 * 64);
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let o = gdifs(&["render", "--config", s(&cfg), "--out", s(&a), "--iterations", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn log_ratio_flags_only_incommensurable_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let half = write_json(dir.path(), "half.json", &line_system(&[(0.5, 0.0), (0.5, 0.5)]));
    let third = write_json(dir.path(), "third.json", &line_system(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)]));
    let quarter = write_json(dir.path(), "quarter.json", &line_system(&[(0.25, 0.0), (0.25, 0.75)]));
    let flagged = |a: &Path, b: &Path| -> usize {
        let o = gdifs(&["log-ratio", "--config-a", s(a), "--config-b", s(b), "--max-length", "3"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["certifying"], json!(false));
        v["flagged"].as_array().unwrap().len()
    };
    assert_eq!(flagged(&half, &third), 9);
    assert_eq!(flagged(&quarter, &half), 0);
    assert_eq!(flagged(&half, &half), 0);
}

#[test]
fn thread_cap_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("three_cycle");
    let mut outs = Vec::new();
    for threads in ["1", "4"] {
        let p = dir.path().join(format!("t{threads}.json"));
        let o = Command::new(env!("CARGO_BIN_EXE_gdifs"))
            .env("GDIFS_THREADS", threads)
            .args(["approximate", "--config", s(&cfg), "--epsilon", "0.1", "--out", s(&p)])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        v["timings"] = json!({});
        outs.push(v);
    }
    assert_eq!(outs[0], outs[1]);
}
