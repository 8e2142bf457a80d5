use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn manifests() -> PathBuf {
    root().join("manifests")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foldreg")).args(args).output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn envelope_ok(v: &Value, command: &str) {
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], command);
    assert_eq!(v["manifest_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn analyze_ii2_and_center() {
    let o = run(&["analyze", path(&manifests().join("systems/ii2.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    envelope_ok(&v, "analyze");
    let ff = &v["result"]["fold_fold"];
    assert_eq!(ff["visibility"], "II");
    assert_eq!(ff["kind"], "attracting-focus");
    assert!(ff["a"].as_f64().unwrap() < 0.0);

    let o = run(&["analyze", path(&manifests().join("systems/center.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let ff = &json(&o)["result"]["fold_fold"];
    assert_eq!(ff["visibility"], "II");
    assert_eq!(ff["kind"], "center");
}

#[test]
fn analyze_sliding_window_and_failures() {
    let o = run(&["analyze", path(&manifests().join("systems/ii2.json")), "--alpha", "0.2"]);
    assert_eq!(o.status.code(), Some(2));
    let s = &json(&o)["result"]["regions"]["sliding"][0];
    assert!((s[0].as_f64().unwrap() - 1.0).abs() < 1e-6 && (s[1].as_f64().unwrap() - 1.2).abs() < 1e-6);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ \"schema_version\": 1,").unwrap();
    let o = run(&["analyze", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));
    assert_eq!(run(&["analyze", "/nonexistent/system.json"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn build_phi_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (out, csv) = (dir.path().join("phi.json"), dir.path().join("phi.csv"));
    let o = run(&["build-phi", "--zeros", "0.04,0.07", "--delta", "0.01", "--nu", "0.1", "--out", path(&out), "--csv", path(&csv)]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    envelope_ok(&v, "build-phi");
    assert_eq!(v["result"]["certificate"]["passed"], true);
    let text = fs::read_to_string(&csv).unwrap();
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("# foldreg-csv v1 command=build-phi"));
    assert!(first.contains(v["manifest_sha256"].as_str().unwrap()));
    assert_eq!(text.lines().nth(1), Some("x,phi,dphi,d2phi"));
    assert_eq!(text.lines().count(), 2 + 401);

    // The output is accepted as a φ spec and the planted zeros come back.
    let o = run(&["zeros", path(&manifests().join("systems/center.json")), "--phi", path(&out), "--kind", "closed-form", "--window", "0.001", "0.09"]);
    assert_eq!(o.status.code(), Some(0));
    let z = &json(&o)["result"]["zero_set"]["zeros"];
    let locs: Vec<f64> = z.as_array().unwrap().iter().map(|z| z["location"].as_f64().unwrap()).collect();
    assert_eq!(locs.len(), 2);
    assert!((locs[0] - 0.04).abs() < 1e-6 && (locs[1] - 0.07).abs() < 1e-6);

    assert_eq!(run(&["build-phi", "--delta", "0.01", "--nu", "0.1"]).status.code(), Some(0));
    assert_eq!(run(&["build-phi", "--zeros", "0.04,0.07", "--delta", "1e4", "--nu", "0.1"]).status.code(), Some(2));
    assert_eq!(run(&["build-phi", "--zeros", "0.07,0.04", "--delta", "0.01", "--nu", "0.1"]).status.code(), Some(1));
}

#[test]
fn check_and_sdi() {
    let center = manifests().join("systems/center.json");
    let o = run(&["check-assumptions", path(&center)]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    envelope_ok(&v, "check-assumptions");
    assert_eq!(v["result"]["assumptions"]["a0"], true);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sdi.csv");
    let o = run(&["sdi", path(&center), "--kind", "terminal", "--n", "21", "--csv", path(&csv)]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    for row in v["result"]["samples"].as_array().unwrap() {
        assert!(row[1].as_f64().unwrap().abs() < 1e-10, "{row}");
    }
    assert!(fs::read_to_string(&csv).unwrap().starts_with("# foldreg-csv v1 command=sdi"));
    let o = run(&["sdi", path(&manifests().join("systems/ii2.json")), "--kind", "closed-form"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cycles_symmetric_null_and_floor() {
    let center = manifests().join("systems/center.json");
    let o = run(&["cycles", path(&center), "--eps", "0.05", "--window", "1.2", "1.9", "--grid", "10", "--tune", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    envelope_ok(&v, "cycles");
    assert!(v["result"]["alpha_t"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(v["result"]["cycles"].as_array().unwrap().len(), 0);
    assert_eq!(v["result"]["degenerate"], true);
    let o = run(&["cycles", path(&center), "--eps", "0.01", "--window", "1.2", "1.9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["cycles", path(&center), "--eps", "0.05", "--section", "small", "--window", "1.2", "1.9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pipeline_small_cycles_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let m = manifests().join("ii2_small_k1.json");
    for d in [&a, &b] {
        let o = run(&["pipeline", path(&m), "--out-dir", path(d)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["report.json", "sdi.csv", "displacement_0.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let v: Value = serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    envelope_ok(&v, "pipeline");
    let r = &v["result"];
    assert_eq!(r["zeros_section"]["zeros"].as_array().unwrap().len(), 1);
    let fps = r["rows"][0]["fixed_points"].as_array().unwrap();
    assert!(fps.len() >= 2);
    for y in fps {
        let y = y.as_f64().unwrap();
        assert!(y > 0.008 && y < 0.03);
    }
    let hash = v["manifest_sha256"].as_str().unwrap();
    assert!(fs::read_to_string(a.join("displacement_0.csv")).unwrap().lines().next().unwrap().contains(hash));
}

#[test]
fn pipeline_center_k1() {
    let o = run(&["pipeline", path(&manifests().join("center_k1.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &json(&o)["result"];
    let row = r["rows"].as_array().unwrap().iter().find(|r| r["eps"] == 0.05).unwrap();
    let m: Vec<f64> = row["multipliers"].as_array().unwrap().iter().map(|m| m.as_f64().unwrap()).collect();
    assert!(m.len() >= 2 && m.iter().any(|&x| x < 1.0) && m.iter().any(|&x| x > 1.0), "{m:?}");
    assert_eq!(r["monotone"], true);
}

#[test]
fn pipeline_guards() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("systems")).unwrap();
    fs::copy(manifests().join("systems/center.json"), dir.path().join("systems/center.json")).unwrap();
    let text = fs::read_to_string(manifests().join("center_k1.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["eps"] = serde_json::json!([0.05, 0.01]);
    let low = dir.path().join("low.json");
    fs::write(&low, v.to_string()).unwrap();
    let o = run(&["pipeline", path(&low)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("floor"));

    v["eps"] = serde_json::json!([0.05]);
    v["system_sha256"] = serde_json::json!("00");
    let bad = dir.path().join("hash.json");
    fs::write(&bad, v.to_string()).unwrap();
    assert_eq!(run(&["pipeline", path(&bad)]).status.code(), Some(1));

    v.as_object_mut().unwrap().remove("system_sha256");
    v["colour"] = serde_json::json!("blue");
    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, v.to_string()).unwrap();
    assert_eq!(run(&["pipeline", path(&unknown)]).status.code(), Some(1));
}

#[test]
fn sweep_finds_the_dodging_fold() {
    let sys = manifests().join("systems/dodging.json");
    let o = run(&[
        "sweep", path(&sys), "--eps", "0.05", "--grid", "60", "--tune", "1", "--tune-range", "-0.5", "0.5",
        "--anchor-heights", "0.015", "0.009", "--offsets", "-2e-5", "4e-5", "7",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    envelope_ok(&v, "sweep");
    let fold = &v["result"]["saddle_node"]["fold"];
    let yc = fold["y_c"].as_f64().unwrap();
    assert!((yc - 0.02666).abs() < 0.15 * 0.02666, "{yc}");
    assert!((fold["multiplier"].as_f64().unwrap() - 1.0).abs() < 0.1);
}
