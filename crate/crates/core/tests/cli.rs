use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn inmed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inmed")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const DEMO: &str = r#"{
    "resolution": 33,
    "potential": { "expression": "2" },
    "boundary": "cos(x)*cos(y)",
    "family": { "random_bumps": 0, "bumps": [{ "center": [0.5, 0.5], "width": 0.2 }] },
    "threeball": { "samples": 8, "held_out": 2, "balls_per_sample": 2, "r_min": 0.06, "r_max": 0.1 },
    "seed": 3
}"#;

fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    inmed(&args)
}

fn error_of(o: &Output) -> (String, i32) {
    let v: Value =
        serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&o.stderr)));
    (v["error"]["code"].as_str().unwrap().to_string(), o.status.code().unwrap())
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn forward_demo_matches_manufactured_intensity() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "demo.json", DEMO);
    let out = tmp.path().join("fwd");
    let o = run("forward", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("I.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_sha256="));
    assert_eq!(lines.next().unwrap(), "x,y,value");
    let mut worst: f64 = 0.0;
    for l in lines {
        let c: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        worst = worst.max((c[2] - 2.0 * (c[0].cos() * c[1].cos()).powi(2)).abs());
    }
    assert!(worst < 2e-3, "{worst}");
    let s = summary(&out);
    assert_eq!(s["seed"], 3);
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(s["result"]["report"]["d1"]["member"], true);

    let again = tmp.path().join("fwd2");
    assert!(run("forward", &cfg, &again, &["--workers", "1"]).status.success());
    assert_eq!(csv_files(&out), csv_files(&again));
}

#[test]
fn zero_boundary_data_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "zero.json", r#"{ "resolution": 17, "boundary": "0" }"#);
    let o = run("forward", &cfg, &tmp.path().join("o"), &[]);
    assert_eq!(error_of(&o), ("H_IDENTICALLY_ZERO".to_string(), 2));
}

#[test]
fn schema_violations_are_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", r#"{ "resolution": "fine", "colour": 1, "seed": -4 }"#);
    let o = run("forward", &cfg, &tmp.path().join("o"), &[]);
    assert_eq!(error_of(&o).0, "CONFIG_ERROR");
    assert_eq!(o.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&o.stderr);
    for field in ["resolution", "colour", "seed"] {
        assert!(msg.contains(field), "{msg}");
    }
    let missing = inmed(&["forward", "--config", tmp.path().join("none.json").to_str().unwrap()]);
    assert_eq!(error_of(&missing), ("MISSING_INPUT".to_string(), 4));
}

#[test]
fn reconstruct_from_forward_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "demo.json", DEMO);
    let fwd = tmp.path().join("fwd");
    assert!(run("forward", &cfg, &fwd, &[]).status.success());
    let rec = tmp.path().join("rec");
    let o = run("reconstruct", &cfg, &rec, &["--data", fwd.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&rec);
    assert!(s["result"]["v_relative_error"].as_f64().unwrap() <= 0.01);
    assert!(rec.join("iterations.csv").exists());

    let other = tmp.path().join("rec_seed");
    let o = run("reconstruct", &cfg, &other, &["--data", fwd.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(error_of(&o), ("CONFIG_HASH_MISMATCH".to_string(), 2));

    std::fs::remove_file(fwd.join("J.bin")).unwrap();
    let o = run("reconstruct", &cfg, &tmp.path().join("rec2"), &["--data", fwd.to_str().unwrap()]);
    assert_eq!(error_of(&o), ("MISSING_INPUT".to_string(), 4));
}

#[test]
fn reconstruct_noise_sweep_and_non_convergence() {
    let tmp = tempfile::tempdir().unwrap();
    let noisy = DEMO.replacen("\"seed\": 3", "\"seed\": 3, \"noise\": { \"levels\": [0.001, 0.01] }", 1);
    let cfg = write_config(tmp.path(), "noisy.json", &noisy);
    let out = tmp.path().join("noisy");
    assert!(run("reconstruct", &cfg, &out, &[]).status.success());
    let text = std::fs::read_to_string(out.join("noise.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);

    let stubborn = DEMO.replacen("\"seed\": 3", "\"seed\": 3, \"reconstruction\": { \"max_iters\": 2 }", 1);
    let cfg = write_config(tmp.path(), "stubborn.json", &stubborn);
    let out = tmp.path().join("stubborn");
    let o = run("reconstruct", &cfg, &out, &[]);
    assert_eq!(error_of(&o), ("FIXED_POINT_NON_CONVERGENCE".to_string(), 3));
    assert!(out.join("iterations.csv").exists());
}

#[test]
fn stability_summary_has_exponents() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "demo.json", DEMO);
    let out = tmp.path().join("stab");
    let o = run("stability", &cfg, &out, &["--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    let regimes = s["result"]["regimes"].as_array().unwrap();
    assert_eq!(regimes.len(), 4);
    for r in regimes {
        assert!(r["mu_fit"].as_f64().unwrap() > 0.0, "{r}");
    }
    for name in ["interior", "global", "subdomain", "vanishing_h"] {
        assert!(out.join(format!("stability_{name}.csv")).exists());
        assert!(out.join(format!("plot_{name}.csv")).exists());
    }
}

#[test]
fn frequency_ball_leaving_domain() {
    let tmp = tempfile::tempdir().unwrap();
    let body =
        r#"{ "resolution": 33, "frequency": { "samples": 1, "centers": [[0.05, 0.5]] }, "radii": [0.02, 0.04, 0.08] }"#;
    let cfg = write_config(tmp.path(), "edge.json", body);
    let o = run("frequency", &cfg, &tmp.path().join("f"), &[]);
    assert_eq!(error_of(&o), ("BALL_OUTSIDE_DOMAIN".to_string(), 2));
}

#[test]
fn chain_on_convex_domain() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "demo.json", DEMO);
    let out = tmp.path().join("chain");
    let o = run("chain", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["result"]["bound_holds"], true);
    assert!((s["result"]["cone"]["mu"].as_f64().unwrap() - 0.8).abs() < 1e-15);
}

#[test]
fn threeball_and_interp_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "demo.json", DEMO);
    let tb = tmp.path().join("tb");
    assert!(run("threeball", &cfg, &tb, &[]).status.success());
    let s = summary(&tb)["result"].clone();
    let sv = s["s"].as_f64().unwrap();
    assert!(sv > 0.0 && sv < 1.0);
    assert_eq!(s["held_out_samples"], 2);
    let ip = tmp.path().join("ip");
    assert!(run("interp", &cfg, &ip, &[]).status.success());
    let mu = summary(&ip)["result"]["mu"].as_f64().unwrap();
    assert!(mu > 0.0 && mu < 1.0);
}
