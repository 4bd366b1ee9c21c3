use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coherence_core::bloch::{rabi_curve, DecayConfig, PulseShape};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_coherence"));
    c.env_remove("COHERENCE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn coherence")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn sidecar(path: &Path) -> PathBuf {
    PathBuf::from(format!("{}.json", path.display()))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&[
        "simulate",
        "--duration-ns",
        "2e7",
        "--seed",
        "42",
        "--out",
        p(&a),
    ]);
    let out = bin()
        .env("COHERENCE_THREADS", "3")
        .args([
            "simulate",
            "--duration-ns",
            "2e7",
            "--seed",
            "42",
            "--out",
            p(&b),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(sidecar(&a)).unwrap(),
        std::fs::read(sidecar(&b)).unwrap()
    );
    let side = read_json(&sidecar(&a));
    assert_eq!(side["provenance"]["seed"], 42);
    assert_eq!(
        side["provenance"]["config_hash"].as_str().unwrap().len(),
        64
    );
}

#[test]
fn zero_pump_gives_header_only_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"emitter": {"pump_rate": 0.0}, "detection": {"dark_rate": 0.0}}"#,
    );
    let out = dir.path().join("tags.csv");
    ok(&[
        "simulate",
        "--config",
        p(&cfg),
        "--duration-ns",
        "1e6",
        "--out",
        p(&out),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1, "{text}");
    assert!(text.starts_with('#'));
}

#[test]
fn cascade_sidecar_reports_equal_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"emitter": {"mode": "cascade", "pump_rate": 0.1, "blinkers": []}, "routing": "by_transition"}"#,
    );
    let out = dir.path().join("tags.csv");
    ok(&[
        "simulate",
        "--config",
        p(&cfg),
        "--duration-ns",
        "1e6",
        "--out",
        p(&out),
    ]);
    let side = read_json(&sidecar(&out));
    let x = side["photons"]["x"].as_u64().unwrap();
    assert!(x > 1000);
    assert_eq!(side["photons"]["xx"].as_u64().unwrap(), x);
    assert_eq!(side["tags_per_channel"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_config_field_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"emitter": {"t1_x": -1.0}}"#);
    let out = run(&[
        "simulate",
        "--config",
        p(&cfg),
        "--out",
        p(&dir.path().join("t.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t1_x"));
}

#[test]
fn hom_correlation_requires_polarization() {
    let dir = tempfile::tempdir().unwrap();
    let tags = write(
        dir.path(),
        "t.csv",
        "# channels=2 duration_ps=1000\n0,10\n1,20\n",
    );
    let out = run(&[
        "correlate",
        "hom",
        "--input",
        p(&tags),
        "--out",
        p(&dir.path().join("h.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_io_error() {
    let out = run(&[
        "correlate",
        "hbt",
        "--input",
        "/nonexistent/tags.csv",
        "--out",
        "/tmp/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_tags_are_data_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let tags = write(
        dir.path(),
        "t.csv",
        "# channels=2 duration_ps=1000\n0,banana\n",
    );
    let out = run(&[
        "correlate",
        "hbt",
        "--input",
        p(&tags),
        "--out",
        p(&dir.path().join("h.csv")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn ten_ps_bins_over_500_ns_give_100001_bins() {
    let dir = tempfile::tempdir().unwrap();
    let tags = dir.path().join("t.csv");
    ok(&[
        "simulate",
        "--duration-ns",
        "1e7",
        "--seed",
        "3",
        "--out",
        p(&tags),
    ]);
    let hist = dir.path().join("h.csv");
    ok(&[
        "correlate",
        "hbt",
        "--input",
        p(&tags),
        "--out",
        p(&hist),
        "--bin-ps",
        "10",
        "--window-ns",
        "500",
        "--norm",
        "none",
    ]);
    let text = std::fs::read_to_string(&hist).unwrap();
    assert_eq!(
        text.lines().filter(|l| !l.starts_with('#')).count(),
        100_001
    );
    assert_eq!(read_json(&sidecar(&hist))["n_bins"], 100_001);
}

#[test]
fn hbt_pipeline_fit_reports_raw_and_deconvolved() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"emitter": {"pump_rate": 0.2}, "detection": {"efficiency": 0.5, "dark_rate": 0.0}}"#,
    );
    let tags = dir.path().join("t.csv");
    ok(&[
        "simulate",
        "--config",
        p(&cfg),
        "--duration-ns",
        "2e8",
        "--seed",
        "5",
        "--out",
        p(&tags),
    ]);
    let hist = dir.path().join("h.csv");
    ok(&[
        "correlate",
        "hbt",
        "--input",
        p(&tags),
        "--out",
        p(&hist),
        "--bin-ps",
        "50",
    ]);
    let fit = dir.path().join("fit.json");
    let out = run(&[
        "fit",
        "hbt",
        "--data",
        p(&hist),
        "--irf-fwhm-ps",
        "93",
        "--out",
        p(&fit),
    ]);
    assert!(matches!(out.status.code(), Some(0) | Some(4)), "{out:?}");
    let v = read_json(&fit);
    let raw = v["derived"]["g2_raw"]["value"].as_f64().unwrap();
    let decon = v["derived"]["g2_decon"]["value"].as_f64().unwrap();
    assert!(decon <= raw, "decon {decon} raw {raw}");
    assert!(v["provenance"]["config_hash"].is_string());
}

fn rabi_fixture(dir: &Path) -> PathBuf {
    let decay = DecayConfig {
        gamma_rad: 1.0 / 1.71,
        gamma_deph: 0.0,
        gamma_loss: 40.0,
    };
    let x: Vec<f64> = (1..=30).map(|k| k as f64 * 0.3).collect();
    let areas: Vec<f64> = x.iter().map(|v| 0.8 * v).collect();
    let pops = rabi_curve(&areas, &PulseShape::default(), &decay).unwrap();
    let mut s = String::from("sqrt_power,intensity\n");
    for (k, (x, p)) in x.iter().zip(&pops).enumerate() {
        let ripple = 2.0 * ((k * 7 % 5) as f64 - 2.0);
        s.push_str(&format!("{x},{}\n", 800.0 * p + ripple));
    }
    write(dir, "rabi.csv", &s)
}

#[test]
fn rabi_fit_reports_fidelity_in_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    let data = rabi_fixture(dir.path());
    let out = ok(&["fit", "rabi", "--data", p(&data)]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let f = v["derived"]["fidelity"]["value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f), "fidelity {f}");
}

#[test]
fn report_on_single_fit_leaves_std_absent() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = String::from("time_ns,counts\n");
    for k in 0..400 {
        let t = -2.0 + 0.05 * k as f64;
        let y = if t < 0.0 {
            0.0
        } else {
            1e4 * (-t / 1.71).exp()
        };
        s.push_str(&format!("{t},{y}\n"));
    }
    let data = write(dir.path(), "decay.csv", &s);
    let fit = dir.path().join("fit.json");
    let _ = run(&["fit", "tcspc", "--data", p(&data), "--out", p(&fit)]);
    let json = dir.path().join("report.json");
    let out = ok(&["report", p(&fit), "--json", p(&json)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("n/a"));
    let v = read_json(&json);
    let t1 = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["key"] == "t1")
        .unwrap();
    assert!(t1["std"].is_null());
    assert!((t1["mean"].as_f64().unwrap() - 1.71).abs() < 0.05);
}

#[test]
fn report_rejects_mixed_width_sources() {
    let dir = tempfile::tempdir().unwrap();
    let mut scan = String::new();
    let mut mi = String::new();
    for k in 0..41 {
        let d = -4.0 + 0.2 * k as f64;
        scan.push_str(&format!("{d},{}\n", 100.0 / (1.0 + (d / 0.8).powi(2))));
        let tau = 10.0 * k as f64;
        mi.push_str(&format!("{tau},{}\n", (-tau / 150.0).exp()));
    }
    let (scan, mi) = (
        write(dir.path(), "scan.csv", &scan),
        write(dir.path(), "mi.csv", &mi),
    );
    let (fs, fm) = (dir.path().join("fs.json"), dir.path().join("fm.json"));
    let _ = run(&["fit", "scan", "--data", p(&scan), "--out", p(&fs)]);
    let _ = run(&["fit", "mi", "--data", p(&mi), "--out", p(&fm)]);
    let out = run(&["report", p(&fs), p(&fm)]);
    assert_eq!(out.status.code(), Some(3));
}
