use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aberdip::ScenarioConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aberdip"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, cfg: &ScenarioConfig) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, cfg.to_json()).unwrap();
    p
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau_ps,rate,rate_normalized"));
    lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn dip(dir: &Path, name: &str, extra: &str) -> Vec<Vec<f64>> {
    let text = format!("{{\"output\": \"{}\"{extra}}}", dir.join(name).display());
    let cfg = dir.join(format!("{name}.cfg.json"));
    std::fs::write(&cfg, text).unwrap();
    let out = run(&["dip", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    read_csv(&dir.join(format!("{name}.csv")))
}

#[test]
fn default_config_prints_and_parses() {
    let out = run(&["--print-default-config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(ScenarioConfig::parse(&text, "stdout").unwrap(), ScenarioConfig::default());
    for key in ["\"gvm_ps_per_mm\": 0.182", "\"mirror_radius_mm\": 6.0", "\"d1_mm\": 330.0"] {
        assert!(text.contains(key), "{key}");
    }
}

#[test]
fn flat_dip_minimum_matches_disk_transform() {
    let dir = tempfile::tempdir().unwrap();
    let rows = dip(dir.path(), "flat", "");
    assert_eq!(rows.len(), 201);
    assert_eq!(rows[0][1], 1.0);
    // R_C / R_0 = 1 - tri * 2 J1(z) / z with z = (2M/D) tau R
    let (dl, rate, radius) = (0.273, 2.0 * 0.0723 / 0.182, 2.0 * std::f64::consts::PI / 810e-6 * 0.025);
    let oracle = |t: f64| {
        let tri = (1.0 - (1.0 - 2.0 * t / dl).abs()).max(0.0);
        let z = rate * t * radius;
        let jinc = if z == 0.0 { 1.0 } else { 2.0 * bessel_j1(z) / z };
        1.0 - tri * jinc
    };
    let mut best = (0, f64::INFINITY);
    for (i, r) in rows.iter().enumerate() {
        assert!((r[2] - oracle(r[0])).abs() < 1e-9, "tau={}", r[0]);
        if r[2] < best.1 {
            best = (i, r[2]);
        }
    }
    let want = (0..rows.len())
        .min_by(|&a, &b| oracle(rows[a][0]).total_cmp(&oracle(rows[b][0])))
        .unwrap();
    assert_eq!(best.0, want);
}

/// J1 from Bessel's integral `(1/pi) int_0^pi cos(t - x sin t) dt`; the
/// periodic trapezoid rule converges spectrally.
fn bessel_j1(x: f64) -> f64 {
    let n = 400;
    let h = std::f64::consts::PI / n as f64;
    let f = |t: f64| (t - x * t.sin()).cos();
    let inner: f64 = (1..n).map(|i| f(i as f64 * h)).sum();
    (inner + 0.5 * (f(0.0) + f(std::f64::consts::PI))) * h / std::f64::consts::PI
}

#[test]
fn astigmatism_matches_flat_and_coma_does_not() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dip(dir.path(), "flat", "");
    let astig = dip(dir.path(), "astig", ", \"aberration\": [{\"n\": 2, \"m\": -2, \"pv_um\": 0.8}]");
    let coma = dip(dir.path(), "coma", ", \"aberration\": [{\"n\": 3, \"m\": 1, \"pv_um\": 0.75}]");
    let linf = |a: &[Vec<f64>], b: &[Vec<f64>]| {
        a.iter().zip(b).map(|(x, y)| (x[2] - y[2]).abs()).fold(0.0, f64::max)
    };
    assert!(linf(&flat, &astig) < 1e-6);
    let d = linf(&flat, &coma);
    assert!(d > 1e-2, "{d}");
    // regression constant from the first verified run
    assert!((d - 0.0752120).abs() < 1e-6, "{d}");
}

#[test]
fn metadata_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig {
        aberration: vec![aberdip::config::ModeSpec {
            n: 3,
            m: -1,
            pv_um: Some(0.6),
            coeff_rad: None,
        }],
        tau_points: 51,
        output: dir.path().join("first").display().to_string(),
        ..Default::default()
    };
    let path = write_config(dir.path(), "cfg.json", &cfg);
    assert!(run(&["dip", "--config", path.to_str().unwrap()]).status.success());
    let meta = dir.path().join("first.json");
    let second = dir.path().join("second").display().to_string();
    let out = run(&["dip", "--config", meta.to_str().unwrap(), "--out", &second]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read(dir.path().join("first.csv")).unwrap();
    let b = std::fs::read(dir.path().join("second.csv")).unwrap();
    assert_eq!(a, b);

    // and the sidecar of the rerun differs only in the output prefix
    let ma = std::fs::read_to_string(meta).unwrap();
    let mb = std::fs::read_to_string(dir.path().join("second.json")).unwrap();
    assert_eq!(ma.replace("first", "second"), mb);
}

#[test]
fn config_errors_exit_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"r0\": 1.0,\n  \"tau_points\": 1,\n  \"geometry\": {\"d1_mm\": -4}\n}\n").unwrap();
    let out = run(&["dip", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3: tau_points"), "{err}");
    assert!(err.contains("line 4: geometry.d1_mm"), "{err}");

    std::fs::write(&bad, "{\n  \"r0\": 1.0,\n  \"tau_points\" 5\n}\n").unwrap();
    let out = run(&["dip", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = run(&["dip", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["dip", "--grid-order", "many"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["dip", "--grid-order", "4"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cancellation_battery() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("c").display().to_string();
    let out = run(&["cancel-test", "--out", &prefix]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = std::fs::read_to_string(dir.path().join("c_cancel.txt")).unwrap();
    assert_eq!(report.matches(" pass\n").count(), 9, "{report}");

    let out = run(&["cancel-test", "--out", &prefix, "--expect-cancel", "3,1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(3, 1)"));
}

#[test]
fn cancellation_with_small_mirror() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig {
        geometry: aberdip::config::GeometryConfig {
            mirror_radius_mm: 0.5,
            ..Default::default()
        },
        output: dir.path().join("s").display().to_string(),
        ..Default::default()
    };
    let path = write_config(dir.path(), "cfg.json", &cfg);
    let out = run(&["cancel-test", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

fn read_summary(path: &Path) -> Vec<[f64; 3]> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("pv_um,visibility,residual_vs_flat"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

#[test]
fn sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).display().to_string();

    assert!(run(&["sweep", "--out", &p("zero"), "--mode", "3,1", "--pv", "0"]).status.success());
    let rows = read_summary(&dir.path().join("zero_summary.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2], 0.0);
    dip(dir.path(), "flat", "");
    let flat = read_csv(&dir.path().join("flat.csv"));
    let vis = 1.0 - flat.iter().map(|r| r[2]).fold(f64::INFINITY, f64::min);
    assert!((rows[0][1] - vis).abs() < 1e-11);

    let out = run(&["sweep", "--out", &p("astig"), "--mode", "2,-2", "--pv", "0.2,0.4,0.6,0.8"]);
    assert!(out.status.success());
    let rows = read_summary(&dir.path().join("astig_summary.csv"));
    assert!(rows.iter().all(|r| r[2] < 1e-6), "{rows:?}");
    assert!(dir.path().join("astig_pv0p8.csv").exists());

    let out = run(&["sweep", "--out", &p("coma"), "--mode", "3,-1"]);
    assert!(out.status.success());
    let rows = read_summary(&dir.path().join("coma_summary.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows.windows(2).all(|w| w[1][2] > w[0][2]), "{rows:?}");

    let out = run(&["sweep", "--out", &p("bad"), "--mode", "3,2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zernike_table_output() {
    let out = run(&["zernike-table", "--max-n", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,m,power,coefficient\n0,0,0,1\n"));
    assert!(text.contains("4,0,4,6\n4,0,2,-6\n4,0,0,1\n"));
    assert_eq!(run(&["zernike-table", "--max-n", "99"]).status.code(), Some(1));
}

#[test]
fn finite_model_records_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig {
        model: aberdip::config::ModelChoice::Finite,
        tau_points: 5,
        geometry: aberdip::config::GeometryConfig {
            aperture_radius_mm: 1.0,
            ..Default::default()
        },
        output: dir.path().join("fin").display().to_string(),
        ..Default::default()
    };
    let path = write_config(dir.path(), "cfg.json", &cfg);
    let out = run(&["dip", "--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fin.json")).unwrap()).unwrap();
    assert_eq!(meta["resolved"]["model"], "finite");
    assert!(meta["resolved"]["q_samples_per_axis"].as_u64().unwrap() > 100);
    assert_eq!(meta["resolved"]["under_resolved"], false);
    let rows = read_csv(&dir.path().join("fin.csv"));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[1] >= 0.0 && r[1] <= 2.0));
}
