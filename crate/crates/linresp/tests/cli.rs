use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn linresp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linresp"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .current_dir(repo())
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn report(dir: &Path, stem: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json"))).unwrap()).unwrap()
}

#[test]
fn gauss_density_csv_matches_closed_form() {
    let out = tempfile::tempdir().unwrap();
    let o = linresp(&["density", "--config", "configs/gauss_density.toml"], out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.path().join("density.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,h"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[1] - 1.0 / ((1.0 + v[0]) * std::f64::consts::LN_2)).abs() < 1e-6);
        let mantissa = line.split(',').nth(1).unwrap().split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
    }
    let r = report(out.path(), "density");
    assert_eq!(r["config"]["solver"]["cutoff"], 100000);
    assert_eq!(r["command"], "density");
    assert!(r["results"]["stationary"]["tail_bound"].is_number());
    assert!(r["results"]["ulam"]["l1_distance"].as_f64().unwrap() < 1e-2);
}

#[test]
fn lsv_without_inducing_is_a_hypothesis_violation() {
    let out = tempfile::tempdir().unwrap();
    let o = linresp(&["check-hypotheses", "--config", "configs/lsv_raw.toml"], out.path());
    assert_eq!(o.status.code(), Some(2));
    let r = report(out.path(), "check_hypotheses");
    assert!(r["results"]["violation"].is_string());
    let o = linresp(&["check-hypotheses", "--config", "configs/lsv_tilted.toml"], out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn pm_half_check_ratio_is_in_band() {
    let out = tempfile::tempdir().unwrap();
    let o = linresp(&["pm-half-check", "--config", "configs/pm_half.toml"], out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let ratio = report(out.path(), "pm_half_check")["results"]["ratio"].as_f64().unwrap();
    assert!((0.45..=0.55).contains(&ratio), "{ratio}");
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[system]\nkind = \"gauss-renyi\"\np = 0.5\n\n[solver]\nnodes = 40\nbasis = \"wavelet\"\n");
    let o = linresp(&["density", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("run.toml:7:"), "{err}");
    let cfg = write_config(dir.path(), "[system]\nkind = \"gauss-renyi\"\np = 2.0\n");
    let o = linresp(&["density", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("run.toml:1:"));
}

#[test]
fn missing_system_is_an_input_error() {
    let out = tempfile::tempdir().unwrap();
    let o = linresp(&["response"], out.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn truncation_failure_is_numerical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[system]\nkind = \"lsv-tilted\"\nalpha0 = 0.25\nalpha1 = 0.45\n\n[inducing]\nn_max = 4\ntail_threshold = 1e-6\ngamma = 0.6\n",
    );
    let o = linresp(&["induced-response", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "induced_response");
    assert!(r["error"]["message"].as_str().unwrap().contains("n_max"));
}

#[test]
fn reruns_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[system]\nkind = \"gauss-renyi\"\np = 0.5\n\n[mc]\nreplicas = 4\nlength = 20000\nbins = 20\nbootstrap = 50\nresponse_epsilon = 0.05\n",
    );
    let a = dir.path().join("a");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(linresp(&["mc", "--config", cfg, "--threads", "1", "--seed", "9"], &a).status.code(), Some(0));
    let first: Vec<Vec<u8>> = ["mc.json", "histogram.csv"].iter().map(|f| fs::read(a.join(f)).unwrap()).collect();
    assert_eq!(linresp(&["mc", "--config", cfg, "--threads", "3", "--seed", "9"], &a).status.code(), Some(0));
    for (f, old) in ["mc.json", "histogram.csv"].iter().zip(&first) {
        assert_eq!(&fs::read(a.join(f)).unwrap(), old, "{f}");
    }
    let r = report(&a, "mc");
    assert_eq!(r["config"]["mc"]["seed"], 9);
    assert!(r["results"]["response_check"]["z_score"].is_number());
}
