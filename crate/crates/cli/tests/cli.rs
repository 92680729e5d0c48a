use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn pscat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pscat"))
        .current_dir(dir)
        .env_remove("PSCAT_DATA_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {text}"))
}

#[test]
fn same_seed_gives_identical_events() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = pscat(
            dir.path(),
            &[
                "simulate", "born", "--events", "3000", "--seed", "5", "--out", name,
            ],
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let out = pscat(
        dir.path(),
        &[
            "simulate", "born", "--events", "3000", "--seed", "6", "--out", "c.csv",
        ],
    );
    assert!(out.status.success());
    assert_ne!(a, std::fs::read(dir.path().join("c.csv")).unwrap());
}

#[test]
fn manifest_records_the_hashed_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = pscat(
        dir.path(),
        &[
            "simulate",
            "impulsive",
            "--runs",
            "500",
            "--seed",
            "9",
            "--out",
            "imp.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = json(&dir.path().join("imp.manifest.json"));
    assert_eq!(m["mode"], "simulate impulsive");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    let config = m["config"].as_str().unwrap();
    assert_eq!(
        m["config_sha256"],
        hex::encode(Sha256::digest(config.as_bytes()))
    );
    let outputs: Vec<&str> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    for name in ["imp.csv", "imp.survival.dat", "imp.summary.json"] {
        assert!(outputs.contains(&name), "{outputs:?}");
        assert!(dir.path().join(name).exists());
    }
}

#[test]
fn printed_config_reloads_to_the_same_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = pscat(dir.path(), &["--seed", "42", "config"]);
    assert!(out.status.success());
    std::fs::write(dir.path().join("run.toml"), &out.stdout).unwrap();
    let again = pscat(dir.path(), &["--config", "run.toml", "config"]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn unknown_config_key_is_config_invalid() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[born]\nevnts = 10\n").unwrap();
    let out = pscat(dir.path(), &["--config", "bad.toml", "simulate", "born"]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_error(&out);
    assert_eq!(e["error"], "ConfigInvalid");
    assert_eq!(e["exit_code"], 2);
}

#[test]
fn fast_projectile_is_a_regime_violation() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("fast.toml"), "[projectile]\nspeed = 1.0\n").unwrap();
    let out = pscat(
        dir.path(),
        &[
            "--config",
            "fast.toml",
            "simulate",
            "born",
            "--events",
            "100",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_error(&out)["error"], "RegimeViolation");
}

#[test]
fn unwritable_output_is_an_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    let out = pscat(
        dir.path(),
        &[
            "simulate",
            "born",
            "--events",
            "100",
            "--out",
            "blocker/x.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_error(&out)["error"], "IoFailure");
}

#[test]
fn missing_events_file_is_an_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = pscat(
        dir.path(),
        &["reconstruct", "fourier", "--events", "absent.csv"],
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn default_outputs_go_to_the_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_pscat"))
        .current_dir(dir.path())
        .env("PSCAT_DATA_DIR", "data")
        .args(["simulate", "semiclassical", "--events", "50"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let data = dir.path().join("data");
    assert!(data.join("semiclassical_events.csv").exists());
    assert!(data.join("semiclassical_events.deflection.dat").exists());
    assert!(data.join("semiclassical_events.manifest.json").exists());
}

#[test]
fn help_lists_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = pscat(dir.path(), &["reconstruct", "fourier", "--help"]);
    let help = String::from_utf8_lossy(&out.stdout);
    assert!(
        help.contains(".formfactor.dat") && help.contains(".manifest.json"),
        "{help}"
    );
}

#[test]
fn budget_reports_the_wimp_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = pscat(
        dir.path(),
        &["budget", "--preset", "wimp", "--out", "b.json"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("duration: 1.000000e-2 s"), "{text}");
    let doc = json(&dir.path().join("b.json"));
    let ke = doc["report"]["kinetic_energy_ev"].as_f64().unwrap();
    assert!((ke / 1e5 - 1.0).abs() < 0.05);
    let bad = pscat(
        dir.path(),
        &["budget", "--preset", "proton", "--out", "c.json"],
    );
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn pointer_and_reconstruction_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sim = pscat(
        dir.path(),
        &[
            "simulate",
            "semiclassical",
            "--events",
            "64",
            "--out",
            "sc.csv",
        ],
    );
    assert!(sim.status.success());
    let rec = pscat(
        dir.path(),
        &[
            "reconstruct",
            "semiclassical",
            "--events",
            "sc.csv",
            "--out",
            "rec.csv",
        ],
    );
    assert!(
        rec.status.success(),
        "{}",
        String::from_utf8_lossy(&rec.stderr)
    );
    let diag = json(&dir.path().join("rec.diagnostics.json"));
    assert!(diag["l2_rel_error"].as_f64().unwrap() < 0.05, "{diag}");

    let ptr = pscat(
        dir.path(),
        &["pointer", "demo", "--trials", "2e4", "--out", "p.csv"],
    );
    assert!(
        ptr.status.success(),
        "{}",
        String::from_utf8_lossy(&ptr.stderr)
    );
    assert!(dir.path().join("p.frequencies.dat").exists());
    assert!(json(&dir.path().join("p.summary.json")).is_object());
}
