use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use diracsea::io;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diracsea"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

const SMALL_ENSEMBLE: &str = r#"
scenario = "ensemble"
seed = 3

[lattice]
box_len = 6.283185307179586
max_mode = 1

[sector]
state = { kind = "modes", amplitudes = [[3, 1.0, 0.0], [4, 0.5, 0.5]] }

[ensemble]
trajectories = 200
t1 = 1.0
slices = 2
bins = 10
"#;

#[test]
fn check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["check", "--out", dir.path().to_str().unwrap(), "--workers", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let j = read_json(&dir.path().join("check.json"));
    assert_eq!(j["result"]["passed"], true);
    assert_eq!(j["scenario"], "check");
}

#[test]
fn graphite_radius() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("graphite.toml");
    let out = run(&["fluct", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let j = read_json(&dir.path().join("fluct.json"));
    let b = j["result"]["radius_m"].as_f64().unwrap();
    assert!((2.3e-6..=2.9e-6).contains(&b), "b = {b}");
    let d = &j["result"]["distinguishability"];
    let ratio = d["vacuum_stddev"].as_f64().unwrap() / d["fermions_in_ball"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 1e-9);
    assert_eq!(j["result"]["n0"]["provenance"], "formula");
    assert_eq!(j["result"]["variance"]["provenance"], "quadrature");
    assert_eq!(j["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn fluct_csv_lists_species() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("f.toml");
    fs::write(&cfg, "[fluct]\ncutoff = 1e20\nregion = { type = \"ball\", radius = 1e-9 }\n").unwrap();
    let out = run(&["fluct", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("fluct_species.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "id,mass,case,variance,error,asymptotic,converged");
    assert_eq!(rows.len(), 25);
    assert!(text.lines().any(|l| l.starts_with("# config_hash=")));
}

#[test]
fn ensemble_reruns_are_identical() {
    let base = tempfile::tempdir().unwrap();
    let cfg = base.path().join("e.toml");
    fs::write(&cfg, SMALL_ENSEMBLE).unwrap();
    let dirs = [base.path().join("a"), base.path().join("b")];
    for d in &dirs {
        let out = run(&["ensemble", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["ensemble.json", "trajectories.csv", "trajectories.frames"] {
        assert_eq!(fs::read(dirs[0].join(name)).unwrap(), fs::read(dirs[1].join(name)).unwrap(), "{name}");
    }
    let frames = io::parse_trajectory_frames(&fs::read(dirs[0].join("trajectories.frames")).unwrap()).unwrap();
    assert_eq!(frames.times.len(), 3);
    assert_eq!(frames.configurations[0].len(), 200);
    let rows = io::parse_trajectory_csv(&fs::read_to_string(dirs[0].join("trajectories.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 600);
}

#[test]
fn seed_flag_changes_output() {
    let base = tempfile::tempdir().unwrap();
    let cfg = base.path().join("e.toml");
    fs::write(&cfg, SMALL_ENSEMBLE).unwrap();
    let a = base.path().join("a");
    let b = base.path().join("b");
    run(&["ensemble", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    run(&["ensemble", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "4"]);
    let ja = read_json(&a.join("ensemble.json"));
    let jb = read_json(&b.join("ensemble.json"));
    assert_eq!(jb["seed"], 4);
    assert_ne!(ja["config_hash"], jb["config_hash"]);
    assert_ne!(fs::read(a.join("trajectories.csv")).unwrap(), fs::read(b.join("trajectories.csv")).unwrap());
}

#[test]
fn evolve_writes_loadable_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("evolve.toml");
    let out = run(&["evolve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let j = read_json(&dir.path().join("evolve.json"));
    let hash = j["config_hash"].as_str().unwrap();
    let slices = j["result"]["slices"].as_array().unwrap();
    assert_eq!(slices.len(), 9);
    let e0 = slices[0]["energy"].as_f64().unwrap();
    for s in slices {
        assert!((s["norm"].as_f64().unwrap() - 1.0).abs() < 1e-10);
        assert!((s["energy"].as_f64().unwrap() - e0).abs() < 1e-9);
    }
    let (header, state) = io::read_state_checkpoint(&dir.path().join("state_final.ckpt")).unwrap();
    assert_eq!(header.config_hash.as_deref(), Some(hash));
    assert!((state.norm() - 1.0).abs() < 1e-10);
    let (oh, op) = io::read_operator_checkpoint(&dir.path().join("hamiltonian.ckpt")).unwrap();
    assert!(op.is_hermitian());
    assert_eq!(op.nrows(), oh.basis.build().unwrap().dim());
    assert!(dir.path().join("fields_0008.csv").exists());
}

#[test]
fn unknown_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[fluct]\ncutoff = 1e20\nradious = 3.0\n").unwrap();
    let out = run(&["fluct", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("radious") && err.contains("line 3"), "{err}");
}

#[test]
fn scenario_mismatch_and_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let graphite = configs().join("graphite.toml");
    let out = run(&["evolve", "--config", graphite.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = dir.path().join("neg.toml");
    fs::write(&cfg, "[fluct]\ncutoff = -1.0\nregion = { type = \"ball\", radius = 1.0 }\n").unwrap();
    let out = run(&["fluct", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&["check", "--workers", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn example_configs_parse() {
    for entry in fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        let text = fs::read_to_string(&p).unwrap();
        let v: toml::Value = toml::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert!(v.get("scenario").is_some(), "{}", p.display());
    }
}
