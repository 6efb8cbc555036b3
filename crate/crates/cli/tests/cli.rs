use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dynoprior_cli::config::ActivationChoice;
use dynoprior_cli::RunManifest;
use serde_json::Value;

fn dynoprior(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynoprior")).args(args).env("DYNO_THREADS", "1").output().expect("binary runs")
}

fn results(dir: &Path) -> Value {
    RunManifest::read(dir).expect("manifest").results
}

#[test]
fn puc_relu_residual_is_large() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("puc");
    let o = dynoprior(&["puc", "--activation", "relu", "--k", "100", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = results(&out);
    assert!(r["max_residual"].as_f64().unwrap() > 1e3, "{r}");
    assert!(out.join("residual.s0.csv").exists());
    assert!(out.join("config.s0.toml").exists());
}

#[test]
fn modes_chen_time_delay_finds_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("modes");
    let o = dynoprior(&["modes", "--system", "chen", "--method", "tdd", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(results(&out)["dominant_count"], 3);
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("puc.toml");
    fs::write(&cfg, "experiment = \"puc\"\nseed = 4\n\n[puc]\nactivation = \"relu\"\nk = 50\ngrid = 11\n").unwrap();
    let out = tmp.path().join("o");
    let o = dynoprior(&["puc", "--config", cfg.to_str().unwrap(), "--k", "20", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = RunManifest::read(&out).unwrap();
    assert_eq!(m.config.puc.k, 20);
    assert_eq!(m.config.puc.grid, 11);
    assert_eq!(m.config.puc.activation, ActivationChoice::Relu);
    assert_eq!(m.config.seed, 4);
    assert!(out.join("residual.s4.csv").exists());
}

#[test]
fn run_subcommand_reproduces_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sweep.toml");
    fs::write(
        &cfg,
        "experiment = \"sweep\"\nseed = 2\n\n[sweep]\nomegas = [2.0, 4.0, 8.0]\nseeds = 3\nwidth = 8\npoints = 32\n",
    )
    .unwrap();
    let mut csvs = Vec::new();
    for rep in ["a", "b"] {
        let out = tmp.path().join(rep);
        let o = dynoprior(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let m = RunManifest::read(&out).unwrap();
        assert!(m.verify(&out).is_empty());
        let mut files: Vec<(String, Vec<u8>)> = m
            .files
            .iter()
            .filter(|f| f.path.ends_with(".csv"))
            .map(|f| (f.path.clone(), fs::read(out.join(&f.path)).unwrap()))
            .collect();
        files.sort();
        assert!(!files.is_empty());
        csvs.push(files);
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn manifest_detects_modified_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("p");
    let o = dynoprior(&["puc", "--k", "10", "--grid", "11", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let m = RunManifest::read(&out).unwrap();
    assert!(m.succeeded());
    fs::write(out.join("residual.s0.csv"), "tampered\n").unwrap();
    assert_eq!(m.verify(&out), vec!["residual.s0.csv".to_string()]);
}

#[test]
fn bad_inputs_exit_with_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "experiment = \"puc\"\nbogus = 1\n").unwrap();
    let out = tmp.path().join("x");
    let o = dynoprior(&["puc", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = dynoprior(&["sindy", "--system", "nosuch", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let m = RunManifest::read(&out).unwrap();
    assert!(!m.succeeded());
    assert!(m.error.unwrap().contains("nosuch"));
}

#[test]
fn mismatched_config_experiment_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("modes.toml");
    fs::write(&cfg, "experiment = \"modes\"\n").unwrap();
    let o = dynoprior(&["puc", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("y").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
