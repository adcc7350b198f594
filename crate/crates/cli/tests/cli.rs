use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qtomo_cli::commands::same_outputs;
use qtomo_core::io::QtgArray;

fn qtomo(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qtomo"));
    cmd.args(args)
        .env_remove("QTOMO_OUTPUT_DIR")
        .env_remove("QTOMO_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("qtomo-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

const EVOLVE: &str = "[scheme]\nname = jordan\n[drive]\nomega = 1\nphi = 0.5*cos(0.9*t)\n\
[grid]\nhalf_width = 8\ncount = 64\nrho_count = 128\n[state]\nlevel = 2\n\
[evolution]\ndt = 1e-3\nt_end = 0.4\ncheckpoint_every = 100\n";

#[test]
fn weyl_moments() {
    let out = qtomo(&["scheme", "--name", "weyl", "--moments", "4"], &[]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim(),
        "1, 0.5, 0.25, 0.125, 0.0625"
    );
}

#[test]
fn missing_drive_is_a_config_error() {
    let dir = scratch("missing");
    let cfg = dir.join("run.ini");
    fs::write(&cfg, "[drive]\nomega = 1\n").unwrap();
    let out = qtomo(&["evolve", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("drive.phi: required"), "{err}");
    assert!(err.starts_with("{\"error\":\"config\""));
    // unknown subcommand / suite: usage errors
    assert_eq!(qtomo(&["frobnicate"], &[]).status.code(), Some(2));
    assert_eq!(
        qtomo(&["validate", "--suite", "nope"], &[]).status.code(),
        Some(2)
    );
}

#[test]
fn closed_forms_suite_passes() {
    let out = qtomo(&["validate", "--suite", "closed-forms"], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("PASS [ 1]"));
}

#[test]
fn evolve_is_thread_count_independent_and_replayable() {
    let dir = scratch("evolve");
    let cfg = dir.join("run.ini");
    fs::write(&cfg, EVOLVE).unwrap();
    let cfg = cfg.to_str().unwrap();
    let one = dir.join("one");
    let four = dir.join("four");
    let a = qtomo(
        &["--threads", "1", "evolve", "--config", cfg],
        &[("QTOMO_OUTPUT_DIR", &one)],
    );
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = qtomo(
        &["evolve", "--config", cfg],
        &[
            ("QTOMO_OUTPUT_DIR", &four),
            ("QTOMO_THREADS", Path::new("4")),
        ],
    );
    assert!(b.status.success());
    assert!(same_outputs(&one, &four).unwrap());
    assert!(one.join("checkpoint_000300.qtg").exists());

    // the manifest is itself a config reproducing the run
    let manifest = fs::read_to_string(one.join("manifest.ini")).unwrap();
    assert!(manifest.contains("sign_convention = (+-++)"));
    let replay = dir.join("replay");
    let c = qtomo(
        &[
            "evolve",
            "--config",
            one.join("manifest.ini").to_str().unwrap(),
        ],
        &[("QTOMO_OUTPUT_DIR", &replay)],
    );
    assert!(c.status.success());
    assert!(same_outputs(&one, &replay).unwrap());

    // binary grids re-import bit-identically
    let bytes = fs::read(one.join("final.qtg")).unwrap();
    let back = QtgArray::load(one.join("final.qtg")).unwrap();
    let mut again = Vec::new();
    back.write_to(&mut again).unwrap();
    assert_eq!(bytes, again);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn state_wigner_and_tomogram_exports() {
    let dir = scratch("exports");
    let cfg = dir.join("run.ini");
    fs::write(
        &cfg,
        format!(
            "{EVOLVE}[output]\ndir = {}\ngnuplot = true\n",
            dir.join("out").display()
        ),
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    for sub in ["states", "wigner", "tomogram"] {
        let out = qtomo(&[sub, "--config", cfg], &[]);
        assert!(
            out.status.success(),
            "{sub}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = dir.join("out");
    for f in [
        "trajectory.csv",
        "psi.csv",
        "rho.qtg",
        "wigner.qtg",
        "wigner.csv",
        "wigner.dat",
        "lambda.qtg",
        "tomogram.qtg",
        "tomogram.csv",
        "characteristic.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap().split(',').count(), 10);
    let _ = fs::remove_dir_all(&dir);
}
