use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tpbsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpbsim"))
        .args(args)
        .env_remove("TPB_SIM_THREADS")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_subcommand_exits_one() {
    assert_eq!(tpbsim(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = tpbsim(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("sweep"));
}

#[test]
fn invalid_parameter_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "behavior = \"beneficial\"\nphi = 1.5\nbeta = 5.0\n").unwrap();
    let out = tpbsim(&["run", "--config", path(&cfg), "--out", path(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("phi"));
}

#[test]
fn missing_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = tpbsim(&[
        "run",
        "--config",
        path(&dir.path().join("absent.toml")),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_outputs_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = tpbsim(&["run", "--config", "fig3_baseline", "--replicates", "3", "--out", path(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let traj = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 302);
    assert!(traj.starts_with("t,y_avg\n0,"));
    assert!(!traj.contains('\r'));
    for file in ["ensemble.csv", "summary.json", "plot.svg", "manifest.json"] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    assert!(!out_dir.join("states.csv").exists());

    let manifest = out_dir.join("manifest.json");
    let replay = tpbsim(&["replay", "--manifest", path(&manifest)]);
    assert_eq!(replay.status.code(), Some(0), "{}", String::from_utf8_lossy(&replay.stderr));

    let text = fs::read_to_string(&manifest).unwrap();
    let first = text.find("\"sha256\": \"").unwrap() + 11;
    let mut tampered = text.clone();
    let flipped = if &text[first..first + 1] == "0" { "1" } else { "0" };
    tampered.replace_range(first..first + 1, flipped);
    fs::write(&manifest, tampered).unwrap();
    let replay = tpbsim(&["replay", "--manifest", path(&manifest)]);
    assert_eq!(replay.status.code(), Some(1));
}

#[test]
fn run_flags_toggle_optional_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = tpbsim(&[
        "run",
        "--config",
        "fig3_baseline",
        "--replicates",
        "2",
        "--no-svg",
        "--snapshot-states",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("plot.svg").exists());
    let states = fs::read_to_string(dir.path().join("states.csv")).unwrap();
    assert!(states.starts_with("t,agent,x0,x,z,p,y,h\n"));
    assert_eq!(states.lines().count(), 1 + 301 * 300);
}

#[test]
fn sweep_writes_phase_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = tpbsim(&["sweep", "--config", "fig3_grid", "--replicates", "4", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("phase_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    assert!(table.starts_with("behavior,phi,beta,lambda,alpha,replicates,"));
    assert!(dir.path().join("medians.csv").exists());
}

#[test]
fn run_rejects_grid_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = tpbsim(&["run", "--config", "fig3_grid", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zero_threads_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = tpbsim(&["run", "--config", "fig3_baseline", "--threads", "0", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}
