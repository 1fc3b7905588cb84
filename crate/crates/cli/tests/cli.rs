use std::path::Path;
use std::process::{Command, Output};

fn nonfick(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonfick")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lists_presets() {
    let o = nonfick(&["presets"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    for name in ["fick_baseline", "nonfick_front", "overshoot_probe", "reproductive_demo", "periodic_demo"] {
        assert!(s.contains(name), "{name} missing from {s}");
    }
}

#[test]
fn fick_baseline_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let o = nonfick(&["run", "fick_baseline", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("result: accepted"));
    for f in ["summary.txt", "final_state.csv", "estimates.csv", "monitors.csv"] {
        assert!(dir.path().join(f).exists(), "{f} not written");
    }
}

#[test]
fn degenerate_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = nonfick(&["run", "fick_baseline", "--out", dir.path().to_str().unwrap(), "--override", "grid.cells=[2]"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn misspelled_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    let text = nonfick_cli::presets::find("fick_baseline").unwrap().toml.replace("frame_stride", "frame_strid");
    std::fs::write(&cfg, text).unwrap();
    let o = nonfick(&["run", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("frame_strid"));
}

#[test]
fn unknown_config_is_rejected() {
    assert_eq!(code(&nonfick(&["run", "no_such_preset"])), 3);
}

fn read(dir: &Path, f: &str) -> String {
    std::fs::read_to_string(dir.join(f)).unwrap()
}

#[test]
fn runs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = nonfick(&["run", "reproductive_demo", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["final_state.csv", "convergence.csv", "estimates.csv", "monitors.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }
}

#[test]
fn long_horizon_is_tagged_outside_guarantee() {
    let dir = tempfile::tempdir().unwrap();
    let o = nonfick(&[
        "run",
        "reproductive_demo",
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "solver.horizon=0.3",
        "--override",
        "solver.starts=1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("outside-guarantee"));
}

#[test]
fn planted_diffusion_fault_fails_verification() {
    let o = nonfick(&["verify", "--inject-fault", "flip-diffusion"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("[FAIL]  6"));
}

#[test]
fn stress_flux_sign_does_not_move_the_bounds() {
    // the stress-gradient coefficient vanishes at u = 0 and u = 1
    let dir = tempfile::tempdir().unwrap();
    let o = nonfick(&[
        "run",
        "nonfick_front",
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "coefficients.e0.alpha1=-0.5",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("check max principle: pass"));
}
