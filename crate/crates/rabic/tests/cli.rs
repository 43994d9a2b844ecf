//! Command-line contract: subcommands, exit codes (0 success, 1 usage or
//! configuration error, 2 numerical abort), output files, and the output
//! directory environment variable.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rabic"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rabic-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Short contact-free two-joint scenario that completes quickly.
const QUICK: &str = r#"
[robot]
base = "none"
[[robot.links]]
mass = 5.0
length = 0.7
com_offset = 0.35
inertia = 0.5
[[robot.links]]
mass = 3.0
length = 0.5
com_offset = 0.25
inertia = 0.3
[trajectory]
t_f = 0.5
[[trajectory.joints]]
kind = "constant"
value = 0.2
[[trajectory.joints]]
kind = "constant"
value = -0.1
[controller]
kind = "rabic"
[controller.pd]
kp = 480.0
kd = 192.0
[controller.rabic]
k1 = 24.0
k2 = 32.0
l = 0.999
[controller.impedance]
m_r = 1.0
b_r = 20.0
k_r = 10.0
[controller.estimator]
rho_phi = 50.0
sigma_phi = 0.005
rho_psi = 0.1
sigma_psi = 0.005
[sim]
duration = 1.2
"#;

fn write_quick(dir: &std::path::Path) -> PathBuf {
    let path = dir.join("quick.toml");
    std::fs::write(&path, QUICK).unwrap();
    path
}

#[test]
fn run_writes_log_and_metrics() {
    let dir = scratch("run");
    let cfg = write_quick(&dir);
    let out = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("run-rabic.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));
    assert!(csv.lines().nth(1).unwrap().starts_with("t,theta_1"));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("metrics-rabic.json")).unwrap())
            .unwrap();
    assert!(metrics["inner_rmse"].is_number());
}

#[test]
fn controller_override_selects_pd() {
    let dir = scratch("pd");
    let cfg = write_quick(&dir);
    let out = bin()
        .args([
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--controller",
            "pd",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("run-pd.csv").exists());
}

#[test]
fn compare_writes_report() {
    let dir = scratch("compare");
    let cfg = write_quick(&dir);
    let out = bin()
        .args(["compare", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("compare.json")).unwrap()).unwrap();
    // Contact-free comparisons have no meaningful force ratio; the field is
    // then non-finite and serializes as null.
    assert!(report["terminal_force_ratio"].is_number() || report["terminal_force_ratio"].is_null());
    assert!(report["pd"]["inner_rmse"].is_number());
    assert!(dir.join("run-pd.csv").exists() && dir.join("run-rabic.csv").exists());
}

#[test]
fn sweep_writes_table() {
    let dir = scratch("sweep");
    let cfg = write_quick(&dir);
    let out = bin()
        .args([
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--param",
            "controller.rabic.k2",
            "--values",
            "16,32",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert!(table.starts_with("value,completed,"));
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn presets_lists_and_exports() {
    let out = bin().arg("presets").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["nominal-3link", "b-analog", "d-analog"] {
        assert!(text.contains(name));
    }
    let dir = scratch("presets");
    let out = bin()
        .args(["presets", "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("nominal-3link.toml").exists());
}

#[test]
fn env_var_sets_default_output_dir() {
    let dir = scratch("env");
    let cfg = write_quick(&dir);
    let out_dir = dir.join("from-env");
    let out = bin()
        .args(["run", "--config", cfg.to_str().unwrap()])
        .env("RABIC_OUT_DIR", out_dir.to_str().unwrap())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("run-rabic.csv").exists());
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(bin().arg("no-such-command").output().unwrap().status.code(), Some(1));
    assert_eq!(
        bin()
            .args(["run", "--config", "/definitely/not/a/file.toml"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );
    let dir = scratch("badparam");
    let cfg = write_quick(&dir);
    assert_eq!(
        bin()
            .args([
                "sweep",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                dir.to_str().unwrap(),
                "--param",
                "controller.rabic.nope",
                "--values",
                "1,2",
            ])
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn numerical_abort_exits_two() {
    let dir = scratch("abort");
    // Destabilize the discrete loop with a gain far above the step-size limit.
    let cfg_text = QUICK.replace("k2 = 32.0", "k2 = 1.0e7");
    let cfg = dir.join("unstable.toml");
    std::fs::write(&cfg, cfg_text).unwrap();
    let out = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}
