use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_aoa-pla-lab");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("AOA_PLA_SEED")
        .env_remove("AOA_PLA_INJECT_S1_FAULT")
        .output()
        .expect("spawn aoa-pla-lab")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SWEEP: &str = r#"
[array]
elements = 8

[link]
snr_db = 0.0
snapshots = 10

[spoofer]
offset_deg = 1.0
antennas = 2

[monte_carlo]
trials = 300
seed = 7

[sweep]
axis = "snr_db"
values = [-5, 0, 5]
"#;

#[test]
fn single_element_array_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[array]\nelements = 1\n");
    let out = run(&["analytic", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("array.elements") && msg.contains("M >= 2"), "{msg}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo.toml", "[array]\nelemnts = 8\n");
    let out = run(&["analytic", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn analytic_reports_the_default_point() {
    let out = run(&["analytic"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for key in ["crb_k", "tau_deg", "p_fa"] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
    assert!(!text.contains("p_sd"), "{text}");
}

#[test]
fn analytic_reports_spoofing_terms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "spoof.toml", "[spoofer]\noffset_deg = 0.25\n");
    let out = run(&["analytic", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for key in ["mcrb_k", "theta0_deg", "delta_deg", "p_sd"] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
}

#[test]
fn sweep_csv_has_header_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "snr.toml", SWEEP);
    let out = run(&["sweep", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# aoa-pla-lab v0.1.0 seed=7"));
    let columns: Vec<&str> = lines.next().unwrap().split(',').collect();
    for col in ["axis", "value", "crb_k", "mcrb_k", "theta0_deg", "tau_deg", "p_fa", "p_sd", "p_sd_hat", "ci_low", "ci_high"] {
        assert!(columns.contains(&col), "missing column {col}: {columns:?}");
    }
    assert_eq!(lines.count(), 3);
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "snr.toml", SWEEP);
    let out = run(&["sweep", "--config", &cfg, "--seed", "99"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("# aoa-pla-lab v0.1.0 seed=99\n"));
}

#[test]
fn empirical_csv_is_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "snr.toml", SWEEP);
    let csv = |workers: &str| {
        let out = run(&["--workers", workers, "sweep", "--config", &cfg, "--empirical"]);
        assert!(out.status.success(), "{}", stderr(&out));
        out.stdout
    };
    let reference = csv("1");
    let text = String::from_utf8_lossy(&reference).into_owned();
    let mut lines = text.lines().skip(1);
    let columns: Vec<&str> = lines.next().unwrap().split(',').collect();
    let hat = columns.iter().position(|&c| c == "p_sd_hat").unwrap();
    for line in lines {
        assert!(!line.split(',').nth(hat).unwrap().is_empty(), "{line}");
    }
    for workers in ["1", "4", "16"] {
        assert_eq!(csv(workers), reference, "--workers {workers}");
    }
}

#[test]
fn zero_workers_is_a_usage_error() {
    let out = run(&["--workers", "0", "analytic"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn injected_s1_fault_fails_validation() {
    let out = run(&["validate", "--trials", "200", "--inject-s1-fault"]);
    assert_eq!(out.status.code(), Some(1));
    let all = stdout(&out) + &stderr(&out);
    assert!(all.contains("FAIL [closed-form] S1 vs direct summation"), "{all}");
}

#[test]
fn fault_can_be_injected_from_the_environment() {
    let out = Command::new(BIN)
        .args(["validate", "--trials", "200"])
        .env("AOA_PLA_INJECT_S1_FAULT", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("S1 vs direct summation"), "{}", stderr(&out));
}

#[test]
fn preset_plot_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("figs");
    let out = run(&["preset", "fig3", "--plot", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let svg = std::fs::read_to_string(out_dir.join("fig3.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(out_dir.join("fig3.csv").exists());
}

#[test]
fn plot_without_out_is_a_usage_error() {
    let out = run(&["preset", "fig1", "--plot"]);
    assert_eq!(out.status.code(), Some(2));
}
