//! End-to-end checks of the `pisim` binary: schema stability,
//! determinism across worker counts, dry runs, and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pisim"))
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("test.config");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"
[market]
r = 0.04

[model]
regimes = [ { mu = 0.14, sigma = 0.16 }, { mu = -0.01, sigma = 0.20 } ]
generator = [ [-0.25, 0.25], [0.25, -0.25] ]

[sim]
paths = 100
seed = 42
rebalance = ["weekly", "monthly"]
"#;

#[test]
fn golden_metrics_schema_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let status = bin()
        .args(["--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let got = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let want = include_str!("data/golden_metrics.csv");
    assert_eq!(got, want, "metrics.csv drifted from the golden file");
}

#[test]
fn byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut outputs = Vec::new();
    for workers in ["1", "8"] {
        let out = dir.path().join(format!("out_{workers}"));
        let status = bin()
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--workers", workers])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(out.join("metrics.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run_{run}"));
        assert!(bin()
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap()
            .success());
        outputs.push(fs::read(out.join("metrics.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn dry_run_prints_matrix_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let result = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--dry-run")
        .output()
        .unwrap();
    assert!(result.status.success());
    let stdout = String::from_utf8(result.stdout).unwrap();
    assert!(stdout.contains("experiment matrix"), "{stdout}");
    assert!(stdout.contains("weekly"), "{stdout}");
    assert!(!out.exists(), "dry run must not create outputs");
}

#[test]
fn config_errors_exit_code_1() {
    let dir = tempfile::tempdir().unwrap();

    // Missing file.
    let status = bin()
        .args(["--config", "/definitely/not/here.config"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // Generator row not summing to zero.
    let bad = write_config(
        dir.path(),
        r#"
[market]
r = 0.04

[model]
regimes = [ { mu = 0.14, sigma = 0.16 }, { mu = -0.01, sigma = 0.20 } ]
generator = [ [-0.25, 0.30], [0.25, -0.25] ]
"#,
    );
    let result = bin().arg("--config").arg(&bad).output().unwrap();
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("row 0"), "{stderr}");

    // Unparseable TOML.
    let broken = dir.path().join("broken.config");
    fs::write(&broken, "[market\nr = 1").unwrap();
    let status = bin().arg("--config").arg(&broken).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn numeric_failures_exit_code_2_and_remove_partial_output() {
    // A hopelessly narrow inversion grid aliases the density and fails
    // the containment check inside the first cell.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[market]
r = 0.04

[model]
regimes = [ { mu = 0.14, sigma = 0.16 }, { mu = -0.01, sigma = 0.20 } ]
generator = [ [-0.25, 0.25], [0.25, -0.25] ]
fft_width_sigmas = 1.0

[sim]
paths = 10
rebalance = ["monthly"]
"#,
    );
    let out = dir.path().join("out");
    let result = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("grid too narrow"), "{stderr}");
    // No partial CSVs left behind.
    if out.exists() {
        assert_eq!(fs::read_dir(&out).unwrap().count(), 0);
    }
}

#[test]
fn finer_monitoring_grid_runs_end_to_end() {
    // Weekly rebalancing monitored on a 5x finer market grid.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[market]
r = 0.04

[model]
regimes = [ { mu = 0.14, sigma = 0.16 }, { mu = -0.01, sigma = 0.20 } ]
generator = [ [-0.25, 0.25], [0.25, -0.25] ]

[sim]
paths = 50
seed = 7
rebalance = ["weekly"]
monitor_substeps = 5
"#,
    );
    let out = dir.path().join("out");
    assert!(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 7); // header + 2 strategies x 3 CLs
}

#[test]
fn rolling_vbpi_base_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[market]
r = 0.04

[model]
regimes = [ { mu = 0.14, sigma = 0.16 }, { mu = -0.01, sigma = 0.20 } ]
generator = [ [-0.25, 0.25], [0.25, -0.25] ]

[strategy]
vbpi_base = "rolling"

[sim]
paths = 200
seed = 11
rebalance = ["monthly"]
"#,
    );
    let out = dir.path().join("out");
    assert!(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 7);
}

#[test]
fn overrides_take_precedence_over_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    assert!(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--paths", "50", "--seed", "7"])
        .status()
        .unwrap()
        .success());
    let tv = fs::read_to_string(out.join("terminal_values_cppi_weekly_90.csv")).unwrap();
    // Header plus 50 value rows.
    assert_eq!(tv.lines().count(), 51);
}

#[test]
fn distribution_dump_flag_emits_per_frequency_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    assert!(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--paths", "10"])
        .arg("--dump-distributions")
        .status()
        .unwrap()
        .success());
    let dump = fs::read_to_string(out.join("distributions_weekly.csv")).unwrap();
    let mut lines = dump.lines();
    assert_eq!(lines.next().unwrap(), "t,s,pdf,cdf");
    // 52 rebalance dates x 8192 grid nodes.
    assert_eq!(dump.lines().count() - 1, 52 * 8192);
}
