//! End-to-end checks of the binary: subcommands, file outputs, exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oversmooth"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("oversmooth-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tmp_dir("run");
    let out = run_in(
        &dir,
        &[
            "run", "--methods", "gcn,gin2", "--depth", "4", "--seeds", "2", "--dim", "4", "--out",
            "trace.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("verdict"));
    assert!(stdout.contains("gcn"));
    let csv = std::fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert!(csv.starts_with("method,seed,layer,state_norm,energy_unnorm,energy_sym,rod,status\n"));
    // 2 methods x 2 seeds x 4 layers + header
    assert_eq!(csv.lines().count(), 17);
}

#[test]
fn run_rejects_unknown_method_with_usage_exit() {
    let dir = tmp_dir("badmethod");
    let out = run_in(&dir, &["run", "--methods", "gcn,bogus", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn usage_error_is_exit_two() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plot_renders_svg_from_csv() {
    let dir = tmp_dir("plot");
    let run_out = run_in(
        &dir,
        &[
            "run", "--methods", "gcn,gat", "--depth", "6", "--seeds", "2", "--dim", "4", "--out",
            "trace.csv",
        ],
    );
    assert!(run_out.status.success());
    let plot_out = run_in(
        &dir,
        &["plot", "trace.csv", "--metric", "rod", "--out", "rod.svg"],
    );
    assert!(
        plot_out.status.success(),
        "{}",
        String::from_utf8_lossy(&plot_out.stderr)
    );
    let svg = std::fs::read_to_string(dir.join("rod.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn plot_rejects_unknown_metric() {
    let dir = tmp_dir("badmetric");
    std::fs::write(
        dir.join("trace.csv"),
        "method,seed,layer,state_norm,energy_unnorm,energy_sym,rod,status\n",
    )
    .unwrap();
    let out = run_in(
        &dir,
        &["plot", "trace.csv", "--metric", "nope", "--out", "x.svg"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_on_custom_edge_list() {
    let dir = tmp_dir("dataset");
    std::fs::write(dir.join("tiny.edges"), "# triangle\n0 1\n1 2\n2 0\n").unwrap();
    let out = run_in(
        &dir,
        &[
            "run", "--methods", "gcn", "--depth", "3", "--seeds", "1", "--dim", "2", "--dataset",
            "tiny.edges", "--out", "t.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tmp_dir("verify");
    let out = run_in(&dir, &["verify", "--out", "report.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report = std::fs::read_to_string(dir.join("report.json")).unwrap();
    assert!(report.contains("\"passed\": true"));
    for family in [
        "power_iteration",
        "kron_power",
        "matrix_remark",
        "over_smoothing_limits",
        "jordan_blocks",
        "energy_bound",
        "energy_rod_implication",
    ] {
        assert!(report.contains(family), "report misses {family}");
    }
    // exactly the seven families
    assert_eq!(report.matches("\"name\":").count(), 7);
}

#[test]
fn verify_sabotage_fails_with_exit_one() {
    let dir = tmp_dir("sabotage");
    let out = run_in(&dir, &["verify", "--sabotage", "kron"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
