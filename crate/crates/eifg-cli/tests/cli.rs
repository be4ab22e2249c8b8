//! End-to-end checks of the `eifg` binary and the harness library: exit
//! codes, output files, determinism and the snapshot contract.

use eifg_cli::{cmd_converge, cmd_simulate, config, read_snapshot};
use std::path::Path;
use std::process::Command;

fn eifg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eifg"))
}

fn write_config(dir: &Path, name: &str, json: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn validated(json: &str) -> config::Validated {
    let raw: config::RunConfig = serde_json::from_str(json).unwrap();
    config::validate(&raw).unwrap()
}

#[test]
fn exit_code_0_on_success() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ok.json",
        &format!(
            r#"{{"problem":"heat","params":{{"dims":1}},"scheme":"eifg1","grid":[16],
                "t_final":0.5,"n_steps":4,"output_dir":"{}"}}"#,
            dir.path().join("out").display()
        ),
    );
    let status = eifg()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn exit_code_2_on_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"problem":"heat","scheme":"eifg1","grid":[16],"t_final":0.5,"n_steps":4,"typo_key":1}"#,
    );
    let out = eifg()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
}

#[test]
fn exit_code_3_on_blow_up_with_partial_outputs_and_marker() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    // interface far too thin for the step size: the explicit stages diverge
    let cfg = write_config(
        dir.path(),
        "boom.json",
        &format!(
            r#"{{"problem":"mcf","params":{{"epsilon":1e-4,"dims":2}},"scheme":"eifg2",
                "grid":[16,16],"t_final":1.0,"n_steps":2,"snapshot_stride":1,
                "output_dir":"{}"}}"#,
            out_dir.display()
        ),
    );
    let out = eifg()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out_dir.join("BLOWUP.txt").exists());
    // the initial snapshot and diagnostics row were still written
    assert!(out_dir.join("snapshot_00000000.eifg").exists());
    let csv = std::fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    assert!(csv.lines().count() >= 2);
}

#[test]
fn exit_code_4_on_unwritable_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let cfg = write_config(
        dir.path(),
        "io.json",
        &format!(
            r#"{{"problem":"heat","params":{{"dims":1}},"scheme":"eifg1","grid":[16],
                "t_final":0.5,"n_steps":4,"output_dir":"{}"}}"#,
            blocker.join("nested").display()
        ),
    );
    let out = eifg()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn heat_smoke_final_snapshot_matches_decayed_initial_data() {
    let dir = tempfile::tempdir().unwrap();
    let v = validated(&format!(
        r#"{{"problem":"heat","params":{{"dims":1}},"scheme":"eifg2","grid":[64],
            "t_final":1.0,"n_steps":16,"output_dir":"{}"}}"#,
        dir.path().display()
    ));
    let report = cmd_simulate(&v).unwrap();
    let first = read_snapshot(&report.snapshots[0]).unwrap();
    let last = read_snapshot(report.snapshots.last().unwrap()).unwrap();
    assert_eq!(first.time, 0.0);
    assert_eq!(last.time, 1.0);
    let decay = (-1.0f64).exp();
    for (a, b) in first.values.iter().zip(last.values.iter()) {
        assert!((a * decay - b).abs() < 1e-10, "{a} {b}");
    }
}

#[test]
fn converge_with_finest_reference_excludes_finest_row() {
    let dir = tempfile::tempdir().unwrap();
    let v = validated(&format!(
        r#"{{"problem":"mcf","params":{{"epsilon":0.1,"dims":2}},"scheme":"eifg2",
            "grid":[32,32],"t_final":0.02,"n_steps":[4,8,16,32],"reference":"finest",
            "output_dir":"{}"}}"#,
        dir.path().display()
    ));
    let report = cmd_converge(&v, 1).unwrap();
    assert_eq!(report.table.records.len(), 3);
    assert_eq!(
        report
            .table
            .records
            .iter()
            .map(|r| r.n_steps)
            .collect::<Vec<_>>(),
        vec![4, 8, 16]
    );
    // errors against the finest run still shrink at second order
    let r = report.table.rates[2][0].unwrap();
    assert!((r - 2.0).abs() < 0.6, "rate {r}");
}

#[test]
fn converge_exact_reference_requires_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    let v = validated(&format!(
        r#"{{"problem":"mcf","params":{{"epsilon":0.1,"dims":2}},"scheme":"eifg2",
            "grid":[16,16],"t_final":0.02,"n_steps":[4,8],"reference":"exact",
            "output_dir":"{}"}}"#,
        dir.path().display()
    ));
    let err = cmd_converge(&v, 1).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn converge_csv_is_deterministic_for_fixed_config_and_seed() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let v = validated(&format!(
            r#"{{"problem":"fh","scheme":"eifg2","grid":[8,8,8],"t_final":0.05,
                "n_steps":[2,4,8],"reference":"finest","seed":11,"output_dir":"{}"}}"#,
            dir.path().display()
        ));
        let report = cmd_converge(&v, 1).unwrap();
        let text = std::fs::read_to_string(&report.csv_path).unwrap();
        // timing column is exempt from determinism: strip it
        text.lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn single_entry_sweep_yields_one_row_without_rates() {
    let dir = tempfile::tempdir().unwrap();
    let v = validated(&format!(
        r#"{{"problem":"heat","params":{{"dims":1}},"scheme":"eifg2","grid":[32],
            "t_final":1.0,"n_steps":[8],"reference":"exact","output_dir":"{}"}}"#,
        dir.path().display()
    ));
    let report = cmd_converge(&v, 1).unwrap();
    assert_eq!(report.table.records.len(), 1);
    assert_eq!(report.table.rates[0], [None; 3]);
    let csv = std::fs::read_to_string(&report.csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N_T,N_1,e0,CR0,e1,CR1,e2,CR2,sec_per_step"
    );
    let row = lines.next().unwrap();
    assert!(row.contains(",,"), "empty CR cells expected: {row}");
}

#[test]
fn bench_single_resolution_has_empty_factor() {
    let dir = tempfile::tempdir().unwrap();
    let v = validated(&format!(
        r#"{{"problem":"heat","params":{{"dims":1}},"scheme":"eifg1","grid":[64],
            "t_final":0.1,"n_steps":8,"output_dir":"{}"}}"#,
        dir.path().display()
    ));
    let report = eifg_cli::cmd_bench(&v).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert!(report.rows[0].growth_factor.is_none());
    let csv = std::fs::read_to_string(&report.csv_path).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(','));
}

#[test]
fn parallel_sweep_matches_serial_results() {
    let run = |jobs: usize| {
        let dir = tempfile::tempdir().unwrap();
        let v = validated(&format!(
            r#"{{"problem":"heat","params":{{"dims":2}},"scheme":"eifg2","grid":[16,16],
                "t_final":0.5,"n_steps":[2,4,8,16],"reference":"exact","output_dir":"{}"}}"#,
            dir.path().display()
        ));
        cmd_converge(&v, jobs)
            .unwrap()
            .table
            .records
            .iter()
            .map(|r| r.errors)
            .collect::<Vec<_>>()
    };
    assert_eq!(run(1), run(2));
}
