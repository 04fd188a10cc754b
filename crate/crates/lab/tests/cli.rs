mod common;

use common::*;

#[test]
fn identities_exit_codes() {
    let round = write_config("cli-round", &family(12, &[(2, 0, 1.0)], &[]));
    assert_eq!(lab(&["identities", round.to_str().unwrap()]).status.code(), Some(0));
    let c = write_config("cli-small", &family(12, &[(2, 0, 1.0)], &[0.01]));
    assert_eq!(lab(&["identities", c.to_str().unwrap(), "--corrupt-H"]).status.code(), Some(1));
}

#[test]
fn configuration_errors_exit_2() {
    let c = write_config("cli-l1", &family(12, &[(1, 0, 1.0)], &[0.01]));
    let out = lab(&["identities", c.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
    let c = write_config("cli-big", &family(12, &[(2, 0, 1.0)], &[]));
    assert_eq!(lab(&["report", c.to_str().unwrap(), "--t", "0.3"]).status.code(), Some(2));
    let empty = write_config("cli-empty", &family(12, &[(2, 0, 1.0)], &[]));
    let dir = std::env::temp_dir().join(format!("cmc-lab-{}-sweep-empty", std::process::id()));
    let out = lab(&["sweep", empty.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(lab(&["report", "/nonexistent/config.json", "--t", "0"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_and_summary() {
    let c = write_config("cli-sweep", &family(12, &[(2, 0, 1.0)], &[0.02, 0.01]));
    let dir = std::env::temp_dir().join(format!("cmc-lab-{}-sweep", std::process::id()));
    let out = lab(&["sweep", c.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(matches!(out.status.code(), Some(0 | 1)));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], "1");
    assert_eq!(summary["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn report_is_byte_identical_across_thread_counts() {
    let c = write_config("cli-det", &family(12, &[(2, 0, 1.0), (4, 2, 0.5)], &[]));
    let a = lab(&["report", c.to_str().unwrap(), "--t", "0.01"]);
    let b = std::process::Command::new(env!("CARGO_BIN_EXE_lab"))
        .args(["report", c.to_str().unwrap(), "--t", "0.01"])
        .env("LAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
