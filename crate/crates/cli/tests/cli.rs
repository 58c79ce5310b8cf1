use std::process::{Command, Output};

fn hmstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmstab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SQUARE: &str = r#"json:{"p":[[0,0],[0,0],[1,0]],"q":[[1,0]],"orientation":"holo"}"#;

#[test]
fn energy_of_z_squared_is_eight_pi() {
    let o = hmstab(&["energy", "--map", SQUARE]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("# config: {"));
    let line = out.lines().find(|l| l.starts_with("energy/pi ")).unwrap();
    let v: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((v - 8.0).abs() < 1e-9, "{line}");
    assert!(line.contains('±'));
}

#[test]
fn map_can_come_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(&path, r#"{"p":[[0,0],[1,0]],"q":[[1,0]],"orientation":"anti"}"#).unwrap();
    let o = hmstab(&["degree", "--map", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o).lines().find(|l| l.starts_with("degree ")).unwrap().to_string();
    let v: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((v + 1.0).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(hmstab(&["energy"]).status.code(), Some(1));
    assert_eq!(hmstab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hmstab(&["energy", "--map", "json:{not json"]).status.code(), Some(1));
    assert_eq!(hmstab(&["project", "--field", "build:10"]).status.code(), Some(1));
    assert_eq!(hmstab(&["--tol", "-1", "selftest"]).status.code(), Some(1));
    assert_eq!(hmstab(&["--help"]).status.code(), Some(0));
}

#[test]
fn reducible_maps_are_rejected() {
    let m = r#"json:{"p":[[-1,0],[0,0],[1,0]],"q":[[1,0],[1,0]],"orientation":"holo"}"#;
    let o = hmstab(&["energy", "--map", m]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("share a factor"));
}

#[test]
fn unconverged_projection_exits_with_two() {
    let init = "json:[1.02,0.01,-0.03,0.02,0.05,-200.5,0.001,-0.002,0.0001,0.0002]";
    let o = hmstab(&["project", "--field", "build:10,0.01", "--init", init, "--max-iter", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("converged false"));
}

#[test]
fn map_orientation_defaults_to_holomorphic() {
    let o = hmstab(&["energy", "--map", r#"json:{"p":[[0,-200],[0,0],[1,0]],"q":[[1,0]]}"#]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o).lines().find(|l| l.starts_with("energy/pi ")).unwrap().to_string();
    let v: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((v - 8.0).abs() < 1e-9);
}

#[test]
fn selftest_passes() {
    let o = hmstab(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn gram_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("j.csv");
    let o = hmstab(&["gram", "--r", "10", "--csv", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("# config: "));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 10);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("j.csv.json")).unwrap()).unwrap();
    assert_eq!(meta["converged"], true);
    assert_eq!(stdout(&o).lines().filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit())).count(), 55);
}

#[test]
fn asym_check_lists_every_expanded_entry() {
    let o = hmstab(&["asym-check", "--r", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<String> = stdout(&o).lines().skip(2).map(String::from).collect();
    assert_eq!(rows.len(), 18);
    for row in rows {
        let diff: f64 = row.split(',').nth(7).unwrap().parse().unwrap();
        assert!(diff < 1e-3, "{row}");
        assert!(row.ends_with(",PASS"), "{row}");
    }
}

#[test]
fn project_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let o = hmstab(&["project", "--field", "build:10,0.01", "--init", "alpha_r", "--json", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["result"]["converged"], true);
    assert!(v["scaled_distance_to_alpha_r"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["config"]["command"], "project");
}

#[test]
fn stability_probe_is_seeded() {
    let a = hmstab(&["stability-probe", "--r", "8", "--trials", "2", "--seed", "3"]);
    let b = hmstab(&["stability-probe", "--r", "8", "--trials", "2", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    assert!(out.lines().nth(1).unwrap().starts_with("trial,deficit,deficit_err"));
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 3);
}
