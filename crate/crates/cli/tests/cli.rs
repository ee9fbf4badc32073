use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optospring"))
        .args(args)
        .output()
        .expect("spawn optospring")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn analyze_aligo_is_stable() {
    let o = run(&["analyze", "--preset", "aligo", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["stable"], true);
    assert_eq!(v["roots"]["stable"], true);
    assert_eq!(v["roots"]["roots"].as_array().unwrap().len(), 6);
    assert!(v["roots"]["roots"][0]["re"].as_f64().unwrap() < 0.0);
}

#[test]
fn zero_detuning_exits_unstable() {
    let o = run(&["analyze", "--preset", "aligo", "--delta-hz", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(
        &path,
        "topology = \"aligo\"\ngamma_w_hz = 1.5\ngamma_s_hz = \"fast\"\n",
    )
    .unwrap();
    let o = run(&["analyze", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma_s_hz"));
}

#[test]
fn config_file_matches_preset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("aligo.toml");
    fs::write(
        &path,
        "topology = \"aligo\"\ngamma_w_hz = 1.5\ngamma_s_hz = 0.3\ndelta_w_hz = -23.0\ndelta_s_hz = 42.4\n\
         delta_hz = 1.51\nmass_kg = 40\narm_length_m = 4000\ncirculating_power_w = 24000\n",
    )
    .unwrap();
    let a = run(&[
        "analyze",
        "--config",
        path.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    let b = run(&["analyze", "--preset", "aligo", "--format", "csv"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn two_point_susceptibility() {
    let o = run(&[
        "susceptibility",
        "--preset",
        "aligo",
        "--omega-min-hz",
        "1",
        "--omega-max-hz",
        "100",
        "--points",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "omega_rad_s,chi_re,chi_im,chi_abs");
    assert_eq!(lines.len(), 3);
}

#[test]
fn susceptibility_rejects_bad_grid() {
    let o = run(&[
        "susceptibility",
        "--preset",
        "aligo",
        "--omega-min-hz",
        "5",
        "--omega-max-hz",
        "1",
        "--points",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn steered_susceptibility_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chi.csv");
    let o = run(&[
        "susceptibility",
        "--preset",
        "aligo",
        "--omega-min-hz",
        "1",
        "--omega-max-hz",
        "100",
        "--points",
        "50",
        "--delta-offset-hz",
        "-0.5",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 51);
}

#[test]
fn sweep_changes_sign_below_table_detuning() {
    let o = run(&[
        "sweep", "--preset", "aligo", "--param", "delta_hz", "--from", "0", "--to", "3", "--steps",
        "31",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 31);
    let change = rows
        .windows(2)
        .find(|w| w[0].1 > 0.0 && w[1].1 < 0.0)
        .expect("sign change");
    assert!(change[1].0 <= 1.51);
}

#[test]
fn single_step_sweep_matches_analyze() {
    let o = run(&[
        "sweep", "--preset", "aligo", "--param", "delta_hz", "--from", "1.51", "--to", "9",
        "--steps", "1",
    ]);
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "true");
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn unknown_sweep_parameter() {
    let o = run(&[
        "sweep", "--preset", "aligo", "--param", "mass", "--from", "0", "--to", "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("param"));
}

#[test]
fn output_is_deterministic() {
    let args = [
        "sweep",
        "--preset",
        "msi",
        "--param",
        "circulating_power_w",
        "--from",
        "0.01",
        "--to",
        "2",
        "--steps",
        "40",
    ];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let a = run(&["analyze", "--preset", "msi-equal"]);
    assert_eq!(a.stdout, run(&["analyze", "--preset", "msi-equal"]).stdout);
}

#[test]
fn preset_list() {
    let o = run(&["preset-list"]);
    let text = stdout(&o);
    for name in ["aligo", "aligo-equal", "msi", "msi-equal"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{name},"))));
    }
    let j = run(&["preset-list", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
}

#[test]
fn unknown_preset() {
    let o = run(&["analyze", "--preset", "virgo"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("virgo"));
}
