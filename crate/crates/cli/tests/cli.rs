use std::process::{Command, Output};

fn vbmesh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vbmesh"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn mesh_dump_csv_layout() {
    let o = vbmesh(&[
        "mesh", "dump", "--a", "5", "--q", "0.5", "--eps", "1e-4", "--n", "8",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "i,t_i,x_i,h_i");
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[1], "0,0e0,0e0,");
    let last: Vec<&str> = lines[9].split(',').collect();
    assert_eq!(last[..3], ["8", "1e0", "1e0"]);
    let x: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(x.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn mesh_dump_json() {
    let o = vbmesh(&[
        "mesh", "dump", "--eps", "1e-6", "--n", "16", "--format", "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 17);
    assert_eq!(v["grading"]["kind"], "bakhvalov");
    assert!(v["alpha"].as_f64().unwrap() < 0.5);
}

#[test]
fn system_dump_rows() {
    let o = vbmesh(&[
        "system",
        "dump",
        "--a",
        "5",
        "--eps",
        "1e-3",
        "--n",
        "8",
        "--precondition",
        "on",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("i,lower,diag,upper,rhs"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[0][1..], [0.0, 1.0, 0.0, 0.0]);
    for r in &rows[1..8] {
        assert!(r[1] <= 0.0 && r[3] <= 0.0 && r[2] > 0.0);
    }
}

#[test]
fn certify_passes_for_default_constants() {
    let o = vbmesh(&[
        "certify", "--a", "5", "--q", "0.5", "--eps", "1e-8", "--n", "512",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("delta"));
    assert!(!text.contains("FAIL"));
    let record: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(record["pass"], true);
    assert!((record["delta"].as_f64().unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn certify_fails_with_small_shift() {
    // Too small a shift lets the linear part of the barrier go negative.
    let o = vbmesh(&["certify", "--eps", "1e-8", "--n", "512", "--c-shift", "1.2"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn study_with_config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    let out = dir.path().join("report.csv");
    std::fs::write(
        &cfg,
        "# small sweep\nn-list = 64, 128\neps-list = 1e-2, 1e-6\nformat = md\n",
    )
    .unwrap();
    let o = vbmesh(&[
        "study",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "N,eps,error,rate,kappa_raw,kappa_precond,inv_norm,min_sigma,lemma1_max,flags"
    );
    assert_eq!(lines.len(), 5);
}

#[test]
fn study_rejects_bad_values() {
    let o = vbmesh(&["study", "--precondition", "sometimes"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("precondition"));
}

#[test]
fn study_exits_2_when_a_check_fails() {
    // Too small a shift: the barrier is not positive.
    let o = vbmesh(&[
        "study",
        "--n-list",
        "64",
        "--eps-list",
        "1e-6",
        "--c-shift",
        "1.2",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(!v["records"][0]["flags"].as_array().unwrap().is_empty());
}
