use std::path::Path;
use std::process::{Command, Output};

use nearfield_bench::table::{self, COLUMNS};

fn nfbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nfbench")).args(args).output().expect("running nfbench")
}

fn run_grid(out: &Path) {
    let o = nfbench(&[
        "--out",
        out.to_str().unwrap(),
        "grid",
        "--l-min",
        "4",
        "--l-max",
        "5",
        "--i-min",
        "0",
        "--i-max",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_exits_zero() {
    let o = nfbench(&["verify", "--instances", "6"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("ok"));
}

#[test]
fn grid_csv_round_trips_and_fits() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("grid.csv");
    run_grid(&csv_path);

    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
    let rows = table::read_rows(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| !r.is_skipped()));
    let mut again = Vec::new();
    table::write_rows(&mut again, &rows).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), text);

    let json_path = dir.path().join("coeffs.json");
    let o = nfbench(&["--out", json_path.to_str().unwrap(), "fit", csv_path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    for v in [&doc["alpha"], &doc["beta"], &doc["gamma"], &doc["lambda_ram"]["mean"], &doc["lambda_gpu"]["mean"]] {
        let v = v.as_f64().expect("numeric coefficient");
        assert!(v.is_finite() && v >= 0.0, "{v}");
    }

    let o = nfbench(&["predict", "--n", "65536", "--coefficients", json_path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn predict_reports_published_optimum() {
    let o = nfbench(&["predict", "--n", "100000", "--l", "8", "--t", "15", "--d", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["n_optimal"].as_f64().unwrap() - 530_880.0).abs() < 1e-6);
    assert_eq!(v["adjusted"]["published_one_level_gain"].as_f64(), Some(17.0));
}

#[test]
fn oversized_cells_are_skipped_with_reason() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("big.csv");
    let o = nfbench(&[
        "--out",
        out.to_str().unwrap(),
        "grid",
        "--l-min",
        "5",
        "--l-max",
        "5",
        "--i-min",
        "0",
        "--i-max",
        "0",
        "--max-layout-mib",
        "0",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = table::read_rows(std::fs::File::open(&out).unwrap()).unwrap();
    assert!(rows[0].is_skipped());
    let skips = std::fs::read_to_string(dir.path().join("big.csv.skipped")).unwrap();
    assert!(skips.starts_with("1024,15,5,0,"), "{skips}");
}
