use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn rainrisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rainrisk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn rv_prints_all_measures() {
    let o = rainrisk(&["rv", "--rainfall", path(&data("sample_rainfall.csv"))]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("year,RV1,RV2,RV3,RV4"));
    assert_eq!(out.lines().count(), 60);
}

#[test]
fn adf_verdicts_on_fixture() {
    let prod = data("sample_production.csv");
    let levels = stdout(&rainrisk(&["adf", "--production", path(&prod)]));
    assert!(levels.contains("5% critical value") && levels.contains("do not reject"));
    let diffs = stdout(&rainrisk(&[
        "adf",
        "--production",
        path(&prod),
        "--diff",
        "1",
    ]));
    assert!(diffs.lines().any(|l| l.contains(" 5% critical")
        && l.ends_with("reject unit root")
        && !l.ends_with("do not reject")));
}

#[test]
fn forecast_emits_json_with_errors() {
    let o = rainrisk(&[
        "forecast",
        "--production",
        path(&data("sample_production.csv")),
        "--rainfall",
        path(&data("sample_rainfall.csv")),
        "--rv",
        "RV3",
        "--variance",
        "sGARCH",
        "--order",
        "0,1,0",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["model"], "sGARCH-ARIMAX");
    assert_eq!(v["forecast"].as_array().unwrap().len(), 3);
    assert_eq!(v["mae_cumulative"].as_array().unwrap().len(), 3);
}

#[test]
fn fit_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = rainrisk(&[
        "fit",
        "--production",
        path(&data("sample_production.csv")),
        "--order",
        "1,1,0",
        "--opt-trace",
        path(&trace),
    ]);
    assert_eq!(code(&o), 0);
    let t = fs::read_to_string(&trace).unwrap();
    assert!(t.starts_with("fit,eval,f_best"));
    assert!(t.lines().count() > 2);
}

#[test]
fn grid_bundle_and_report_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let o = rainrisk(&[
        "grid",
        "--rainfall",
        path(&data("sample_rainfall.csv")),
        "--production",
        path(&data("sample_production.csv")),
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let tables = fs::read_to_string(out.join("tables.md")).unwrap();
    assert_eq!(tables.matches("### Table ").count(), 9);
    assert_eq!(
        fs::read_to_string(out.join("grid.csv"))
            .unwrap()
            .lines()
            .count(),
        129
    );
    assert_eq!(fs::read_dir(out.join("diagnostics")).unwrap().count(), 128);

    let again = dir.path().join("again");
    let o = rainrisk(&[
        "report",
        "--meta",
        path(&out.join("run_meta.json")),
        "--out",
        path(&again),
    ]);
    assert_eq!(code(&o), 0);
    for f in ["grid.csv", "tables.md", "run_meta.json"] {
        assert_eq!(
            fs::read(out.join(f)).unwrap(),
            fs::read(again.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn strict_grid_fails_on_unconverged_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let o = rainrisk(&[
        "grid",
        "--rainfall",
        path(&data("sample_rainfall.csv")),
        "--production",
        path(&data("sample_production.csv")),
        "--variance",
        "sGARCH",
        "--opt-max-evals",
        "5",
        "--strict",
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&o), 3);
    // the bundle is still written so failures can be inspected
    assert!(out.join("grid.csv").exists());
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let missing = rainrisk(&["adf", "--production", "/nonexistent.csv"]);
    assert_eq!(code(&missing), 4);

    let gap = dir.path().join("gap.csv");
    fs::write(&gap, "year,production\n2000,1\n2002,2\n").unwrap();
    assert_eq!(code(&rainrisk(&["adf", "--production", path(&gap)])), 2);

    assert_eq!(code(&rainrisk(&["grid", "--bogus"])), 2);
    let bad_order = rainrisk(&[
        "fit",
        "--production",
        path(&data("sample_production.csv")),
        "--order",
        "1,1",
    ]);
    assert_eq!(code(&bad_order), 2);
    let rv_without_rain = rainrisk(&[
        "fit",
        "--production",
        path(&data("sample_production.csv")),
        "--rv",
        "RV1",
    ]);
    assert_eq!(code(&rv_without_rain), 2);
}

#[test]
fn report_rejects_changed_data() {
    let dir = tempfile::tempdir().unwrap();
    let prod = dir.path().join("prod.csv");
    fs::copy(data("sample_production.csv"), &prod).unwrap();
    let out = dir.path().join("b");
    let o = rainrisk(&[
        "grid",
        "--rainfall",
        path(&data("sample_rainfall.csv")),
        "--production",
        path(&prod),
        "--variance",
        "iGARCH",
        "--alignment",
        "lag1",
        "--rv",
        "RV1",
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&prod)
        .unwrap()
        .replacen("1962,", "1962,1", 1);
    fs::write(&prod, text).unwrap();
    let o = rainrisk(&[
        "report",
        "--meta",
        path(&out.join("run_meta.json")),
        "--out",
        path(&dir.path().join("c")),
    ]);
    assert_eq!(code(&o), 2);
}
