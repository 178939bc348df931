mod common;

use std::fs;

use rainrisk::eval::{Alignment, GridConfig};
use rainrisk::garch::VarianceFamily;
use rainrisk::io::{bundle_digest, emit_reports_with, RunConfig, RunMeta};
use rainrisk::risk::RiskVariant;

fn small_run(out: Option<std::path::PathBuf>) -> RunConfig {
    RunConfig {
        rainfall_path: common::rainfall_fixture(),
        production_path: common::production_fixture(),
        grid: GridConfig {
            families: vec![VarianceFamily::SGarch],
            alignments: vec![Alignment::Lag1],
            rvs: vec![RiskVariant::RV3],
            ..GridConfig::default()
        },
        out_dir: out,
    }
}

#[test]
fn bundle_layout_and_hash_stamping() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let run = small_run(Some(out.clone()));
    let grid = run.run().unwrap();
    let bundle = emit_reports_with(&grid, Some(&run), &out).unwrap();

    let csv = fs::read_to_string(out.join("grid.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("family,alignment,rv,model,aic_raw,aic_per_obs"));
    assert!(header.ends_with("converged,config_hash"));
    assert_eq!(csv.lines().count(), 1 + 4);
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.ends_with(&bundle.config_hash)));

    let diag: Vec<_> = fs::read_dir(out.join("diagnostics")).unwrap().collect();
    assert_eq!(diag.len(), 4);
    let one =
        fs::read_to_string(out.join("diagnostics/sGARCH_lag1_RV3_GARCH-ARIMAX.json")).unwrap();
    assert!(one.contains(&bundle.config_hash));

    let tables = fs::read_to_string(out.join("tables.md")).unwrap();
    assert!(tables.contains("### Table 1:"));

    let meta = RunMeta::read(out.join("run_meta.json")).unwrap();
    assert_eq!(meta.config_hash, bundle.config_hash);
    assert_eq!(meta.cells, 4);
}

#[test]
fn rewrite_replaces_existing_bundle_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("stale.txt"), "old").unwrap();

    let run = small_run(Some(out.clone()));
    let grid = run.run().unwrap();
    emit_reports_with(&grid, Some(&run), &out).unwrap();
    assert!(!out.join("stale.txt").exists());

    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(leftovers, vec!["bundle".to_string()]);
}

#[test]
fn meta_reproduces_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let run = small_run(Some(first.clone()));
    emit_reports_with(&run.run().unwrap(), Some(&run), &first).unwrap();

    let replay = RunMeta::read(first.join("run_meta.json"))
        .unwrap()
        .run_config()
        .unwrap();
    let second = dir.path().join("second");
    emit_reports_with(&replay.run().unwrap(), Some(&replay), &second).unwrap();
    assert_eq!(
        bundle_digest(&first).unwrap(),
        bundle_digest(&second).unwrap()
    );
}

#[test]
fn config_hash_tracks_settings_not_paths() {
    let a = small_run(None);
    let mut b = small_run(Some("/elsewhere".into()));
    let ga = a.run().unwrap();
    let gb = b.run().unwrap();
    assert_eq!(ga.metadata.config_hash, gb.metadata.config_hash);

    b.grid.seed += 1;
    assert_ne!(
        b.grid.hash_with(&ga.metadata.data_hash),
        a.grid.hash_with(&ga.metadata.data_hash)
    );
}
