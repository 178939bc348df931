mod common;

use std::fs;
use std::path::PathBuf;

use rainrisk::io::{ingest_production, ingest_rainfall, regressor_csv};
use rainrisk::risk::{RiskConfig, RiskVariant};
use rainrisk::Error;

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn rainfall_body(years: std::ops::RangeInclusive<i32>, skip: Option<(i32, u32)>) -> String {
    let mut s = String::from("year,month,rainfall_mm\n");
    for y in years {
        for m in 1..=12 {
            if skip != Some((y, m)) {
                s.push_str(&format!("{y},{m},{}\n", 10.0 * m as f64));
            }
        }
    }
    s
}

#[test]
fn bundled_fixtures_load() {
    let rain = ingest_rainfall(common::rainfall_fixture()).unwrap();
    let prod = ingest_production(common::production_fixture()).unwrap();
    assert_eq!(rain.start_year(), prod.start_year());
    assert_eq!(rain.end_year(), prod.end_year());
    assert!(!prod.unit().is_empty());
}

#[test]
fn missing_month_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "r.csv", &rainfall_body(1974..=1976, Some((1975, 6))));
    let err = ingest_rainfall(&p).unwrap_err();
    assert!(matches!(err, Error::Schema(_)), "{err}");
    assert!(err.to_string().contains("1975 month 6 missing"), "{err}");
}

#[test]
fn negative_and_duplicate_rainfall_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let neg = rainfall_body(1990..=1990, None).replace("1990,3,30", "1990,3,-4");
    let err = ingest_rainfall(write(&dir, "neg.csv", &neg)).unwrap_err();
    assert!(matches!(err, Error::Validation(_)), "{err}");

    let dup = rainfall_body(1990..=1990, None) + "1990,4,1.0\n";
    let err = ingest_rainfall(write(&dir, "dup.csv", &dup)).unwrap_err();
    assert!(err.to_string().contains("duplicate"), "{err}");
}

#[test]
fn non_numeric_rainfall_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let body = rainfall_body(1990..=1990, None).replace("1990,5,50", "1990,5,wet");
    match ingest_rainfall(write(&dir, "bad.csv", &body)).unwrap_err() {
        Error::Parse { line, .. } => assert_eq!(line, 6),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn missing_file_is_io() {
    let err = ingest_rainfall("/nonexistent/rain.csv").unwrap_err();
    assert!(err.is_io());
}

#[test]
fn missing_column_is_validation_class() {
    let dir = tempfile::tempdir().unwrap();
    let err = ingest_rainfall(write(&dir, "r.csv", "year,month,rain\n1990,1,3\n")).unwrap_err();
    assert!(err.is_validation(), "{err}");
}

#[test]
fn production_unit_from_column_or_header() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        &dir,
        "a.csv",
        "year,production,unit\n2000,1.5,kt\n2001,2.5,kt\n",
    );
    assert_eq!(ingest_production(&p).unwrap().unit(), "kt");
    let p = write(
        &dir,
        "b.csv",
        "year,production,tonnes\n2000,1.5,\n2001,2.5,\n",
    );
    assert_eq!(ingest_production(&p).unwrap().unit(), "tonnes");
    let p = write(
        &dir,
        "c.csv",
        "year,production,unit\n2000,1.5,kt\n2001,2.5,Mt\n",
    );
    assert!(ingest_production(&p).is_err());
}

#[test]
fn shuffled_production_is_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "p.csv", "year,production\n2002,3\n2000,1\n2001,2\n");
    let s = ingest_production(&p).unwrap();
    assert_eq!(s.start_year(), 2000);
    assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
}

#[test]
fn production_gaps_and_duplicates_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let gap = write(&dir, "g.csv", "year,production\n2000,1\n2002,3\n");
    assert!(matches!(ingest_production(&gap), Err(Error::Validation(_))));
    let dup = write(&dir, "d.csv", "year,production\n2000,1\n2000,3\n");
    assert!(matches!(ingest_production(&dup), Err(Error::Validation(_))));
}

#[test]
fn regressor_csv_has_row_per_year() {
    let rain = ingest_rainfall(common::rainfall_fixture()).unwrap();
    let csv = regressor_csv(&rain, &RiskVariant::ALL, &RiskConfig::default()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("year,RV1,RV2,RV3,RV4"));
    assert_eq!(lines.count(), rain.year_count());
}
