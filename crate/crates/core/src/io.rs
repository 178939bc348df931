//! CSV ingestion, run configuration and report bundles.
//!
//! Input schemas:
//!
//! * rainfall: `year,month,rainfall_mm`, one row per year and month
//! * production: `year,production[,<unit>]`, one row per year. A third
//!   column named `unit` carries the unit label in its values; any other
//!   third header is itself the unit label.
//!
//! A bundle holds `grid.csv`, `diagnostics/*.json`, `tables.md` and
//! `run_meta.json`. Bundles are written to a temporary sibling directory
//! and renamed into place, and carry no wall-clock data, so re-running the
//! same configuration reproduces them byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{run_grid, Alignment, EvaluationGrid, GridCell, GridConfig, ModelKind};
use crate::optim::TracePoint;
use crate::risk::{build_regressor, RiskConfig, RiskVariant};
use crate::series::{AnnualSeries, MonthlyRainfallSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub rainfall_path: PathBuf,
    pub production_path: PathBuf,
    pub grid: GridConfig,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Reads and validates both inputs; nothing is fitted before this
    /// succeeds.
    pub fn load_inputs(&self) -> Result<(AnnualSeries, MonthlyRainfallSeries)> {
        self.grid.validate()?;
        let production = ingest_production(&self.production_path)?;
        let rainfall = ingest_rainfall(&self.rainfall_path)?;
        Ok((production, rainfall))
    }

    pub fn run(&self) -> Result<EvaluationGrid> {
        let (production, rainfall) = self.load_inputs()?;
        run_grid(&production, &rainfall, &self.grid)
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::Schema(format!("missing column {name:?}")))
}

fn parse_field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    idx: usize,
    name: &str,
    line: u64,
) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("");
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("{name} {raw:?} is not a number"),
    })
}

pub fn ingest_rainfall(path: impl AsRef<Path>) -> Result<MonthlyRainfallSeries> {
    let path = path.as_ref();
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let (iy, im, ir) = (
        header_index(&headers, "year")?,
        header_index(&headers, "month")?,
        header_index(&headers, "rainfall_mm")?,
    );
    let mut years: BTreeMap<i32, [Option<f64>; 12]> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let year: i32 = parse_field(&rec, iy, "year", line)?;
        let month: u32 = parse_field(&rec, im, "month", line)?;
        let value: f64 = parse_field(&rec, ir, "rainfall_mm", line)?;
        if !(1..=12).contains(&month) {
            return Err(Error::Validation(format!(
                "line {line}: month {month} outside 1..12"
            )));
        }
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Validation(format!(
                "line {line}: rainfall {value} for {year} month {month} must be a non-negative number"
            )));
        }
        let slot = &mut years.entry(year).or_insert([None; 12])[month as usize - 1];
        if slot.is_some() {
            return Err(Error::Validation(format!(
                "line {line}: duplicate row for {year} month {month}"
            )));
        }
        *slot = Some(value);
    }
    let (first, last) = match (years.keys().next(), years.keys().next_back()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::Schema("rainfall file has no data rows".into())),
    };
    let mut rows = Vec::with_capacity((last - first + 1) as usize);
    for year in first..=last {
        let months = years.get(&year).copied().unwrap_or([None; 12]);
        let mut row = [0.0; 12];
        for (m, v) in months.iter().enumerate() {
            row[m] = v.ok_or_else(|| Error::Schema(format!("{year} month {} missing", m + 1)))?;
        }
        rows.push(row);
    }
    MonthlyRainfallSeries::new(first, rows)
}

pub fn ingest_production(path: impl AsRef<Path>) -> Result<AnnualSeries> {
    let path = path.as_ref();
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let iy = header_index(&headers, "year")?;
    let ip = header_index(&headers, "production")?;
    let unit_col = (0..headers.len()).find(|&i| i != iy && i != ip);
    let header_unit = unit_col
        .map(|i| headers[i].to_string())
        .filter(|h| !h.eq_ignore_ascii_case("unit"));

    let mut rows: Vec<(i32, f64)> = Vec::new();
    let mut value_unit: Option<String> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let year: i32 = parse_field(&rec, iy, "year", line)?;
        let value: f64 = parse_field(&rec, ip, "production", line)?;
        if !value.is_finite() {
            return Err(Error::Validation(format!(
                "line {line}: production must be finite"
            )));
        }
        if header_unit.is_none() {
            if let Some(u) = unit_col.and_then(|i| rec.get(i)).filter(|u| !u.is_empty()) {
                match &value_unit {
                    None => value_unit = Some(u.to_string()),
                    Some(prev) if prev != u => {
                        return Err(Error::Validation(format!(
                            "line {line}: unit {u:?} differs from {prev:?}"
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        rows.push((year, value));
    }
    if rows.is_empty() {
        return Err(Error::Schema("production file has no data rows".into()));
    }
    if rows.windows(2).any(|w| w[1].0 < w[0].0) {
        log::warn!("{}: rows are not in year order; sorting", path.display());
        rows.sort_by_key(|r| r.0);
    }
    for w in rows.windows(2) {
        if w[1].0 == w[0].0 {
            return Err(Error::Validation(format!("duplicate year {}", w[0].0)));
        }
        if w[1].0 != w[0].0 + 1 {
            return Err(Error::Validation(format!(
                "gap in years: {} follows {}",
                w[1].0, w[0].0
            )));
        }
    }
    let unit = header_unit.or(value_unit).unwrap_or_default();
    AnnualSeries::new(rows[0].0, rows.into_iter().map(|r| r.1).collect(), unit)
}

/// Writes `year,<variant>...` for every panel year.
pub fn regressor_csv(
    rainfall: &MonthlyRainfallSeries,
    variants: &[RiskVariant],
    cfg: &RiskConfig,
) -> Result<String> {
    let series = variants
        .iter()
        .map(|&v| build_regressor(rainfall, v, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["year".to_string()];
    header.extend(variants.iter().map(|v| v.to_string()));
    w.write_record(&header)
        .map_err(|e| Error::Serialize(e.to_string()))?;
    for (i, year) in (rainfall.start_year()..=rainfall.end_year()).enumerate() {
        let mut rec = vec![year.to_string()];
        rec.extend(series.iter().map(|s| s.values()[i].to_string()));
        w.write_record(&rec)
            .map_err(|e| Error::Serialize(e.to_string()))?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
}

/// Optimizer traces as `fit,eval,f_best` rows.
pub fn trace_csv(traces: &[(String, Vec<TracePoint>)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["fit", "eval", "f_best"])
        .map_err(|e| Error::Serialize(e.to_string()))?;
    for (name, trace) in traces {
        for p in trace {
            w.write_record([name.clone(), p.eval.to_string(), p.f_best.to_string()])
                .map_err(|e| Error::Serialize(e.to_string()))?;
        }
    }
    finish_csv(w)
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config_hash: String,
    pub data_hash: String,
    pub rainfall_path: Option<PathBuf>,
    pub production_path: Option<PathBuf>,
    pub rainfall_sha256: Option<String>,
    pub production_sha256: Option<String>,
    pub cells: usize,
    pub failed_cells: usize,
    pub grid: crate::eval::GridMetadata,
}

impl RunMeta {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    /// The run configuration that produced this bundle.
    pub fn run_config(&self) -> Result<RunConfig> {
        match (&self.rainfall_path, &self.production_path) {
            (Some(r), Some(p)) => Ok(RunConfig {
                rainfall_path: r.clone(),
                production_path: p.clone(),
                grid: self.grid.config.clone(),
                out_dir: None,
            }),
            _ => Err(Error::Validation(
                "run metadata does not record the input paths".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub dir: PathBuf,
    pub config_hash: String,
    /// Paths relative to `dir`, sorted.
    pub files: Vec<PathBuf>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn grid_csv(grid: &EvaluationGrid) -> Result<String> {
    let h = grid.metadata.config.split.holdout;
    let mut header: Vec<String> = [
        "family",
        "alignment",
        "rv",
        "model",
        "aic_raw",
        "aic_per_obs",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for metric in ["mae", "mae_cum", "rmse", "rmse_cum"] {
        header.extend((1..=h).map(|i| format!("{metric}_h{i}")));
    }
    header.extend(["converged".to_string(), "config_hash".to_string()]);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)
        .map_err(|e| Error::Serialize(e.to_string()))?;
    for c in &grid.cells {
        let mut rec = vec![
            c.family.to_string(),
            c.alignment.to_string(),
            c.rv.to_string(),
            c.model.to_string(),
        ];
        let m = c.metrics.as_ref();
        rec.push(fmt_opt(m.map(|m| m.aic.raw)));
        rec.push(fmt_opt(m.map(|m| m.aic.per_obs)));
        for pick in [
            |m: &crate::eval::CellMetrics| m.mae_per_horizon.clone(),
            |m: &crate::eval::CellMetrics| m.mae_cumulative.clone(),
            |m: &crate::eval::CellMetrics| m.rmse_per_horizon.clone(),
            |m: &crate::eval::CellMetrics| m.rmse_cumulative.clone(),
        ] {
            let vals = m.map(pick).unwrap_or_default();
            rec.extend((0..h).map(|i| fmt_opt(vals.get(i).copied())));
        }
        rec.push(c.converged.to_string());
        rec.push(grid.metadata.config_hash.clone());
        w.write_record(&rec)
            .map_err(|e| Error::Serialize(e.to_string()))?;
    }
    finish_csv(w)
}

fn table_value(cell: Option<&GridCell>, pick: impl Fn(&GridCell) -> Option<f64>) -> String {
    match cell {
        None => "-".into(),
        Some(c) => match pick(c) {
            None => "n/a".into(),
            Some(v) if c.converged => format!("{v:.4}"),
            Some(v) => format!("{v:.4}*"),
        },
    }
}

fn alignment_label(a: Alignment) -> &'static str {
    match a {
        Alignment::Lag1 => "lag 1",
        Alignment::SameTime => "same time",
    }
}

/// Markdown tables: one AIC table, then one MAE table per variance family
/// and pair of risk measures.
pub fn tables_markdown(grid: &EvaluationGrid) -> String {
    let meta = &grid.metadata;
    let cfg = &meta.config;
    let mut out = String::new();
    let _ = writeln!(out, "# Evaluation tables\n");
    let _ = writeln!(out, "config hash: `{}`  ", meta.config_hash);
    let _ = writeln!(out, "data hash: `{}`  ", meta.data_hash);
    let _ = writeln!(
        out,
        "mean order: ({}, {}, {}){}; training {}-{}, test {}-{}\n",
        meta.order[0],
        meta.order[1],
        meta.order[2],
        if meta.order_selected {
            " selected by AIC"
        } else {
            ""
        },
        meta.train_years[0],
        meta.train_years[1],
        meta.test_years[0],
        meta.test_years[1]
    );
    let _ = writeln!(
        out,
        "Values marked `*` come from fits that did not converge.\n"
    );

    let mut n = 1;
    let _ = writeln!(out, "### Table {n}: AIC values for different models\n");
    let _ = writeln!(
        out,
        "ARIMA and ARIMAX columns give 2k - 2 logL; GARCH columns give the same quantity per observation.\n"
    );
    let mut head = String::from("| AIC | ARIMA | GARCH-ARIMA |");
    let mut rule = String::from("|---|---:|---:|");
    for rv in &cfg.rvs {
        let _ = write!(head, " ARIMAX ({rv}) | GARCH-ARIMAX ({rv}) |");
        rule.push_str("---:|---:|");
    }
    let _ = writeln!(out, "{head}\n{rule}");
    let first_rv = cfg.rvs[0];
    for &family in &cfg.families {
        for &a in &cfg.alignments {
            let raw = |c: &GridCell| c.metrics.as_ref().map(|m| m.aic.raw);
            let per_obs = |c: &GridCell| c.metrics.as_ref().map(|m| m.aic.per_obs);
            let mut row = format!("| {} ({family}) |", alignment_label(a));
            let _ = write!(
                row,
                " {} | {} |",
                table_value(grid.cell(family, a, first_rv, ModelKind::Arima), raw),
                table_value(
                    grid.cell(family, a, first_rv, ModelKind::GarchArima),
                    per_obs
                )
            );
            for &rv in &cfg.rvs {
                let _ = write!(
                    row,
                    " {} | {} |",
                    table_value(grid.cell(family, a, rv, ModelKind::Arimax), raw),
                    table_value(grid.cell(family, a, rv, ModelKind::GarchArimax), per_obs)
                );
            }
            let _ = writeln!(out, "{row}");
        }
    }
    out.push('\n');

    let h = cfg.split.holdout;
    for &family in &cfg.families {
        for chunk in cfg.rvs.chunks(2) {
            n += 1;
            let names: Vec<String> = chunk.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(
                out,
                "### Table {n}: MAE values for {family} models with {}\n",
                names.join(" and ")
            );
            let _ = writeln!(
                out,
                "Mean absolute error over horizons 1..h on production levels.\n"
            );
            let mut head = String::from("| MAE |");
            let mut rule = String::from("|---|");
            for rv in chunk {
                for m in ModelKind::ALL {
                    let _ = write!(head, " {m} ({rv}) |");
                    rule.push_str("---:|");
                }
            }
            let _ = writeln!(out, "{head}\n{rule}");
            for &a in &cfg.alignments {
                for step in 0..h {
                    let mut row = format!("| {} step ({}) |", step + 1, alignment_label(a));
                    for &rv in chunk {
                        for m in ModelKind::ALL {
                            let v = table_value(grid.cell(family, a, rv, m), |c| {
                                c.metrics
                                    .as_ref()
                                    .and_then(|x| x.mae_cumulative.get(step).copied())
                            });
                            let _ = write!(row, " {v} |");
                        }
                    }
                    let _ = writeln!(out, "{row}");
                }
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Serialize)]
struct CellFile<'a> {
    config_hash: &'a str,
    #[serde(flatten)]
    cell: &'a GridCell,
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write_file(dir: &Path, rel: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(rel);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(PathBuf::from(rel))
}

pub fn emit_reports(grid: &EvaluationGrid, out_dir: impl AsRef<Path>) -> Result<ReportBundle> {
    emit_reports_with(grid, None, out_dir)
}

/// Writes the bundle, recording the input files of `run` in
/// `run_meta.json` when given.
pub fn emit_reports_with(
    grid: &EvaluationGrid,
    run: Option<&RunConfig>,
    out_dir: impl AsRef<Path>,
) -> Result<ReportBundle> {
    let out_dir = out_dir.as_ref();
    if grid.cells.is_empty() {
        return Err(Error::Validation(
            "refusing to write a bundle for an empty grid".into(),
        ));
    }
    let hash = grid.metadata.config_hash.clone();
    let meta = RunMeta {
        config_hash: hash.clone(),
        data_hash: grid.metadata.data_hash.clone(),
        rainfall_path: run.map(|r| r.rainfall_path.clone()),
        production_path: run.map(|r| r.production_path.clone()),
        rainfall_sha256: run.map(|r| file_sha256(&r.rainfall_path)).transpose()?,
        production_sha256: run.map(|r| file_sha256(&r.production_path)).transpose()?,
        cells: grid.cells.len(),
        failed_cells: grid.failures().count(),
        grid: grid.metadata.clone(),
    };

    // render everything before touching the filesystem
    let mut files: Vec<(String, String)> = vec![
        ("grid.csv".into(), grid_csv(grid)?),
        ("tables.md".into(), tables_markdown(grid)),
        ("run_meta.json".into(), to_json(&meta)?),
    ];
    for c in &grid.cells {
        files.push((
            format!("diagnostics/{}.json", c.key()),
            to_json(&CellFile {
                config_hash: &hash,
                cell: c,
            })?,
        ));
    }

    let parent = match out_dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
    if out_dir.exists() && !out_dir.is_dir() {
        return Err(Error::io(
            out_dir,
            std::io::Error::new(std::io::ErrorKind::AlreadyExists, "not a directory"),
        ));
    }
    let staging = tempfile::Builder::new()
        .prefix(".rainrisk-bundle-")
        .tempdir_in(&parent)
        .map_err(|e| Error::io(&parent, e))?;
    let diag = staging.path().join("diagnostics");
    fs::create_dir(&diag).map_err(|e| Error::io(&diag, e))?;
    let mut written = Vec::with_capacity(files.len());
    for (rel, contents) in &files {
        written.push(write_file(staging.path(), rel, contents)?);
    }
    written.sort();

    let staged = staging.keep();
    if out_dir.exists() {
        let old = tempfile::Builder::new()
            .prefix(".rainrisk-old-")
            .tempdir_in(&parent)
            .map_err(|e| Error::io(&parent, e))?
            .keep();
        fs::remove_dir(&old).map_err(|e| Error::io(&old, e))?;
        fs::rename(out_dir, &old).map_err(|e| Error::io(out_dir, e))?;
        if let Err(e) = fs::rename(&staged, out_dir) {
            let _ = fs::rename(&old, out_dir);
            let _ = fs::remove_dir_all(&staged);
            return Err(Error::io(out_dir, e));
        }
        fs::remove_dir_all(&old).map_err(|e| Error::io(&old, e))?;
    } else if let Err(e) = fs::rename(&staged, out_dir) {
        let _ = fs::remove_dir_all(&staged);
        return Err(Error::io(out_dir, e));
    }

    Ok(ReportBundle {
        dir: out_dir.to_path_buf(),
        config_hash: hash,
        files: written,
    })
}

/// SHA-256 of every file in a bundle, keyed by relative path.
pub fn bundle_digest(dir: impl AsRef<Path>) -> Result<BTreeMap<PathBuf, String>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, String>) -> Result<()> {
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path.strip_prefix(root).expect("inside root").to_path_buf();
                out.insert(rel, file_sha256(&path)?);
            }
        }
        Ok(())
    }
    let dir = dir.as_ref();
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        let mut f = fs::File::create(&p).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        p
    }

    fn rainfall_body(years: std::ops::RangeInclusive<i32>, skip: Option<(i32, u32)>) -> String {
        let mut s = String::from("year,month,rainfall_mm\n");
        for y in years {
            for m in 1..=12u32 {
                if Some((y, m)) != skip {
                    let _ = writeln!(s, "{y},{m},{}", (m * 10) as f64 + 0.5);
                }
            }
        }
        s
    }

    #[test]
    fn rainfall_two_years() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(dir.path(), "r.csv", &rainfall_body(2000..=2001, None));
        let r = ingest_rainfall(&p).unwrap();
        assert_eq!(r.year_count(), 2);
        assert_eq!(r.rows()[1][5], 60.5);
    }

    #[test]
    fn rainfall_missing_month() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            dir.path(),
            "r.csv",
            &rainfall_body(1974..=1976, Some((1975, 6))),
        );
        match ingest_rainfall(&p) {
            Err(Error::Schema(m)) => assert_eq!(m, "1975 month 6 missing"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rainfall_negative_and_duplicate() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = rainfall_body(2000..=2000, None);
        body = body.replace("2000,3,30.5", "2000,3,-1");
        let p = write_tmp(dir.path(), "neg.csv", &body);
        assert!(matches!(ingest_rainfall(&p), Err(Error::Validation(_))));
        let mut body = rainfall_body(2000..=2000, None);
        body.push_str("2000,3,4\n");
        let p = write_tmp(dir.path(), "dup.csv", &body);
        assert!(matches!(ingest_rainfall(&p), Err(Error::Validation(_))));
    }

    #[test]
    fn production_variants() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(dir.path(), "one.csv", "year,production\n1990,12.5\n");
        assert_eq!(ingest_production(&p).unwrap().len(), 1);

        let p = write_tmp(
            dir.path(),
            "shuffled.csv",
            "year,production,unit\n1992,3,kt\n1990,1,kt\n1991,2,kt\n",
        );
        let s = ingest_production(&p).unwrap();
        assert_eq!(s.start_year(), 1990);
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.unit(), "kt");

        let p = write_tmp(
            dir.path(),
            "labelled.csv",
            "year,production,thousand_tonnes\n1990,1,\n",
        );
        assert_eq!(ingest_production(&p).unwrap().unit(), "thousand_tonnes");

        let p = write_tmp(dir.path(), "gap.csv", "year,production\n1990,1\n1992,2\n");
        assert!(matches!(ingest_production(&p), Err(Error::Validation(_))));

        let p = write_tmp(dir.path(), "bad.csv", "year,production\n1990,1\n1991,abc\n");
        match ingest_production(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io() {
        assert!(ingest_production("/nonexistent/p.csv").unwrap_err().is_io());
    }
}
