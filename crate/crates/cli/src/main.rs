use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use rainrisk::error::BestSoFar;
use rainrisk::eval::{
    mae, prepare_design, rmse, Alignment, Design, GridConfig, HorizonMode, SplitConfig,
};
use rainrisk::garch::{fit_garch_from, forecast_garch, GarchFit, VarianceFamily, VarianceSpec};
use rainrisk::io::{
    emit_reports_with, ingest_production, ingest_rainfall, regressor_csv, trace_csv, RunConfig,
    RunMeta,
};
use rainrisk::mean::{fit_mean, forecast_mean, select_order, MeanFit, MeanSpec};
use rainrisk::optim::{OptSettings, TracePoint};
use rainrisk::risk::{RiskConfig, RiskVariant, DEFAULT_FLOOR_MM};
use rainrisk::series::{difference, AnnualSeries, MonthlyRainfallSeries};
use rainrisk::stat_tests::{adf_test, LagSpec, RegressionKind};
use rainrisk::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_FIT: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "rainrisk",
    version,
    about = "Rainfall-risk regressors and ARIMA/GARCH production forecasting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Annual rainfall-risk measures as CSV.
    Rv(RvArgs),
    /// Augmented Dickey-Fuller test on the production series.
    Adf(AdfArgs),
    /// Fit one model on the training window and print its estimates.
    Fit(ModelArgs),
    /// Fit one model and forecast the held-out years.
    Forecast(ForecastArgs),
    /// Run the full evaluation grid and write a report bundle.
    Grid(GridArgs),
    /// Re-run a grid from a bundle's run_meta.json.
    Report(ReportArgs),
}

#[derive(Args)]
struct RvArgs {
    #[arg(long)]
    rainfall: PathBuf,
    /// Comma-separated subset of RV1,RV2,RV3,RV4.
    #[arg(long, value_delimiter = ',')]
    rv: Vec<RiskVariant>,
    #[arg(long, default_value_t = DEFAULT_FLOOR_MM)]
    floor_mm: f64,
    /// Report the square root of RV4.
    #[arg(long)]
    rv4_sqrt: bool,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AdfArgs {
    #[arg(long)]
    production: PathBuf,
    /// Differencing order applied before testing.
    #[arg(long, default_value_t = 0)]
    diff: usize,
    /// Deterministic terms: c (constant) or ct (constant and trend).
    #[arg(long, default_value = "c")]
    regression: RegressionKind,
    /// Augmentation lags; defaults to floor((n-1)^(1/3)).
    #[arg(long)]
    lags: Option<usize>,
    /// Write the result as JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct OptArgs {
    /// Evaluation budget per optimizer stage.
    #[arg(long)]
    opt_max_evals: Option<usize>,
    /// Convergence tolerance on the simplex (the value tolerance is 1e-2 of it).
    #[arg(long)]
    opt_tol: Option<f64>,
    /// Write optimizer traces (fit,eval,f_best) to this CSV file.
    #[arg(long)]
    opt_trace: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl OptArgs {
    fn settings(&self) -> OptSettings {
        let mut s = OptSettings::default();
        if let Some(m) = self.opt_max_evals {
            s.max_evals = m;
        }
        if let Some(t) = self.opt_tol {
            s.tol_x = t;
            s.tol_f = t * 1e-2;
        }
        s.seed = Some(self.seed);
        s.record_trace = self.opt_trace.is_some();
        s
    }
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    production: PathBuf,
    /// Needed when --rv is given.
    #[arg(long)]
    rainfall: Option<PathBuf>,
    /// Years held out from the fit (0 uses the whole series).
    #[arg(long, default_value_t = 3)]
    holdout: usize,
    /// Mean order as p,d,q; p and q are selected by AIC when absent.
    #[arg(long)]
    order: Option<String>,
    /// sGARCH, eGARCH, gjrGARCH, iGARCH or none.
    #[arg(long, default_value = "none")]
    variance: String,
    /// Risk measure used as regressor (ARIMAX) when given.
    #[arg(long)]
    rv: Option<RiskVariant>,
    #[arg(long, default_value = "lag1")]
    alignment: Alignment,
    #[arg(long, default_value_t = DEFAULT_FLOOR_MM)]
    floor_mm: f64,
    /// Exit with status 3 when the optimizer does not converge.
    #[arg(long)]
    strict: bool,
    /// Write the JSON result to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    opt: OptArgs,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Forecast horizon; defaults to the holdout (or 1 with no holdout).
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    rainfall: PathBuf,
    #[arg(long)]
    production: PathBuf,
    #[arg(long, default_value_t = 3)]
    holdout: usize,
    #[arg(long, default_value_t = DEFAULT_FLOOR_MM)]
    floor_mm: f64,
    /// Mean order as p,d,q shared by every cell.
    #[arg(long)]
    order: Option<String>,
    /// Comma-separated variance families (default: all four).
    #[arg(long, value_delimiter = ',')]
    variance: Vec<VarianceFamily>,
    /// Comma-separated alignments: lag1, same_time.
    #[arg(long, value_delimiter = ',')]
    alignment: Vec<Alignment>,
    /// Comma-separated risk measures.
    #[arg(long, value_delimiter = ',')]
    rv: Vec<RiskVariant>,
    #[arg(long)]
    rv4_sqrt: bool,
    /// Bundle directory.
    #[arg(long)]
    out: PathBuf,
    /// Exit with status 3 when any cell failed or did not converge.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    opt: OptArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// run_meta.json of an earlier bundle.
    #[arg(long)]
    meta: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    strict: bool,
}

/// Failure carrying the process exit status.
#[derive(Debug)]
struct Exit {
    code: u8,
    error: anyhow::Error,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return if e.is_validation() {
                EXIT_VALIDATION
            } else if e.is_io() || matches!(e, Error::Serialize(_)) {
                EXIT_IO
            } else {
                EXIT_FIT
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    1
}

impl<E: Into<anyhow::Error>> From<E> for Exit {
    fn from(e: E) -> Self {
        let error = e.into();
        Exit {
            code: exit_code(&error),
            error,
        }
    }
}

fn fit_failure(msg: String) -> Exit {
    Exit {
        code: EXIT_FIT,
        error: anyhow::anyhow!(msg),
    }
}

fn parse_order(s: &str) -> Result<[usize; 3], Error> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums: Option<Vec<usize>> = parts.iter().map(|p| p.parse().ok()).collect();
    match nums.as_deref() {
        Some(&[p, d, q]) => Ok([p, d, q]),
        _ => Err(Error::Validation(format!(
            "--order expects p,d,q, got {s:?}"
        ))),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Exit> {
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            log::info!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn write_traces(path: Option<&Path>, traces: &[(String, Vec<TracePoint>)]) -> Result<(), Exit> {
    if let Some(p) = path {
        write_output(Some(p), &trace_csv(traces)?)?;
    }
    Ok(())
}

fn cmd_rv(a: RvArgs) -> Result<(), Exit> {
    let rainfall = ingest_rainfall(&a.rainfall)?;
    let variants = if a.rv.is_empty() {
        RiskVariant::ALL.to_vec()
    } else {
        a.rv
    };
    let cfg = RiskConfig {
        floor_mm: a.floor_mm,
        rv4_sqrt: a.rv4_sqrt,
    };
    write_output(
        a.out.as_deref(),
        &regressor_csv(&rainfall, &variants, &cfg)?,
    )
}

fn cmd_adf(a: AdfArgs) -> Result<(), Exit> {
    let production = ingest_production(&a.production)?;
    let series = difference(&production, a.diff)?;
    let lags = a.lags.map_or(LagSpec::Auto, LagSpec::Fixed);
    let r = adf_test(series.values(), lags, a.regression)?;
    println!(
        "series: {} (differenced {} times), {} observations",
        a.production.display(),
        a.diff,
        series.len()
    );
    println!("regression: {}", r.regression_kind);
    println!("lags: {}", r.lags_used);
    println!("statistic: {:.4}", r.statistic);
    let bound = if r.p_clamped {
        if r.p_value <= 0.01 {
            "<= "
        } else {
            ">= "
        }
    } else {
        ""
    };
    println!("p-value: {bound}{:.4}", r.p_value);
    for level in [0.01, 0.05, 0.10] {
        println!(
            "{:>3.0}% critical value {:.4}: {}",
            level * 100.0,
            r.critical_value(level),
            if r.rejects_at(level) {
                "reject unit root"
            } else {
                "do not reject"
            }
        );
    }
    if let Some(out) = a.out.as_deref() {
        let text = serde_json::to_string_pretty(&json!({
            "result": r,
            "critical_values": {
                "0.01": r.critical_value(0.01),
                "0.05": r.critical_value(0.05),
                "0.10": r.critical_value(0.10),
            },
        }))?;
        write_output(Some(out), &(text + "\n"))?;
    }
    Ok(())
}

enum Fitted {
    Mean(MeanFit),
    Garch(GarchFit),
}

struct Prepared {
    design: Design,
    mean_spec: MeanSpec,
    variance: Option<VarianceFamily>,
    opt: OptSettings,
}

fn load_rainfall(path: Option<&Path>, needed: bool) -> Result<Option<MonthlyRainfallSeries>, Exit> {
    match (path, needed) {
        (Some(p), _) => Ok(Some(ingest_rainfall(p)?)),
        (None, true) => Err(Error::Validation("--rv requires --rainfall".into()).into()),
        (None, false) => Ok(None),
    }
}

fn prepare(a: &ModelArgs, horizon: usize) -> Result<(Prepared, AnnualSeries), Exit> {
    let production = ingest_production(&a.production)?;
    let rainfall = load_rainfall(a.rainfall.as_deref(), a.rv.is_some())?;
    let variance = match a.variance.to_ascii_lowercase().as_str() {
        "none" => None,
        other => Some(other.parse::<VarianceFamily>()?),
    };
    let order = a.order.as_deref().map(parse_order).transpose()?;
    let d = order.map_or(1, |o| o[1]);
    let risk = RiskConfig {
        floor_mm: a.floor_mm,
        ..RiskConfig::default()
    };
    let regressor = match (&rainfall, a.rv) {
        (Some(r), Some(rv)) => Some((r, rv, a.alignment, &risk)),
        _ => None,
    };
    let design = prepare_design(&production, regressor, a.holdout, d, horizon)?;
    let opt = a.opt.settings();
    let base = MeanSpec::arima(0, d, 0).with_exog(usize::from(a.rv.is_some()));
    let mean_spec = match order {
        Some([p, _, q]) => MeanSpec { p, q, ..base },
        None => {
            let sel = select_order(&MeanSpec::arima(0, d, 0), &design.train, &[], 2, 2, &opt)?;
            log::info!("selected ARIMA({}, {d}, {})", sel.spec.p, sel.spec.q);
            MeanSpec {
                p: sel.spec.p,
                q: sel.spec.q,
                ..base
            }
        }
    };
    Ok((
        Prepared {
            design,
            mean_spec,
            variance,
            opt,
        },
        production,
    ))
}

fn run_fit(p: &Prepared, strict: bool) -> Result<Fitted, Exit> {
    let x = &p.design.exog_train;
    let settle_mean = |r: Result<MeanFit, Error>| -> Result<MeanFit, Exit> {
        match r {
            Err(Error::NotConverged { evals, best, .. }) if !strict => match *best {
                BestSoFar::Mean(f) => {
                    log::warn!("mean fit did not converge after {evals} evaluations; reporting best estimate");
                    Ok(f)
                }
                BestSoFar::Garch(_) => Err(fit_failure("unexpected estimate type".into())),
            },
            Err(e) => Err(e.into()),
            Ok(f) => Ok(f),
        }
    };
    let mean = settle_mean(fit_mean(&p.mean_spec, &p.design.train, x, &p.opt))?;
    let Some(family) = p.variance else {
        return Ok(Fitted::Mean(mean));
    };
    match fit_garch_from(
        &p.mean_spec,
        &VarianceSpec::garch11(family),
        &p.design.train,
        x,
        &p.opt,
        Some(&mean),
    ) {
        Ok(f) => Ok(Fitted::Garch(f)),
        Err(Error::NotConverged { evals, best, .. }) if !strict => match *best {
            BestSoFar::Garch(f) => {
                log::warn!("{family} fit did not converge after {evals} evaluations; reporting best estimate");
                Ok(Fitted::Garch(f))
            }
            BestSoFar::Mean(_) => Err(fit_failure("unexpected estimate type".into())),
        },
        Err(e) => Err(e.into()),
    }
}

fn model_name(p: &Prepared) -> String {
    let mean = if p.mean_spec.exog_count > 0 {
        "ARIMAX"
    } else {
        "ARIMA"
    };
    match p.variance {
        Some(f) => format!("{f}-{mean}"),
        None => mean.to_string(),
    }
}

fn fit_summary(p: &Prepared, fit: &Fitted) -> serde_json::Value {
    let s = &p.mean_spec;
    let train = [p.design.train.start_year(), p.design.train.end_year()];
    match fit {
        Fitted::Mean(f) => json!({
            "model": model_name(p),
            "order": [s.p, s.d, s.q],
            "train_years": train,
            "n": f.n_obs(),
            "params": f.params,
            "sigma2": f.sigma2,
            "loglik": f.loglik,
            "aic_raw": f.aic.raw,
            "aic_per_obs": f.aic.per_obs,
            "stationary": f.stationary,
            "invertible": f.invertible,
            "converged": f.converged,
            "evals": f.evals,
        }),
        Fitted::Garch(f) => json!({
            "model": model_name(p),
            "order": [s.p, s.d, s.q],
            "variance": f.var_spec,
            "train_years": train,
            "n": f.n_obs(),
            "mean_params": f.mean_params,
            "var_params": f.var_params,
            "init_sigma2": f.init_sigma2,
            "persistence": f.persistence,
            "near_boundary": f.near_boundary,
            "loglik": f.loglik,
            "aic_raw": f.aic_raw,
            "aic_per_obs": f.aic_per_obs,
            "converged": f.converged,
            "evals": f.evals,
        }),
    }
}

fn trace_of(fit: &Fitted) -> Vec<(String, Vec<TracePoint>)> {
    match fit {
        Fitted::Mean(f) => vec![("mean".into(), f.trace.clone())],
        Fitted::Garch(f) => vec![("garch".into(), f.trace.clone())],
    }
}

fn cmd_fit(a: ModelArgs) -> Result<(), Exit> {
    let (p, _) = prepare(&a, a.holdout.max(1))?;
    let fit = run_fit(&p, a.strict)?;
    write_traces(a.opt.opt_trace.as_deref(), &trace_of(&fit))?;
    let text = serde_json::to_string_pretty(&fit_summary(&p, &fit))? + "\n";
    write_output(a.out.as_deref(), &text)
}

fn cmd_forecast(a: ForecastArgs) -> Result<(), Exit> {
    let m = &a.model;
    let h = a.horizon.unwrap_or(m.holdout.max(1));
    let (p, _) = prepare(m, h)?;
    let fit = run_fit(&p, m.strict)?;
    write_traces(m.opt.opt_trace.as_deref(), &trace_of(&fit))?;
    let future = &p.design.exog_future;
    let (levels, variance) = match &fit {
        Fitted::Mean(f) => {
            let fc = forecast_mean(f, h, future)?;
            (fc.levels, vec![f.sigma2; h])
        }
        Fitted::Garch(f) => {
            let fc = forecast_garch(f, h, future)?;
            (fc.mean.levels, fc.variance)
        }
    };
    let years: Vec<i32> = (p.design.forecast_years[0]..=p.design.forecast_years[1]).collect();
    let actual = &p.design.actual;
    let mut out = json!({
        "model": model_name(&p),
        "years": years,
        "forecast": levels,
        "variance": variance,
        "actual": actual,
    });
    if actual.len() == h {
        out["mae"] = json!(mae(actual, &levels, HorizonMode::PerHorizon)?);
        out["mae_cumulative"] = json!(mae(actual, &levels, HorizonMode::Cumulative)?);
        out["rmse_cumulative"] = json!(rmse(actual, &levels, HorizonMode::Cumulative)?);
    }
    let text = serde_json::to_string_pretty(&out)? + "\n";
    write_output(m.out.as_deref(), &text)
}

fn grid_traces(grid: &rainrisk::eval::EvaluationGrid) -> Vec<(String, Vec<TracePoint>)> {
    grid.cells
        .iter()
        .filter_map(|c| c.diagnostics.as_ref().map(|d| (c.key(), d.trace.clone())))
        .collect()
}

fn finish_grid(
    run: &RunConfig,
    out: &Path,
    strict: bool,
    trace: Option<&Path>,
) -> Result<(), Exit> {
    let grid = run.run()?;
    if trace.is_some() {
        write_traces(trace, &grid_traces(&grid))?;
    }
    let bundle = emit_reports_with(&grid, Some(run), out)?;
    let failed: Vec<String> = grid.failures().map(|c| c.key()).collect();
    println!(
        "wrote {} files to {} (config {}); {} of {} cells failed or did not converge",
        bundle.files.len(),
        bundle.dir.display(),
        &bundle.config_hash[..12],
        failed.len(),
        grid.cells.len()
    );
    if strict && !failed.is_empty() {
        return Err(fit_failure(format!("cells failed: {}", failed.join(", "))));
    }
    Ok(())
}

fn cmd_grid(a: GridArgs) -> Result<(), Exit> {
    let mut grid = GridConfig {
        split: SplitConfig { holdout: a.holdout },
        order: a.order.as_deref().map(parse_order).transpose()?,
        risk: RiskConfig {
            floor_mm: a.floor_mm,
            rv4_sqrt: a.rv4_sqrt,
        },
        opt: a.opt.settings(),
        seed: a.opt.seed,
        ..GridConfig::default()
    };
    // per-cell seeds are derived from the grid seed
    grid.opt.seed = None;
    if !a.variance.is_empty() {
        grid.families = a.variance;
    }
    if !a.alignment.is_empty() {
        grid.alignments = a.alignment;
    }
    if !a.rv.is_empty() {
        grid.rvs = a.rv;
    }
    let run = RunConfig {
        rainfall_path: a.rainfall,
        production_path: a.production,
        grid,
        out_dir: Some(a.out.clone()),
    };
    finish_grid(&run, &a.out, a.strict, a.opt.opt_trace.as_deref())
}

fn cmd_report(a: ReportArgs) -> Result<(), Exit> {
    let meta = RunMeta::read(&a.meta)?;
    let run = meta.run_config()?;
    let (production, rainfall) = run.load_inputs()?;
    let current = rainrisk::eval::data_hash(&production, &rainfall);
    if current != meta.data_hash {
        return Err(Error::Validation(format!(
            "input data changed since the bundle was written (hash {} vs {})",
            &current[..12],
            &meta.data_hash[..12.min(meta.data_hash.len())]
        ))
        .into());
    }
    finish_grid(&run, &a.out, a.strict, None)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rv(a) => cmd_rv(a),
        Command::Adf(a) => cmd_adf(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Forecast(a) => cmd_forecast(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
