//! Train/test protocol, forecast-error metrics and the full evaluation grid
//! (variance family x alignment x risk measure x model).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BestSoFar, Error, Result};
use crate::garch::{
    fit_garch_from, forecast_garch, GarchFit, VarianceFamily, VarianceParams, VarianceSpec,
};
use crate::mean::{fit_mean_warm, forecast_mean, select_order, MeanFit, MeanParams, MeanSpec};
use crate::optim::{OptSettings, TracePoint};
use crate::risk::{build_regressor, RiskConfig, RiskVariant};
use crate::series::{difference, AnnualSeries, DifferencedSeries, MonthlyRainfallSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub holdout: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { holdout: 3 }
    }
}

/// Chronological split: the last `holdout` observations form the test set.
pub fn split(series: &AnnualSeries, cfg: &SplitConfig) -> Result<(AnnualSeries, AnnualSeries)> {
    let n = series.len();
    if cfg.holdout == 0 || cfg.holdout >= n {
        return Err(Error::InvalidArgument(format!(
            "holdout {} must be in 1..{n}",
            cfg.holdout
        )));
    }
    let cut = series.start_year() + (n - cfg.holdout) as i32;
    Ok((
        series.slice_years(series.start_year(), cut - 1)?,
        series.slice_years(cut, series.end_year())?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HorizonMode {
    PerHorizon,
    Cumulative,
}

fn errors(actual: &[f64], forecast: &[f64]) -> Result<Vec<f64>> {
    if actual.len() != forecast.len() || actual.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "actual has {} values, forecast {}",
            actual.len(),
            forecast.len()
        )));
    }
    Ok(actual.iter().zip(forecast).map(|(a, f)| a - f).collect())
}

/// Absolute error per horizon, or the running mean of absolute errors over
/// horizons `1..=h`.
pub fn mae(actual: &[f64], forecast: &[f64], mode: HorizonMode) -> Result<Vec<f64>> {
    let abs: Vec<f64> = errors(actual, forecast)?.iter().map(|e| e.abs()).collect();
    Ok(match mode {
        HorizonMode::PerHorizon => abs,
        HorizonMode::Cumulative => running_mean(&abs),
    })
}

pub fn rmse(actual: &[f64], forecast: &[f64], mode: HorizonMode) -> Result<Vec<f64>> {
    let sq: Vec<f64> = errors(actual, forecast)?.iter().map(|e| e * e).collect();
    let out = match mode {
        HorizonMode::PerHorizon => sq,
        HorizonMode::Cumulative => running_mean(&sq),
    };
    Ok(out.into_iter().map(f64::sqrt).collect())
}

fn running_mean(v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    v.iter()
        .enumerate()
        .map(|(i, x)| {
            acc += x;
            acc / (i + 1) as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AicPair {
    pub raw: f64,
    pub per_obs: f64,
}

pub fn aic_pair(loglik: f64, k: usize, n: usize) -> AicPair {
    let raw = 2.0 * k as f64 - 2.0 * loglik;
    AicPair {
        raw,
        per_obs: raw / n as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Alignment {
    #[serde(rename = "lag1")]
    Lag1,
    #[serde(rename = "same_time")]
    SameTime,
}

impl Alignment {
    pub const ALL: [Alignment; 2] = [Self::Lag1, Self::SameTime];

    pub fn lag(self) -> usize {
        match self {
            Self::Lag1 => 1,
            Self::SameTime => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lag1 => "lag1",
            Self::SameTime => "same_time",
        }
    }
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Alignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lag1" | "lag-1" | "lag_1" => Ok(Self::Lag1),
            "same_time" | "same-time" | "same" => Ok(Self::SameTime),
            _ => Err(Error::InvalidArgument(format!("unknown alignment {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "ARIMA")]
    Arima,
    #[serde(rename = "GARCH-ARIMA")]
    GarchArima,
    #[serde(rename = "ARIMAX")]
    Arimax,
    #[serde(rename = "GARCH-ARIMAX")]
    GarchArimax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeanKind {
    #[serde(rename = "ARIMA")]
    Arima,
    #[serde(rename = "ARIMAX")]
    Arimax,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        Self::Arima,
        Self::GarchArima,
        Self::Arimax,
        Self::GarchArimax,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Arima => "ARIMA",
            Self::GarchArima => "GARCH-ARIMA",
            Self::Arimax => "ARIMAX",
            Self::GarchArimax => "GARCH-ARIMAX",
        }
    }

    pub fn mean_kind(self) -> MeanKind {
        match self {
            Self::Arima | Self::GarchArima => MeanKind::Arima,
            Self::Arimax | Self::GarchArimax => MeanKind::Arimax,
        }
    }

    pub fn has_variance(self) -> bool {
        matches!(self, Self::GarchArima | Self::GarchArimax)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ARIMA" => Ok(Self::Arima),
            "GARCH-ARIMA" => Ok(Self::GarchArima),
            "ARIMAX" => Ok(Self::Arimax),
            "GARCH-ARIMAX" => Ok(Self::GarchArimax),
            _ => Err(Error::InvalidArgument(format!("unknown model {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub split: SplitConfig,
    /// `(p, d, q)`; `None` selects `p, q <= max_order` by AIC on the
    /// training ARIMA with differencing order `d`.
    pub order: Option<[usize; 3]>,
    pub d: usize,
    pub max_order: usize,
    pub garch_order: [usize; 2],
    pub families: Vec<VarianceFamily>,
    pub alignments: Vec<Alignment>,
    pub rvs: Vec<RiskVariant>,
    pub risk: RiskConfig,
    pub opt: OptSettings,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            split: SplitConfig::default(),
            order: None,
            d: 1,
            max_order: 2,
            garch_order: [1, 1],
            families: VarianceFamily::ALL.to_vec(),
            alignments: Alignment::ALL.to_vec(),
            rvs: RiskVariant::ALL.to_vec(),
            risk: RiskConfig::default(),
            opt: OptSettings::default(),
            seed: 42,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.split.holdout == 0 {
            return Err(Error::Validation("holdout must be at least 1".into()));
        }
        if self.families.is_empty() || self.alignments.is_empty() || self.rvs.is_empty() {
            return Err(Error::Validation(
                "at least one family, alignment and risk measure is required".into(),
            ));
        }
        if !(self.risk.floor_mm > 0.0 && self.risk.floor_mm.is_finite()) {
            return Err(Error::Validation(format!(
                "floor_mm must be positive, got {}",
                self.risk.floor_mm
            )));
        }
        if let Some([_, d, _]) = self.order {
            if d > 2 {
                return Err(Error::Validation(format!(
                    "differencing order {d} not supported"
                )));
            }
        }
        if self.opt.max_evals == 0
            || self.opt.tol_x.is_nan()
            || self.opt.tol_x <= 0.0
            || self.opt.tol_f.is_nan()
            || self.opt.tol_f <= 0.0
        {
            return Err(Error::Validation(
                "optimizer budget and tolerances must be positive".into(),
            ));
        }
        VarianceSpec::new(
            VarianceFamily::SGarch,
            self.garch_order[0],
            self.garch_order[1],
        )
        .validate()
        .map_err(|e| Error::Validation(e.to_string()))
    }

    /// True when every family, alignment and risk measure is included.
    pub fn is_full(&self) -> bool {
        VarianceFamily::ALL
            .iter()
            .all(|f| self.families.contains(f))
            && Alignment::ALL.iter().all(|a| self.alignments.contains(a))
            && RiskVariant::ALL.iter().all(|r| self.rvs.contains(r))
    }

    /// Stable digest of the configuration together with the input data.
    pub fn hash_with(&self, data_hash: &str) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        h.update(data_hash.as_bytes());
        hex::encode(h.finalize())
    }
}

/// Digest of the numeric content of both inputs.
pub fn data_hash(production: &AnnualSeries, rainfall: &MonthlyRainfallSeries) -> String {
    let mut h = Sha256::new();
    h.update(production.start_year().to_le_bytes());
    h.update(production.unit().as_bytes());
    for v in production.values() {
        h.update(v.to_le_bytes());
    }
    h.update(rainfall.start_year().to_le_bytes());
    for row in rainfall.rows() {
        for v in row {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

fn derive_seed(base: u64, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(key.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 8 bytes"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub aic: AicPair,
    pub loglik: f64,
    pub n_params: usize,
    pub forecast: Vec<f64>,
    pub actual: Vec<f64>,
    pub mae_per_horizon: Vec<f64>,
    pub mae_cumulative: Vec<f64>,
    pub rmse_per_horizon: Vec<f64>,
    pub rmse_cumulative: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDiagnostics {
    pub mean_spec: MeanSpec,
    pub mean_params: MeanParams,
    pub var_spec: Option<VarianceSpec>,
    pub var_params: Option<VarianceParams>,
    pub init_sigma2: Option<f64>,
    pub sigma2_path: Vec<f64>,
    pub variance_forecast: Vec<f64>,
    pub persistence: Option<f64>,
    pub near_boundary: bool,
    pub evals: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    /// Variance family of the table block the cell belongs to.
    pub family: VarianceFamily,
    pub alignment: Alignment,
    /// Risk-measure column. Models without regressors repeat the same fit
    /// in every column.
    pub rv: RiskVariant,
    pub model: ModelKind,
    pub converged: bool,
    pub metrics: Option<CellMetrics>,
    pub diagnostics: Option<CellDiagnostics>,
    pub error: Option<String>,
}

impl GridCell {
    /// The regressor actually used by the fit.
    pub fn rv_variant(&self) -> Option<RiskVariant> {
        (self.model.mean_kind() == MeanKind::Arimax).then_some(self.rv)
    }

    pub fn variance_kind(&self) -> Option<VarianceFamily> {
        self.model.has_variance().then_some(self.family)
    }

    pub fn key(&self) -> String {
        format!(
            "{}_{}_{}_{}",
            self.family, self.alignment, self.rv, self.model
        )
    }

    pub fn failed(&self) -> bool {
        !self.converged || self.error.is_some() || self.metrics.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub config_hash: String,
    pub data_hash: String,
    pub production_years: [i32; 2],
    pub rainfall_years: [i32; 2],
    pub train_years: [i32; 2],
    pub test_years: [i32; 2],
    pub unit: String,
    /// `(p, d, q)` used by every cell.
    pub order: [usize; 3],
    pub order_selected: bool,
    pub config: GridConfig,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationGrid {
    pub cells: Vec<GridCell>,
    pub metadata: GridMetadata,
}

impl EvaluationGrid {
    pub fn cell(
        &self,
        family: VarianceFamily,
        alignment: Alignment,
        rv: RiskVariant,
        model: ModelKind,
    ) -> Option<&GridCell> {
        self.cells.iter().find(|c| {
            c.family == family && c.alignment == alignment && c.rv == rv && c.model == model
        })
    }

    pub fn failures(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().filter(|c| c.failed())
    }
}

/// Outcome of one model fit, shared by every cell that reuses it.
#[derive(Debug, Clone)]
struct FitOutcome {
    converged: bool,
    metrics: Option<CellMetrics>,
    diagnostics: Option<CellDiagnostics>,
    error: Option<String>,
}

impl FitOutcome {
    fn failed(msg: String) -> Self {
        Self {
            converged: false,
            metrics: None,
            diagnostics: None,
            error: Some(msg),
        }
    }
}

fn settle_mean(r: Result<MeanFit>) -> Result<MeanFit> {
    match r {
        Err(Error::NotConverged { best, .. }) => match *best {
            BestSoFar::Mean(f) => Ok(f),
            BestSoFar::Garch(_) => Err(Error::FitFailed("unexpected GARCH estimate".into())),
        },
        other => other,
    }
}

fn settle_garch(r: Result<GarchFit>) -> Result<GarchFit> {
    match r {
        Err(Error::NotConverged { best, .. }) => match *best {
            BestSoFar::Garch(f) => Ok(f),
            BestSoFar::Mean(_) => Err(Error::FitFailed("unexpected mean estimate".into())),
        },
        other => other,
    }
}

fn metrics_for(
    aic: AicPair,
    loglik: f64,
    n_params: usize,
    forecast: Vec<f64>,
    actual: &[f64],
) -> Result<CellMetrics> {
    Ok(CellMetrics {
        aic,
        loglik,
        n_params,
        mae_per_horizon: mae(actual, &forecast, HorizonMode::PerHorizon)?,
        mae_cumulative: mae(actual, &forecast, HorizonMode::Cumulative)?,
        rmse_per_horizon: rmse(actual, &forecast, HorizonMode::PerHorizon)?,
        rmse_cumulative: rmse(actual, &forecast, HorizonMode::Cumulative)?,
        forecast,
        actual: actual.to_vec(),
    })
}

fn mean_outcome(fit: &MeanFit, future_exog: &[Vec<f64>], actual: &[f64], seed: u64) -> FitOutcome {
    let result = forecast_mean(fit, actual.len(), future_exog)
        .and_then(|fc| metrics_for(fit.aic, fit.loglik, fit.n_params, fc.levels, actual));
    match result {
        Ok(m) => FitOutcome {
            converged: fit.converged,
            metrics: Some(m),
            diagnostics: Some(CellDiagnostics {
                mean_spec: fit.spec,
                mean_params: fit.params.clone(),
                var_spec: None,
                var_params: None,
                init_sigma2: None,
                sigma2_path: vec![fit.sigma2; fit.n_obs()],
                variance_forecast: vec![fit.sigma2; actual.len()],
                persistence: None,
                near_boundary: false,
                evals: fit.evals,
                seed,
                trace: fit.trace.clone(),
            }),
            error: None,
        },
        Err(e) => FitOutcome::failed(format!("forecast failed: {e}")),
    }
}

fn garch_outcome(
    fit: &GarchFit,
    future_exog: &[Vec<f64>],
    actual: &[f64],
    seed: u64,
) -> FitOutcome {
    let result = forecast_garch(fit, actual.len(), future_exog).and_then(|fc| {
        let m = metrics_for(fit.aic(), fit.loglik, fit.n_params, fc.mean.levels, actual)?;
        Ok((m, fc.variance))
    });
    match result {
        Ok((m, variance_forecast)) => FitOutcome {
            converged: fit.converged,
            metrics: Some(m),
            diagnostics: Some(CellDiagnostics {
                mean_spec: fit.mean_spec,
                mean_params: fit.mean_params.clone(),
                var_spec: Some(fit.var_spec),
                var_params: Some(fit.var_params.clone()),
                init_sigma2: Some(fit.init_sigma2),
                sigma2_path: fit.sigma2_path.clone(),
                variance_forecast,
                persistence: Some(fit.persistence),
                near_boundary: fit.near_boundary,
                evals: fit.evals,
                seed,
                trace: fit.trace.clone(),
            }),
            error: None,
        },
        Err(e) => FitOutcome::failed(format!("forecast failed: {e}")),
    }
}

/// Regressor rows for the training years and the test years of one
/// (risk measure, alignment) pair. Training rows only read rainfall up to
/// the last training year; test rows use the realized panel.
struct ExogWindow {
    train: Vec<Vec<f64>>,
    future: Vec<Vec<f64>>,
}

fn exog_window(
    regressor: &AnnualSeries,
    train: &DifferencedSeries,
    test_years: [i32; 2],
    lag: usize,
) -> Result<ExogWindow> {
    let lookup = |year: i32| -> Result<Vec<f64>> {
        let src = year - lag as i32;
        regressor.get(src).map(|v| vec![v]).ok_or_else(|| {
            Error::Alignment(format!(
                "no rainfall risk value for {src} (needed by {year} at lag {lag})"
            ))
        })
    };
    let train_rows = (train.start_year()..=train.end_year())
        .map(lookup)
        .collect::<Result<Vec<_>>>()?;
    let future = (test_years[0]..=test_years[1])
        .map(lookup)
        .collect::<Result<Vec<_>>>()?;
    Ok(ExogWindow {
        train: train_rows,
        future,
    })
}

/// Inputs for a single fit: the differenced training window, optional
/// regressor rows and the realized levels of the forecast years.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub train: DifferencedSeries,
    pub exog_train: Vec<Vec<f64>>,
    pub exog_future: Vec<Vec<f64>>,
    /// Realized levels for the forecast years that fall inside the data.
    pub actual: Vec<f64>,
    pub forecast_years: [i32; 2],
}

/// Builds a [`Design`]. With `holdout == 0` the whole series is used for
/// training; regressor rows for years beyond the rainfall panel are an
/// alignment error.
pub fn prepare_design(
    production: &AnnualSeries,
    regressor: Option<(&MonthlyRainfallSeries, RiskVariant, Alignment, &RiskConfig)>,
    holdout: usize,
    d: usize,
    horizon: usize,
) -> Result<Design> {
    if horizon == 0 {
        return Err(Error::InvalidArgument(
            "forecast horizon must be at least 1".into(),
        ));
    }
    let (train_levels, actual) = if holdout == 0 {
        (production.clone(), Vec::new())
    } else {
        let (tr, te) = split(production, &SplitConfig { holdout })?;
        (tr, te.values().iter().copied().take(horizon).collect())
    };
    let train = difference(&train_levels, d)?;
    let forecast_years = [train.end_year() + 1, train.end_year() + horizon as i32];
    let (exog_train, exog_future) = match regressor {
        None => (Vec::new(), Vec::new()),
        Some((rain, rv, alignment, risk)) => {
            let series = build_regressor(rain, rv, risk)?;
            let w = exog_window(&series, &train, forecast_years, alignment.lag())?;
            (w.train, w.future)
        }
    };
    Ok(Design {
        train,
        exog_train,
        exog_future,
        actual,
        forecast_years,
    })
}

fn opt_for(cfg: &GridConfig, key: &str) -> (OptSettings, u64) {
    let seed = derive_seed(cfg.seed, key);
    (
        OptSettings {
            seed: Some(seed),
            ..cfg.opt.clone()
        },
        seed,
    )
}

/// Fits every model of the grid on the training window and scores the
/// iterated forecasts on the held-out years. Individual fit failures are
/// recorded in their cells.
pub fn run_grid(
    production: &AnnualSeries,
    rainfall: &MonthlyRainfallSeries,
    cfg: &GridConfig,
) -> Result<EvaluationGrid> {
    cfg.validate()?;
    let (train_levels, test_levels) = split(production, &cfg.split)?;
    let d = cfg.order.map_or(cfg.d, |o| o[1]);
    if d > 2 {
        return Err(Error::Validation(format!(
            "differencing order {d} not supported"
        )));
    }
    let train = difference(&train_levels, d)?;
    let test_years = [test_levels.start_year(), test_levels.end_year()];
    let actual = test_levels.values().to_vec();

    let first_needed = train.start_year()
        - cfg
            .alignments
            .iter()
            .map(|a| a.lag() as i32)
            .max()
            .unwrap_or(0);
    if rainfall.start_year() > first_needed || rainfall.end_year() < test_years[1] {
        return Err(Error::Validation(format!(
            "rainfall panel {}..={} must cover {}..={}",
            rainfall.start_year(),
            rainfall.end_year(),
            first_needed,
            test_years[1]
        )));
    }
    let dh = data_hash(production, rainfall);
    let config_hash = cfg.hash_with(&dh);

    // order shared by every cell
    let (order, order_selected) = match cfg.order {
        Some(o) => (o, false),
        None => {
            let (opt, _) = opt_for(cfg, "order-selection");
            let fit = select_order(
                &MeanSpec::arima(0, d, 0),
                &train,
                &[],
                cfg.max_order,
                cfg.max_order,
                &opt,
            )?;
            ([fit.spec.p, d, fit.spec.q], true)
        }
    };
    log::info!("mean order ({}, {}, {})", order[0], order[1], order[2]);
    let arima_spec = MeanSpec::arima(order[0], order[1], order[2]);
    let arimax_spec = arima_spec.with_exog(1);
    let var_spec = |f: VarianceFamily| VarianceSpec::new(f, cfg.garch_order[0], cfg.garch_order[1]);

    let regressors = cfg
        .rvs
        .iter()
        .map(|&rv| build_regressor(rainfall, rv, &cfg.risk).map(|s| (rv, s)))
        .collect::<Result<Vec<_>>>()?;

    // homoskedastic ARIMA, fitted once
    let (opt, arima_seed) = opt_for(cfg, "ARIMA");
    let arima_fit = settle_mean(fit_mean_warm(&arima_spec, &train, &[], &opt, None));
    let arima_outcome = match &arima_fit {
        Ok(f) => mean_outcome(f, &[], &actual, arima_seed),
        Err(e) => FitOutcome::failed(e.to_string()),
    };

    // ARIMAX once per (risk measure, alignment)
    let pairs: Vec<(RiskVariant, Alignment)> = cfg
        .rvs
        .iter()
        .flat_map(|&rv| cfg.alignments.iter().map(move |&a| (rv, a)))
        .collect();
    let windows = pairs
        .iter()
        .map(|&(rv, a)| {
            let reg = &regressors
                .iter()
                .find(|(v, _)| *v == rv)
                .expect("regressor built")
                .1;
            exog_window(reg, &train, test_years, a.lag())
        })
        .collect::<Result<Vec<_>>>()?;

    let warm = arima_fit.as_ref().ok().map(|f| f.params.clone());
    let arimax: Vec<(Result<MeanFit>, FitOutcome)> = pairs
        .par_iter()
        .zip(&windows)
        .map(|(&(rv, a), w)| {
            let (opt, seed) = opt_for(cfg, &format!("ARIMAX/{rv}/{a}"));
            let fit = settle_mean(fit_mean_warm(
                &arimax_spec,
                &train,
                &w.train,
                &opt,
                warm.as_ref(),
            ));
            let outcome = match &fit {
                Ok(f) => mean_outcome(f, &w.future, &actual, seed),
                Err(e) => FitOutcome::failed(e.to_string()),
            };
            (fit, outcome)
        })
        .collect();

    // GARCH-ARIMA once per family
    let garch_arima: Vec<FitOutcome> = cfg
        .families
        .par_iter()
        .map(|&fam| {
            let (opt, seed) = opt_for(cfg, &format!("{fam}/ARIMA"));
            let fit = settle_garch(fit_garch_from(
                &arima_spec,
                &var_spec(fam),
                &train,
                &[],
                &opt,
                arima_fit.as_ref().ok(),
            ));
            match &fit {
                Ok(f) => garch_outcome(f, &[], &actual, seed),
                Err(e) => FitOutcome::failed(e.to_string()),
            }
        })
        .collect();

    // GARCH-ARIMAX per (family, risk measure, alignment)
    let triples: Vec<(usize, usize)> = (0..cfg.families.len())
        .flat_map(|fi| (0..pairs.len()).map(move |pi| (fi, pi)))
        .collect();
    let garch_arimax: Vec<FitOutcome> = triples
        .par_iter()
        .map(|&(fi, pi)| {
            let fam = cfg.families[fi];
            let (rv, a) = pairs[pi];
            let w = &windows[pi];
            let (opt, seed) = opt_for(cfg, &format!("{fam}/ARIMAX/{rv}/{a}"));
            let fit = settle_garch(fit_garch_from(
                &arimax_spec,
                &var_spec(fam),
                &train,
                &w.train,
                &opt,
                arimax[pi].0.as_ref().ok(),
            ));
            match &fit {
                Ok(f) => garch_outcome(f, &w.future, &actual, seed),
                Err(e) => FitOutcome::failed(e.to_string()),
            }
        })
        .collect();

    let mut cells = Vec::with_capacity(cfg.families.len() * pairs.len() * 4);
    for (fi, &family) in cfg.families.iter().enumerate() {
        for &alignment in &cfg.alignments {
            for &rv in &cfg.rvs {
                let pi = pairs
                    .iter()
                    .position(|&p| p == (rv, alignment))
                    .expect("pair enumerated");
                for model in ModelKind::ALL {
                    let o = match model {
                        ModelKind::Arima => &arima_outcome,
                        ModelKind::GarchArima => &garch_arima[fi],
                        ModelKind::Arimax => &arimax[pi].1,
                        ModelKind::GarchArimax => &garch_arimax[fi * pairs.len() + pi],
                    };
                    cells.push(GridCell {
                        family,
                        alignment,
                        rv,
                        model,
                        converged: o.converged,
                        metrics: o.metrics.clone(),
                        diagnostics: o.diagnostics.clone(),
                        error: o.error.clone(),
                    });
                }
            }
        }
    }

    Ok(EvaluationGrid {
        cells,
        metadata: GridMetadata {
            config_hash,
            data_hash: dh,
            production_years: [production.start_year(), production.end_year()],
            rainfall_years: [rainfall.start_year(), rainfall.end_year()],
            train_years: [train.start_year(), train.end_year()],
            test_years,
            unit: production.unit().to_string(),
            order,
            order_selected,
            config: cfg.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}
