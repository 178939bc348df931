//! ARMA mean equations with optional exogenous regressors, estimated by
//! conditional sum of squares on a differenced series.
//!
//! `y_t = alpha + sum phi_i y_{t-i} + sum theta_j e_{t-j} + sum gamma_k x_{t,k} + e_t`
//!
//! Presample values of `y` and `e` are zero. Exogenous regressors enter
//! contemporaneously; any lag is applied beforehand by year alignment.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{BestSoFar, Error, Result};
use crate::eval::{aic_pair, AicPair};
use crate::ols::least_squares;
use crate::optim::{minimize, OptSettings, TracePoint, PENALTY};
use crate::series::DifferencedSeries;
use crate::transform::{
    ar_to_unconstrained, is_invertible, is_stationary, ma_to_unconstrained, pacf_to_ar, pacf_to_ma,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeanSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub include_constant: bool,
    pub exog_count: usize,
}

impl MeanSpec {
    pub fn arima(p: usize, d: usize, q: usize) -> Self {
        Self {
            p,
            d,
            q,
            include_constant: true,
            exog_count: 0,
        }
    }

    pub fn with_exog(mut self, k: usize) -> Self {
        self.exog_count = k;
        self
    }

    pub fn without_constant(mut self) -> Self {
        self.include_constant = false;
        self
    }

    /// Number of mean-equation coefficients.
    pub fn coefficient_count(&self) -> usize {
        self.p + self.q + self.exog_count + usize::from(self.include_constant)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d > 2 {
            return Err(Error::InvalidArgument(format!(
                "differencing order {} not supported",
                self.d
            )));
        }
        if self.coefficient_count() == 0 {
            return Err(Error::InvalidArgument(
                "mean model needs at least one coefficient".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanParams {
    pub alpha: f64,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl MeanParams {
    pub fn zeros(spec: &MeanSpec) -> Self {
        Self {
            alpha: 0.0,
            phi: vec![0.0; spec.p],
            theta: vec![0.0; spec.q],
            gamma: vec![0.0; spec.exog_count],
        }
    }

    pub fn is_stationary(&self) -> bool {
        is_stationary(&self.phi)
    }

    pub fn is_invertible(&self) -> bool {
        is_invertible(&self.theta)
    }

    fn check_shape(&self, spec: &MeanSpec) -> Result<()> {
        if self.phi.len() != spec.p
            || self.theta.len() != spec.q
            || self.gamma.len() != spec.exog_count
        {
            return Err(Error::InvalidArgument(
                "parameter lengths do not match the model orders".into(),
            ));
        }
        Ok(())
    }
}

fn check_exog(spec: &MeanSpec, n: usize, exog: &[Vec<f64>]) -> Result<()> {
    if spec.exog_count == 0 {
        return Ok(());
    }
    if exog.len() != n {
        return Err(Error::InvalidArgument(format!(
            "exogenous matrix has {} rows, expected {n}",
            exog.len()
        )));
    }
    if let Some(i) = exog.iter().position(|r| r.len() != spec.exog_count) {
        return Err(Error::InvalidArgument(format!(
            "exogenous row {i} has {} columns, expected {}",
            exog[i].len(),
            spec.exog_count
        )));
    }
    Ok(())
}

/// Recursive one-step residuals with zero presample values.
pub fn arma_residuals(
    spec: &MeanSpec,
    params: &MeanParams,
    y: &[f64],
    exog: &[Vec<f64>],
) -> Result<Vec<f64>> {
    params.check_shape(spec)?;
    if y.is_empty() {
        return Err(Error::InvalidArgument("empty response".into()));
    }
    check_exog(spec, y.len(), exog)?;
    Ok(residuals_unchecked(params, y, exog))
}

fn residuals_unchecked(params: &MeanParams, y: &[f64], exog: &[Vec<f64>]) -> Vec<f64> {
    let mut e = vec![0.0; y.len()];
    for t in 0..y.len() {
        let mut fitted = params.alpha;
        for (i, phi) in params.phi.iter().enumerate() {
            if t > i {
                fitted += phi * y[t - 1 - i];
            }
        }
        for (j, theta) in params.theta.iter().enumerate() {
            if t > j {
                fitted += theta * e[t - 1 - j];
            }
        }
        if !params.gamma.is_empty() {
            fitted += params
                .gamma
                .iter()
                .zip(&exog[t])
                .map(|(g, x)| g * x)
                .sum::<f64>();
        }
        e[t] = y[t] - fitted;
    }
    e
}

/// Gaussian log-likelihood of residuals with constant variance.
pub fn gaussian_loglik(residuals: &[f64], sigma2: f64) -> f64 {
    let ln_2pi = (2.0 * PI).ln();
    residuals
        .iter()
        .map(|e| -0.5 * (ln_2pi + sigma2.ln() + e * e / sigma2))
        .sum()
}

pub fn css_loglik(
    spec: &MeanSpec,
    params: &MeanParams,
    y: &[f64],
    exog: &[Vec<f64>],
    sigma2: f64,
) -> Result<f64> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    let e = arma_residuals(spec, params, y, exog)?;
    if let Some(i) = e.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericalOverflow { index: i });
    }
    Ok(gaussian_loglik(&e, sigma2))
}

/// Internal rescaling: the response is divided by its root mean square and
/// each regressor is standardized over the training window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Scaling {
    pub y_scale: f64,
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
}

impl Scaling {
    pub fn from_data(spec: &MeanSpec, y: &[f64], exog: &[Vec<f64>]) -> Result<Self> {
        let n = y.len() as f64;
        let y_scale = (y.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        if !(y_scale > 0.0 && y_scale.is_finite()) {
            return Err(Error::Degenerate("response is identically zero".into()));
        }
        let mut x_mean = Vec::with_capacity(spec.exog_count);
        let mut x_scale = Vec::with_capacity(spec.exog_count);
        for k in 0..spec.exog_count {
            let col: Vec<f64> = exog.iter().map(|r| r[k]).collect();
            let m = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
            if !(sd > 0.0 && sd.is_finite()) {
                return Err(Error::Degenerate(format!(
                    "exogenous regressor {k} is constant over the training window"
                )));
            }
            x_mean.push(if spec.include_constant { m } else { 0.0 });
            x_scale.push(sd);
        }
        Ok(Self {
            y_scale,
            x_mean,
            x_scale,
        })
    }

    pub fn scale_y(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| v / self.y_scale).collect()
    }

    pub fn scale_exog(&self, exog: &[Vec<f64>]) -> Vec<Vec<f64>> {
        exog.iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(k, x)| (x - self.x_mean[k]) / self.x_scale[k])
                    .collect()
            })
            .collect()
    }

    pub fn to_original(&self, p: &MeanParams) -> MeanParams {
        let shift: f64 = (0..p.gamma.len())
            .map(|k| p.gamma[k] * self.x_mean[k] / self.x_scale[k])
            .sum();
        MeanParams {
            alpha: self.y_scale * (p.alpha - shift),
            phi: p.phi.clone(),
            theta: p.theta.clone(),
            gamma: (0..p.gamma.len())
                .map(|k| self.y_scale * p.gamma[k] / self.x_scale[k])
                .collect(),
        }
    }

    pub fn to_scaled(&self, p: &MeanParams) -> MeanParams {
        let gamma: Vec<f64> = (0..p.gamma.len())
            .map(|k| p.gamma[k] * self.x_scale[k] / self.y_scale)
            .collect();
        let shift: f64 = (0..gamma.len())
            .map(|k| gamma[k] * self.x_mean[k] / self.x_scale[k])
            .sum();
        MeanParams {
            alpha: p.alpha / self.y_scale + shift,
            phi: p.phi.clone(),
            theta: p.theta.clone(),
            gamma,
        }
    }
}

/// Packing of mean parameters into unconstrained optimizer coordinates.
pub(crate) struct MeanCoords {
    pub spec: MeanSpec,
}

impl MeanCoords {
    pub fn len(&self) -> usize {
        self.spec.coefficient_count()
    }

    pub fn unpack(&self, x: &[f64]) -> MeanParams {
        let s = &self.spec;
        let mut i = 0;
        let alpha = if s.include_constant {
            i += 1;
            x[0]
        } else {
            0.0
        };
        let phi = pacf_to_ar(&x[i..i + s.p]);
        i += s.p;
        let theta = pacf_to_ma(&x[i..i + s.q]);
        i += s.q;
        let gamma = x[i..i + s.exog_count].to_vec();
        MeanParams {
            alpha,
            phi,
            theta,
            gamma,
        }
    }

    /// Inverse of `unpack`; AR/MA parts outside the admissible region are
    /// shrunk towards zero until they fit.
    pub fn pack(&self, p: &MeanParams) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.len());
        if self.spec.include_constant {
            x.push(p.alpha);
        }
        x.extend(shrink_until(&p.phi, ar_to_unconstrained));
        x.extend(shrink_until(&p.theta, ma_to_unconstrained));
        x.extend(&p.gamma);
        x
    }
}

fn shrink_until(coef: &[f64], f: fn(&[f64]) -> Option<Vec<f64>>) -> Vec<f64> {
    let mut c = coef.to_vec();
    for _ in 0..60 {
        if let Some(u) = f(&c) {
            return u;
        }
        c.iter_mut().for_each(|v| *v *= 0.9);
    }
    vec![0.0; coef.len()]
}

/// Concentrated CSS negative log-likelihood (sigma2 profiled out).
fn concentrated_nll(resid: &[f64]) -> f64 {
    let n = resid.len() as f64;
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    if !ssr.is_finite() || ssr <= 0.0 {
        return PENALTY;
    }
    0.5 * n * ((2.0 * PI).ln() + (ssr / n).ln() + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFit {
    pub spec: MeanSpec,
    pub params: MeanParams,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: AicPair,
    /// Parameter count used in the AIC (coefficients plus the variance).
    pub n_params: usize,
    pub residuals: Vec<f64>,
    pub training: DifferencedSeries,
    pub stationary: bool,
    pub invertible: bool,
    pub converged: bool,
    pub evals: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TracePoint>,
}

impl MeanFit {
    pub fn n_obs(&self) -> usize {
        self.residuals.len()
    }
}

/// Least-squares start: regress `y_t` on a constant, its first `p` lags and
/// the regressors, leaving MA terms at zero.
fn moment_start(spec: &MeanSpec, y: &[f64], exog: &[Vec<f64>]) -> MeanParams {
    let mut start = MeanParams::zeros(spec);
    if spec.include_constant {
        start.alpha = y.iter().sum::<f64>() / y.len() as f64;
    }
    let cols = spec.p + spec.exog_count + usize::from(spec.include_constant);
    let rows = y.len().saturating_sub(spec.p);
    if cols == 0 || rows <= cols {
        return start;
    }
    let mut x = DMatrix::zeros(rows, cols);
    let mut resp = Vec::with_capacity(rows);
    for (r, t) in (spec.p..y.len()).enumerate() {
        resp.push(y[t]);
        let mut c = 0;
        if spec.include_constant {
            x[(r, 0)] = 1.0;
            c = 1;
        }
        for i in 0..spec.p {
            x[(r, c + i)] = y[t - 1 - i];
        }
        for k in 0..spec.exog_count {
            x[(r, c + spec.p + k)] = exog[t][k];
        }
    }
    if let Ok(fit) = least_squares(&x, &resp) {
        let b = fit.coefficients;
        let c = usize::from(spec.include_constant);
        if spec.include_constant {
            start.alpha = b[0];
        }
        start.phi = b[c..c + spec.p].to_vec();
        start.gamma = b[c + spec.p..].to_vec();
    }
    start
}

pub fn fit_mean(
    spec: &MeanSpec,
    y: &DifferencedSeries,
    exog: &[Vec<f64>],
    opt: &OptSettings,
) -> Result<MeanFit> {
    fit_mean_warm(spec, y, exog, opt, None)
}

/// Like [`fit_mean`], adding `warm` (on the original scale) to the start
/// points. A warm start with fewer regressors is padded with zero
/// coefficients, which makes nested fits at least as good as their base.
pub fn fit_mean_warm(
    spec: &MeanSpec,
    y: &DifferencedSeries,
    exog: &[Vec<f64>],
    opt: &OptSettings,
    warm: Option<&MeanParams>,
) -> Result<MeanFit> {
    spec.validate()?;
    if y.order() != spec.d {
        return Err(Error::InvalidArgument(format!(
            "series differenced {} times but model has d = {}",
            y.order(),
            spec.d
        )));
    }
    let values = y.values();
    let n = values.len();
    let needed = spec.p + spec.q + spec.exog_count + 2;
    if n < needed {
        return Err(Error::InsufficientData { needed, got: n });
    }
    check_exog(spec, n, exog)?;

    let scaling = Scaling::from_data(spec, values, exog)?;
    let ys = scaling.scale_y(values);
    let xs = scaling.scale_exog(exog);
    let coords = MeanCoords { spec: *spec };

    let objective = |x: &[f64]| -> f64 {
        let p = coords.unpack(x);
        concentrated_nll(&residuals_unchecked(&p, &ys, &xs))
    };

    let moment = moment_start(spec, &ys, &xs);
    let mut flat = MeanParams::zeros(spec);
    if spec.include_constant {
        flat.alpha = ys.iter().sum::<f64>() / n as f64;
    }
    let mut ma_probe = moment.clone();
    ma_probe.theta.iter_mut().for_each(|t| *t = 0.2);
    ma_probe.phi.iter_mut().for_each(|v| *v *= 0.5);

    let mut starts = vec![
        coords.pack(&moment),
        coords.pack(&flat),
        coords.pack(&ma_probe),
    ];
    if let Some(w) = warm {
        let mut padded = w.clone();
        padded.phi.resize(spec.p, 0.0);
        padded.theta.resize(spec.q, 0.0);
        padded.gamma.resize(spec.exog_count, 0.0);
        let mut scaled = scaling.to_scaled(&padded);
        if spec.exog_count > 0 && w.gamma.len() < spec.exog_count {
            // zero slopes on the new regressors leave the intercept unchanged
            scaled.alpha = w.alpha / scaling.y_scale;
        }
        starts.insert(0, coords.pack(&scaled));
    }

    let result = minimize(&objective, &starts, opt);
    if result.f_best >= PENALTY {
        return Err(Error::FitFailed(
            "no admissible parameter vector found".into(),
        ));
    }

    let params = scaling.to_original(&coords.unpack(&result.x_best));
    let residuals = residuals_unchecked(&params, values, exog);
    let sigma2 = residuals.iter().map(|e| e * e).sum::<f64>() / n as f64;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::FitFailed("degenerate residual variance".into()));
    }
    let loglik = gaussian_loglik(&residuals, sigma2);
    let n_params = spec.coefficient_count() + 1;
    let fit = MeanFit {
        spec: *spec,
        stationary: params.is_stationary(),
        invertible: params.is_invertible(),
        params,
        sigma2,
        loglik,
        aic: aic_pair(loglik, n_params, n),
        n_params,
        residuals,
        training: y.clone(),
        converged: result.converged,
        evals: result.evals,
        trace: result.trace,
    };
    if !fit.converged {
        return Err(Error::NotConverged {
            evals: result.evals,
            best_neg_loglik: -fit.loglik,
            best: Box::new(BestSoFar::Mean(fit)),
        });
    }
    Ok(fit)
}

/// Iterated point forecasts on the differenced scale. Future shocks are
/// zero; `future_exog` holds one row per step when the model has regressors.
#[allow(clippy::needless_range_loop)]
pub fn forecast_arma(
    spec: &MeanSpec,
    params: &MeanParams,
    y_hist: &[f64],
    resid_hist: &[f64],
    h: usize,
    future_exog: &[Vec<f64>],
) -> Result<Vec<f64>> {
    params.check_shape(spec)?;
    if h == 0 {
        return Err(Error::InvalidArgument(
            "forecast horizon must be at least 1".into(),
        ));
    }
    if spec.exog_count > 0 {
        if future_exog.len() < h {
            return Err(Error::InvalidArgument(format!(
                "need {h} rows of future regressors, got {}",
                future_exog.len()
            )));
        }
        check_exog(spec, future_exog.len(), future_exog)?;
    }
    let mut y = y_hist.to_vec();
    let mut e = resid_hist.to_vec();
    let mut out = Vec::with_capacity(h);
    for step in 0..h {
        let t = y.len();
        let mut f = params.alpha;
        for (i, phi) in params.phi.iter().enumerate() {
            if t > i {
                f += phi * y[t - 1 - i];
            }
        }
        for (j, theta) in params.theta.iter().enumerate() {
            if e.len() > j {
                f += theta * e[e.len() - 1 - j];
            }
        }
        if spec.exog_count > 0 {
            f += params
                .gamma
                .iter()
                .zip(&future_exog[step])
                .map(|(g, x)| g * x)
                .sum::<f64>();
        }
        out.push(f);
        y.push(f);
        e.push(0.0);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    /// Year of the first forecast.
    pub start_year: i32,
    /// Forecasts on the differenced scale.
    pub diffs: Vec<f64>,
    /// Forecasts on the original (level) scale.
    pub levels: Vec<f64>,
}

pub fn forecast_mean(fit: &MeanFit, h: usize, future_exog: &[Vec<f64>]) -> Result<Forecast> {
    let diffs = forecast_arma(
        &fit.spec,
        &fit.params,
        fit.training.values(),
        &fit.residuals,
        h,
        future_exog,
    )?;
    let levels = fit.training.integrate_forward(&diffs)?;
    Ok(Forecast {
        start_year: fit.training.end_year() + 1,
        diffs,
        levels,
    })
}

/// Fits every ARMA(p, q) with `p <= max_p`, `q <= max_q` and returns the
/// lowest-AIC fit. Candidates that fail are skipped; non-converged
/// candidates compete with their best-so-far estimates but lose ties to
/// converged ones.
pub fn select_order(
    base: &MeanSpec,
    y: &DifferencedSeries,
    exog: &[Vec<f64>],
    max_p: usize,
    max_q: usize,
    opt: &OptSettings,
) -> Result<MeanFit> {
    let mut best: Option<MeanFit> = None;
    for p in 0..=max_p {
        for q in 0..=max_q {
            let spec = MeanSpec { p, q, ..*base };
            if spec.validate().is_err() {
                continue;
            }
            let fit = match fit_mean(&spec, y, exog, opt) {
                Ok(f) => f,
                Err(Error::NotConverged { best, .. }) => match *best {
                    BestSoFar::Mean(f) => f,
                    BestSoFar::Garch(_) => continue,
                },
                Err(e) => {
                    log::debug!("ARMA({p},{q}) skipped: {e}");
                    continue;
                }
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    fit.aic.raw < b.aic.raw && (fit.converged || !b.converged)
                        || (fit.converged && !b.converged)
                }
            };
            if better {
                best = Some(fit);
            }
        }
    }
    best.ok_or_else(|| Error::FitFailed(format!("every ARMA order up to ({max_p},{max_q}) failed")))
}
