//! ARMA(X) mean equations with GARCH-family conditional variance, fitted
//! jointly by Gaussian maximum likelihood.
//!
//! Supported variance recursions, with `e` the mean-equation residual and
//! `z = e / sigma`:
//!
//! * sGARCH: `s2_t = w + sum a_i e2_{t-i} + sum b_j s2_{t-j}`
//! * gjrGARCH: sGARCH plus `sum g_i 1[e_{t-i} < 0] e2_{t-i}`
//! * iGARCH: sGARCH with `sum a + sum b = 1`; the last beta is implied
//! * eGARCH: `ln s2_t = w + sum a_i z_{t-i} + sum g_i (|z_{t-i}| - E|z|) + sum b_j ln s2_{t-j}`

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BestSoFar, Error, Result};
use crate::eval::{aic_pair, AicPair};
use crate::mean::{
    arma_residuals, fit_mean, forecast_arma, Forecast, MeanCoords, MeanFit, MeanParams, MeanSpec,
    Scaling,
};
use crate::optim::{minimize, OptSettings, TracePoint, PENALTY};
use crate::series::DifferencedSeries;
use crate::transform::{
    l1_ball, l1_ball_inv, simplex_full, simplex_full_inv, simplex_with_slack,
    simplex_with_slack_inv,
};

/// `E|z|` for a standard normal variable.
pub const ABS_NORMAL_MEAN: f64 = 0.797_884_560_802_865_4;

/// Persistence above which a fit is flagged as sitting on the
/// stationarity boundary.
pub const NEAR_BOUNDARY: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarianceFamily {
    #[serde(rename = "sGARCH")]
    SGarch,
    #[serde(rename = "eGARCH")]
    EGarch,
    #[serde(rename = "gjrGARCH")]
    GjrGarch,
    #[serde(rename = "iGARCH")]
    IGarch,
}

impl VarianceFamily {
    pub const ALL: [VarianceFamily; 4] = [Self::SGarch, Self::EGarch, Self::GjrGarch, Self::IGarch];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SGarch => "sGARCH",
            Self::EGarch => "eGARCH",
            Self::GjrGarch => "gjrGARCH",
            Self::IGarch => "iGARCH",
        }
    }

    pub fn has_asymmetry(self) -> bool {
        matches!(self, Self::EGarch | Self::GjrGarch)
    }
}

impl fmt::Display for VarianceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VarianceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgarch" => Ok(Self::SGarch),
            "egarch" => Ok(Self::EGarch),
            "gjrgarch" | "gjr" => Ok(Self::GjrGarch),
            "igarch" => Ok(Self::IGarch),
            _ => Err(Error::InvalidArgument(format!(
                "unknown variance family {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarianceSpec {
    pub family: VarianceFamily,
    pub r: usize,
    pub s: usize,
}

impl VarianceSpec {
    pub fn new(family: VarianceFamily, r: usize, s: usize) -> Self {
        Self { family, r, s }
    }

    /// The (1,1) model of a family.
    pub fn garch11(family: VarianceFamily) -> Self {
        Self::new(family, 1, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r > 2 || self.s > 2 {
            return Err(Error::InvalidArgument(format!(
                "unsupported variance orders ({}, {})",
                self.r, self.s
            )));
        }
        if self.family == VarianceFamily::IGarch && self.s == 0 {
            return Err(Error::InvalidArgument(
                "iGARCH needs at least one GARCH term".into(),
            ));
        }
        Ok(())
    }

    /// Free variance parameters.
    pub fn parameter_count(&self) -> usize {
        let asym = if self.family.has_asymmetry() {
            self.r
        } else {
            0
        };
        let implied = usize::from(self.family == VarianceFamily::IGarch);
        1 + self.r + self.s + asym - implied
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceParams {
    pub omega: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Asymmetry terms; empty for sGARCH and iGARCH.
    pub gamma: Vec<f64>,
}

impl VarianceParams {
    /// `sum alpha + sum beta (+ sum gamma / 2 for gjrGARCH)`, or `sum |beta|`
    /// for eGARCH.
    pub fn persistence(&self, family: VarianceFamily) -> f64 {
        let a: f64 = self.alpha.iter().sum();
        let b: f64 = self.beta.iter().sum();
        match family {
            VarianceFamily::SGarch | VarianceFamily::IGarch => a + b,
            VarianceFamily::GjrGarch => a + b + 0.5 * self.gamma.iter().sum::<f64>(),
            VarianceFamily::EGarch => self.beta.iter().map(|v| v.abs()).sum(),
        }
    }

    pub fn is_admissible(&self, spec: &VarianceSpec) -> bool {
        let asym = if spec.family.has_asymmetry() {
            spec.r
        } else {
            0
        };
        if self.alpha.len() != spec.r || self.beta.len() != spec.s || self.gamma.len() != asym {
            return false;
        }
        let all = std::iter::once(self.omega)
            .chain(self.alpha.iter().copied())
            .chain(self.beta.iter().copied())
            .chain(self.gamma.iter().copied());
        if all.clone().any(|v| !v.is_finite()) {
            return false;
        }
        let p = self.persistence(spec.family);
        match spec.family {
            VarianceFamily::SGarch => {
                self.omega > 0.0
                    && self.alpha.iter().all(|&a| a >= 0.0)
                    && self.beta.iter().all(|&b| b >= 0.0)
                    && p < 1.0
            }
            VarianceFamily::GjrGarch => {
                self.omega > 0.0
                    && self.alpha.iter().all(|&a| a >= 0.0)
                    && self.beta.iter().all(|&b| b >= 0.0)
                    && self
                        .alpha
                        .iter()
                        .zip(&self.gamma)
                        .all(|(a, g)| a + g >= 0.0)
                    && p < 1.0
            }
            VarianceFamily::IGarch => {
                self.omega > 0.0
                    && self.alpha.iter().all(|&a| a >= 0.0)
                    && self.beta.iter().all(|&b| b >= 0.0)
                    && (p - 1.0).abs() < 1e-8
            }
            VarianceFamily::EGarch => p < 1.0,
        }
    }
}

fn check_shapes(spec: &VarianceSpec, params: &VarianceParams) -> Result<()> {
    spec.validate()?;
    let asym = if spec.family.has_asymmetry() {
        spec.r
    } else {
        0
    };
    if params.alpha.len() != spec.r || params.beta.len() != spec.s || params.gamma.len() != asym {
        return Err(Error::InvalidArgument(format!(
            "{} parameter lengths do not match orders ({}, {})",
            spec.family, spec.r, spec.s
        )));
    }
    Ok(())
}

/// Conditional variances for `residuals`. Presample squared residuals and
/// variances equal `init_sigma2`; the presample gjrGARCH indicator takes its
/// expectation 1/2, and presample eGARCH shocks contribute nothing.
pub fn variance_recursion(
    spec: &VarianceSpec,
    params: &VarianceParams,
    residuals: &[f64],
    init_sigma2: f64,
) -> Result<Vec<f64>> {
    check_shapes(spec, params)?;
    if residuals.is_empty() {
        return Err(Error::InvalidArgument("empty residual sequence".into()));
    }
    if !(init_sigma2 > 0.0 && init_sigma2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "initial variance must be positive, got {init_sigma2}"
        )));
    }
    let path = recursion_unchecked(spec, params, residuals, init_sigma2);
    if let Some(i) = path.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::NumericalOverflow { index: i });
    }
    Ok(path)
}

fn recursion_unchecked(
    spec: &VarianceSpec,
    params: &VarianceParams,
    e: &[f64],
    init: f64,
) -> Vec<f64> {
    let n = e.len();
    let mut s2: Vec<f64> = Vec::with_capacity(n);
    match spec.family {
        VarianceFamily::EGarch => {
            let ln_init = init.ln();
            let mut ln_s2: Vec<f64> = Vec::with_capacity(n);
            for t in 0..n {
                let mut v = params.omega;
                for i in 0..spec.r {
                    if t > i {
                        let k = t - 1 - i;
                        let z = e[k] / s2[k].sqrt();
                        v += params.alpha[i] * z + params.gamma[i] * (z.abs() - ABS_NORMAL_MEAN);
                    }
                }
                for j in 0..spec.s {
                    v += params.beta[j] * if t > j { ln_s2[t - 1 - j] } else { ln_init };
                }
                ln_s2.push(v);
                s2.push(v.exp());
            }
        }
        _ => {
            let gjr = spec.family == VarianceFamily::GjrGarch;
            for t in 0..n {
                let mut v = params.omega;
                for i in 0..spec.r {
                    let (sq, ind) = if t > i {
                        let r = e[t - 1 - i];
                        (r * r, if r < 0.0 { 1.0 } else { 0.0 })
                    } else {
                        (init, 0.5)
                    };
                    v += params.alpha[i] * sq;
                    if gjr {
                        v += params.gamma[i] * ind * sq;
                    }
                }
                for j in 0..spec.s {
                    v += params.beta[j] * if t > j { s2[t - 1 - j] } else { init };
                }
                s2.push(v);
            }
        }
    }
    s2
}

fn gaussian_terms(e: &[f64], s2: &[f64]) -> f64 {
    let ln_2pi = (2.0 * PI).ln();
    e.iter()
        .zip(s2)
        .map(|(r, v)| -0.5 * (ln_2pi + v.ln() + r * r / v))
        .sum()
}

/// Joint Gaussian log-likelihood. Inadmissible variance parameters or a
/// non-finite path give `-PENALTY` rather than an error.
#[allow(clippy::too_many_arguments)]
pub fn garch_loglik(
    mean_spec: &MeanSpec,
    var_spec: &VarianceSpec,
    mean_params: &MeanParams,
    var_params: &VarianceParams,
    y: &[f64],
    exog: &[Vec<f64>],
    init_sigma2: f64,
) -> Result<f64> {
    check_shapes(var_spec, var_params)?;
    let e = arma_residuals(mean_spec, mean_params, y, exog)?;
    if !(init_sigma2 > 0.0 && init_sigma2.is_finite()) || !var_params.is_admissible(var_spec) {
        return Ok(-PENALTY);
    }
    let s2 = recursion_unchecked(var_spec, var_params, &e, init_sigma2);
    let ll = gaussian_terms(&e, &s2);
    Ok(if ll.is_finite() {
        ll.max(-PENALTY)
    } else {
        -PENALTY
    })
}

/// Unconstrained coordinates for the variance parameters.
struct VarCoords {
    spec: VarianceSpec,
}

impl VarCoords {
    fn len(&self) -> usize {
        self.spec.parameter_count()
    }

    fn unpack(&self, x: &[f64]) -> VarianceParams {
        let VarianceSpec { family, r, s } = self.spec;
        match family {
            VarianceFamily::SGarch => {
                let w = simplex_with_slack(&x[1..1 + r + s]);
                VarianceParams {
                    omega: x[0].exp(),
                    alpha: w[..r].to_vec(),
                    beta: w[r..].to_vec(),
                    gamma: vec![],
                }
            }
            VarianceFamily::GjrGarch => {
                let w = simplex_with_slack(&x[1..1 + 2 * r + s]);
                let alpha: Vec<f64> = w[..r].iter().map(|a| 2.0 * a).collect();
                let gamma = (0..r).map(|i| 2.0 * (w[r + i] - w[i])).collect();
                VarianceParams {
                    omega: x[0].exp(),
                    alpha,
                    beta: w[2 * r..].to_vec(),
                    gamma,
                }
            }
            VarianceFamily::IGarch => {
                let w = simplex_full(&x[1..r + s]);
                VarianceParams {
                    omega: x[0].exp(),
                    alpha: w[..r].to_vec(),
                    beta: w[r..].to_vec(),
                    gamma: vec![],
                }
            }
            VarianceFamily::EGarch => VarianceParams {
                omega: x[0],
                alpha: x[1..1 + r].to_vec(),
                gamma: x[1 + r..1 + 2 * r].to_vec(),
                beta: l1_ball(&x[1 + 2 * r..1 + 2 * r + s]),
            },
        }
    }

    fn pack(&self, p: &VarianceParams) -> Option<Vec<f64>> {
        let VarianceSpec { family, r, .. } = self.spec;
        let mut x = Vec::with_capacity(self.len());
        match family {
            VarianceFamily::SGarch => {
                x.push(p.omega.ln());
                let w: Vec<f64> = p.alpha.iter().chain(&p.beta).copied().collect();
                x.extend(simplex_with_slack_inv(&w)?);
            }
            VarianceFamily::GjrGarch => {
                x.push(p.omega.ln());
                let mut w: Vec<f64> = p.alpha.iter().map(|a| a / 2.0).collect();
                w.extend((0..r).map(|i| (p.alpha[i] + p.gamma[i]) / 2.0));
                w.extend(&p.beta);
                x.extend(simplex_with_slack_inv(&w)?);
            }
            VarianceFamily::IGarch => {
                x.push(p.omega.ln());
                let w: Vec<f64> = p.alpha.iter().chain(&p.beta).copied().collect();
                x.extend(simplex_full_inv(&w)?);
            }
            VarianceFamily::EGarch => {
                x.push(p.omega);
                x.extend(&p.alpha);
                x.extend(&p.gamma);
                x.extend(l1_ball_inv(&p.beta)?);
            }
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

/// Converts variance parameters between the original scale and a response
/// scaled by `1 / y_scale`.
fn rescale_variance(
    family: VarianceFamily,
    p: &VarianceParams,
    y_scale: f64,
    to_scaled: bool,
) -> VarianceParams {
    let c = y_scale * y_scale;
    let mut out = p.clone();
    match family {
        VarianceFamily::EGarch => {
            let shift = (1.0 - p.beta.iter().sum::<f64>()) * c.ln();
            out.omega = if to_scaled {
                p.omega - shift
            } else {
                p.omega + shift
            };
        }
        _ => out.omega = if to_scaled { p.omega / c } else { p.omega * c },
    }
    out
}

/// Three variance start points on a response with variance `v`: a
/// conventional warm start, a near-constant-variance start that reproduces
/// the homoskedastic optimum, and a more reactive start.
fn variance_starts(spec: &VarianceSpec, v: f64) -> Vec<VarianceParams> {
    let VarianceSpec { family, r, s } = *spec;
    let spread = |total: f64, k: usize| vec![total / k.max(1) as f64; k];
    let sym = |omega: f64, a: f64, b: f64| VarianceParams {
        omega,
        alpha: spread(a, r),
        beta: spread(b, s),
        gamma: vec![],
    };
    match family {
        VarianceFamily::SGarch => {
            let tiny = 1e-8;
            vec![
                sym(0.15 * v, 0.05, if s > 0 { 0.80 } else { 0.0 }),
                sym(
                    v * (1.0 - tiny * (r + s) as f64),
                    tiny * r as f64,
                    tiny * s as f64,
                ),
                sym(0.3 * v, 0.2, if s > 0 { 0.5 } else { 0.0 }),
            ]
            .into_iter()
            .map(|mut p| {
                if s == 0 {
                    p.omega = v * (1.0 - p.alpha.iter().sum::<f64>());
                }
                p
            })
            .collect()
        }
        VarianceFamily::GjrGarch => {
            let tiny = 1e-8;
            let with_gamma = |mut p: VarianceParams, g: f64| {
                p.gamma = spread(g, r);
                p
            };
            let b = |x: f64| if s > 0 { x } else { 0.0 };
            vec![
                with_gamma(sym(0.15 * v, 0.05, b(0.75)), 0.05),
                with_gamma(
                    sym(
                        v * (1.0 - tiny * (r + s) as f64),
                        tiny * r as f64,
                        tiny * s as f64,
                    ),
                    0.0,
                ),
                with_gamma(sym(0.3 * v, 0.1, b(0.5)), 0.2),
            ]
        }
        VarianceFamily::IGarch => {
            let tiny = 1e-8;
            vec![
                sym(0.05 * v, 0.15, 0.85),
                sym(tiny * v, tiny * r as f64, 1.0 - tiny * r as f64),
                sym(0.1 * v, 0.3, 0.7),
            ]
        }
        VarianceFamily::EGarch => {
            let lv = v.ln();
            let e = |omega_w: f64, a: f64, g: f64, b: f64| VarianceParams {
                omega: omega_w,
                alpha: spread(a, r),
                gamma: spread(g, r),
                beta: spread(b, s),
            };
            let b = |x: f64| if s > 0 { x } else { 0.0 };
            vec![
                e((1.0 - b(0.8)) * lv, 0.0, 0.1, b(0.8)),
                e(lv, 0.0, 0.0, 0.0),
                e((1.0 - b(0.5)) * lv, -0.1, 0.3, b(0.5)),
            ]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub mean_spec: MeanSpec,
    pub var_spec: VarianceSpec,
    pub mean_params: MeanParams,
    pub var_params: VarianceParams,
    pub loglik: f64,
    pub aic_raw: f64,
    pub aic_per_obs: f64,
    pub n_params: usize,
    pub sigma2_path: Vec<f64>,
    pub residuals: Vec<f64>,
    pub std_residuals: Vec<f64>,
    /// Presample variance: the residual variance of the homoskedastic fit.
    pub init_sigma2: f64,
    pub persistence: f64,
    pub near_boundary: bool,
    pub training: DifferencedSeries,
    pub converged: bool,
    pub evals: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TracePoint>,
}

impl GarchFit {
    pub fn aic(&self) -> AicPair {
        AicPair {
            raw: self.aic_raw,
            per_obs: self.aic_per_obs,
        }
    }

    pub fn n_obs(&self) -> usize {
        self.residuals.len()
    }
}

pub fn fit_garch(
    mean_spec: &MeanSpec,
    var_spec: &VarianceSpec,
    y: &DifferencedSeries,
    exog: &[Vec<f64>],
    opt: &OptSettings,
) -> Result<GarchFit> {
    fit_garch_from(mean_spec, var_spec, y, exog, opt, None)
}

/// Like [`fit_garch`], reusing a homoskedastic fit of the same mean model
/// on the same data as the preliminary fit.
pub fn fit_garch_from(
    mean_spec: &MeanSpec,
    var_spec: &VarianceSpec,
    y: &DifferencedSeries,
    exog: &[Vec<f64>],
    opt: &OptSettings,
    base: Option<&MeanFit>,
) -> Result<GarchFit> {
    mean_spec.validate()?;
    var_spec.validate()?;
    let values = y.values();
    let n = values.len();
    if n < 30 {
        log::warn!("fitting {} on only {n} observations", var_spec.family);
    }

    let owned;
    let base = match base {
        Some(b) => {
            if b.spec != *mean_spec || b.n_obs() != n {
                return Err(Error::InvalidArgument(
                    "preliminary fit does not match the mean model or data".into(),
                ));
            }
            b
        }
        None => {
            owned = match fit_mean(mean_spec, y, exog, opt) {
                Ok(f) => f,
                Err(Error::NotConverged { best, .. }) => match *best {
                    BestSoFar::Mean(f) => f,
                    BestSoFar::Garch(_) => unreachable!("mean fit returned a GARCH estimate"),
                },
                Err(e) => return Err(e),
            };
            &owned
        }
    };
    let init_sigma2 = base.sigma2;

    let scaling = Scaling::from_data(mean_spec, values, exog)?;
    let ys = scaling.scale_y(values);
    let xs = scaling.scale_exog(exog);
    let init_s = init_sigma2 / (scaling.y_scale * scaling.y_scale);
    let mean_coords = MeanCoords { spec: *mean_spec };
    let var_coords = VarCoords { spec: *var_spec };
    let m = mean_coords.len();

    let objective = |x: &[f64]| -> f64 {
        let mp = mean_coords.unpack(&x[..m]);
        let vp = var_coords.unpack(&x[m..]);
        match garch_loglik(mean_spec, var_spec, &mp, &vp, &ys, &xs, init_s) {
            Ok(ll) => -ll,
            Err(_) => PENALTY,
        }
    };

    let mean_start = mean_coords.pack(&scaling.to_scaled(&base.params));
    let starts: Vec<Vec<f64>> = variance_starts(var_spec, init_s)
        .iter()
        .filter_map(|vp| var_coords.pack(vp))
        .map(|v| mean_start.iter().copied().chain(v).collect())
        .collect();
    if starts.is_empty() {
        return Err(Error::FitFailed("no admissible start point".into()));
    }

    let result = minimize(&objective, &starts, opt);
    if result.f_best >= PENALTY {
        return Err(Error::FitFailed(format!(
            "{} likelihood was never finite",
            var_spec.family
        )));
    }

    let mean_params = scaling.to_original(&mean_coords.unpack(&result.x_best[..m]));
    let var_params = rescale_variance(
        var_spec.family,
        &var_coords.unpack(&result.x_best[m..]),
        scaling.y_scale,
        false,
    );
    let residuals = arma_residuals(mean_spec, &mean_params, values, exog)?;
    let sigma2_path = variance_recursion(var_spec, &var_params, &residuals, init_sigma2)
        .map_err(|e| Error::FitFailed(format!("fitted variance path invalid: {e}")))?;
    let loglik = gaussian_terms(&residuals, &sigma2_path);
    let std_residuals = residuals
        .iter()
        .zip(&sigma2_path)
        .map(|(e, v)| e / v.sqrt())
        .collect();
    let n_params = mean_spec.coefficient_count() + var_spec.parameter_count();
    let aic = aic_pair(loglik, n_params, n);
    let persistence = var_params.persistence(var_spec.family);
    let near_boundary = matches!(
        var_spec.family,
        VarianceFamily::SGarch | VarianceFamily::GjrGarch | VarianceFamily::EGarch
    ) && persistence > NEAR_BOUNDARY;
    if near_boundary {
        log::warn!(
            "{} persistence {persistence:.6} is at the stationarity boundary",
            var_spec.family
        );
    }

    let fit = GarchFit {
        mean_spec: *mean_spec,
        var_spec: *var_spec,
        mean_params,
        var_params,
        loglik,
        aic_raw: aic.raw,
        aic_per_obs: aic.per_obs,
        n_params,
        sigma2_path,
        residuals,
        std_residuals,
        init_sigma2,
        persistence,
        near_boundary,
        training: y.clone(),
        converged: result.converged,
        evals: result.evals,
        trace: result.trace,
    };
    if !fit.converged {
        return Err(Error::NotConverged {
            evals: fit.evals,
            best_neg_loglik: -fit.loglik,
            best: Box::new(BestSoFar::Garch(fit)),
        });
    }
    Ok(fit)
}

/// Variance forecasts for the `h` periods after the end of `residuals`.
/// Future squared shocks are replaced by their conditional expectation.
pub fn variance_forecast(
    spec: &VarianceSpec,
    params: &VarianceParams,
    residuals: &[f64],
    sigma2_path: &[f64],
    h: usize,
) -> Result<Vec<f64>> {
    check_shapes(spec, params)?;
    let n = residuals.len();
    if n == 0 || sigma2_path.len() != n {
        return Err(Error::InvalidArgument(
            "residuals and variance path must be non-empty and of equal length".into(),
        ));
    }
    if h == 0 {
        return Err(Error::InvalidArgument(
            "forecast horizon must be at least 1".into(),
        ));
    }
    let mut s2 = sigma2_path.to_vec();
    for step in 0..h {
        let t = n + step;
        let v = match spec.family {
            VarianceFamily::EGarch => {
                let mut lv = params.omega;
                for i in 0..spec.r {
                    let k = t - 1 - i;
                    if k < n {
                        let z = residuals[k] / s2[k].sqrt();
                        lv += params.alpha[i] * z + params.gamma[i] * (z.abs() - ABS_NORMAL_MEAN);
                    }
                }
                for j in 0..spec.s {
                    lv += params.beta[j] * s2[t - 1 - j].ln();
                }
                lv.exp()
            }
            _ => {
                let gjr = spec.family == VarianceFamily::GjrGarch;
                let mut v = params.omega;
                for i in 0..spec.r {
                    let k = t - 1 - i;
                    if k < n {
                        let e = residuals[k];
                        v += params.alpha[i] * e * e;
                        if gjr && e < 0.0 {
                            v += params.gamma[i] * e * e;
                        }
                    } else {
                        v += params.alpha[i] * s2[k];
                        if gjr {
                            v += params.gamma[i] * 0.5 * s2[k];
                        }
                    }
                }
                for j in 0..spec.s {
                    v += params.beta[j] * s2[t - 1 - j];
                }
                v
            }
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::NumericalOverflow { index: t });
        }
        s2.push(v);
    }
    Ok(s2.split_off(n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchForecast {
    pub mean: Forecast,
    pub variance: Vec<f64>,
}

/// Point forecasts follow the mean equation alone; the variance equation
/// only contributes the variance forecasts.
pub fn forecast_garch(fit: &GarchFit, h: usize, future_exog: &[Vec<f64>]) -> Result<GarchForecast> {
    let diffs = forecast_arma(
        &fit.mean_spec,
        &fit.mean_params,
        fit.training.values(),
        &fit.residuals,
        h,
        future_exog,
    )?;
    let levels = fit.training.integrate_forward(&diffs)?;
    let variance = variance_forecast(
        &fit.var_spec,
        &fit.var_params,
        &fit.residuals,
        &fit.sigma2_path,
        h,
    )?;
    Ok(GarchForecast {
        mean: Forecast {
            start_year: fit.training.end_year() + 1,
            diffs,
            levels,
        },
        variance,
    })
}
