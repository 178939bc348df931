//! Year-indexed series types, differencing and year alignment.
//!
//! Every series carries its calendar start year. Pairing two series always
//! goes through [`align`], which matches observations by year rather than by
//! position.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar series with one value per consecutive calendar year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualSeries {
    start_year: i32,
    values: Vec<f64>,
    unit: String,
}

impl AnnualSeries {
    pub fn new(start_year: i32, values: Vec<f64>, unit: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("annual series must be non-empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value for year {}",
                start_year + i as i32
            )));
        }
        Ok(Self {
            start_year,
            values,
            unit: unit.into(),
        })
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.values.len() as i32 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.values.len()).map(move |i| self.start_year + i as i32)
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        let offset = year.checked_sub(self.start_year)?;
        usize::try_from(offset)
            .ok()
            .and_then(|i| self.values.get(i).copied())
    }

    /// Sub-series covering `from..=to`, both inclusive.
    pub fn slice_years(&self, from: i32, to: i32) -> Result<Self> {
        if from > to || from < self.start_year || to > self.end_year() {
            return Err(Error::InvalidArgument(format!(
                "year range {from}..={to} outside {}..={}",
                self.start_year,
                self.end_year()
            )));
        }
        let a = (from - self.start_year) as usize;
        let b = (to - self.start_year) as usize;
        Self::new(from, self.values[a..=b].to_vec(), self.unit.clone())
    }
}

/// Monthly rainfall depths (mm), one row of twelve months per year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyRainfallSeries {
    start_year: i32,
    rows: Vec<[f64; 12]>,
}

impl MonthlyRainfallSeries {
    pub fn new(start_year: i32, rows: Vec<[f64; 12]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Validation("rainfall panel must be non-empty".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            for (m, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation(format!(
                        "{} month {}: rainfall must be finite and non-negative, got {v}",
                        start_year + i as i32,
                        m + 1
                    )));
                }
            }
        }
        Ok(Self { start_year, rows })
    }

    /// Builds a panel from rows of arbitrary length, rejecting rows that do
    /// not hold exactly twelve months.
    pub fn from_vecs(start_year: i32, rows: Vec<Vec<f64>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                <[f64; 12]>::try_from(r.as_slice()).map_err(|_| {
                    Error::Validation(format!(
                        "year {} has {} months, expected 12",
                        start_year + i as i32,
                        r.len()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(start_year, rows)
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.rows.len() as i32 - 1
    }

    pub fn year_count(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[[f64; 12]] {
        &self.rows
    }

    pub fn row(&self, year_index: usize) -> Result<&[f64; 12]> {
        self.rows.get(year_index).ok_or(Error::Index {
            index: year_index,
            len: self.rows.len(),
        })
    }

    /// Returns a copy with every month of the listed years replaced by `value`.
    pub fn with_years_replaced(&self, years: &[i32], value: f64) -> Result<Self> {
        let mut rows = self.rows.clone();
        for &y in years {
            let i = y - self.start_year;
            if i < 0 || i as usize >= rows.len() {
                return Err(Error::InvalidArgument(format!("year {y} not in panel")));
            }
            rows[i as usize] = [value; 12];
        }
        Self::new(self.start_year, rows)
    }
}

/// A d-times differenced annual series that remembers the levels needed to
/// undo the differencing at either end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferencedSeries {
    /// Year of `values[0]`.
    start_year: i32,
    order: usize,
    values: Vec<f64>,
    /// First `order` levels of the base series.
    head_levels: Vec<f64>,
    /// Last `order` levels of the base series.
    tail_levels: Vec<f64>,
    unit: String,
}

impl DifferencedSeries {
    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.values.len() as i32 - 1
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn head_levels(&self) -> &[f64] {
        &self.head_levels
    }

    pub fn tail_levels(&self) -> &[f64] {
        &self.tail_levels
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    /// Rebuilds the undifferenced base series.
    pub fn reconstruct(&self) -> Result<AnnualSeries> {
        let mut levels = self.head_levels.clone();
        levels.extend(integrate(&self.values, &self.head_levels, self.order)?);
        AnnualSeries::new(
            self.start_year - self.order as i32,
            levels,
            self.unit.clone(),
        )
    }

    /// The differenced values as a year-indexed series (for alignment).
    pub fn as_annual(&self) -> Result<AnnualSeries> {
        AnnualSeries::new(self.start_year, self.values.clone(), self.unit.clone())
    }

    /// Restricts to differenced values for years `from..=to`, recomputing the
    /// stored levels for the new window.
    pub fn window(&self, from: i32, to: i32) -> Result<Self> {
        if from < self.start_year || to > self.end_year() || from > to {
            return Err(Error::InvalidArgument(format!(
                "window {from}..={to} outside {}..={}",
                self.start_year,
                self.end_year()
            )));
        }
        let base = self.reconstruct()?;
        let levels = base.slice_years(from - self.order as i32, to)?;
        difference(&levels, self.order)
    }

    /// Maps forecasts on the differenced scale back to levels following the
    /// last stored level.
    pub fn integrate_forward(&self, diffs: &[f64]) -> Result<Vec<f64>> {
        integrate(diffs, &self.tail_levels, self.order)
    }
}

/// d-th order forward difference of `series`.
pub fn difference(series: &AnnualSeries, d: usize) -> Result<DifferencedSeries> {
    let n = series.len();
    if d >= n && d > 0 {
        return Err(Error::InvalidOrder { order: d, len: n });
    }
    let mut values = series.values().to_vec();
    for _ in 0..d {
        values = values.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(DifferencedSeries {
        start_year: series.start_year() + d as i32,
        order: d,
        values,
        head_levels: series.values()[..d].to_vec(),
        tail_levels: series.values()[n - d..].to_vec(),
        unit: series.unit().to_string(),
    })
}

/// Inverts d-th order differencing.
///
/// `last_levels` are the `d` observed levels immediately preceding the
/// period of `diffs[0]`, oldest first. Returns one level per entry of
/// `diffs`.
pub fn integrate(diffs: &[f64], last_levels: &[f64], d: usize) -> Result<Vec<f64>> {
    if last_levels.len() != d {
        return Err(Error::InvalidArgument(format!(
            "integration of order {d} needs {d} levels, got {}",
            last_levels.len()
        )));
    }
    if d == 0 {
        return Ok(diffs.to_vec());
    }
    // ladder[k] holds the k-th difference at the latest time point.
    let mut ladder = Vec::with_capacity(d);
    let mut work = last_levels.to_vec();
    for _ in 0..d {
        ladder.push(*work.last().expect("non-empty by construction"));
        work = work.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let mut out = Vec::with_capacity(diffs.len());
    for &x in diffs {
        let mut carry = x;
        for k in (0..d).rev() {
            carry += ladder[k];
            ladder[k] = carry;
        }
        out.push(ladder[0]);
    }
    Ok(out)
}

/// Year-matched response/regressor pairs `(y_t, x_{t-lag})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    /// Year of the first response value.
    pub start_year: i32,
    pub lag: usize,
    pub response: Vec<f64>,
    pub regressor: Vec<f64>,
}

impl AlignedPair {
    pub fn len(&self) -> usize {
        self.response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response.is_empty()
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.response.len() as i32 - 1
    }
}

/// Pairs each response year `t` with the regressor value of year `t - lag`,
/// dropping years without a partner.
pub fn align(
    production: &AnnualSeries,
    regressor: &AnnualSeries,
    lag: usize,
) -> Result<AlignedPair> {
    let lag_years = lag as i32;
    let first = production
        .start_year()
        .max(regressor.start_year() + lag_years);
    let last = production.end_year().min(regressor.end_year() + lag_years);
    if first > last {
        return Err(Error::Alignment(format!(
            "no overlap between response {}..={} and regressor {}..={} at lag {lag}",
            production.start_year(),
            production.end_year(),
            regressor.start_year(),
            regressor.end_year()
        )));
    }
    let (response, regressor): (Vec<f64>, Vec<f64>) = (first..=last)
        .map(|t| {
            (
                production.get(t).expect("year within overlap"),
                regressor.get(t - lag_years).expect("year within overlap"),
            )
        })
        .unzip();
    Ok(AlignedPair {
        start_year: first,
        lag,
        response,
        regressor,
    })
}
