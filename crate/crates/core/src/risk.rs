//! Annual rainfall-risk regressors built from a monthly rainfall panel.
//!
//! * `RV1` square root of the annual sum of squared monthly rainfall.
//! * `RV2` population standard deviation of the twelve monthly values.
//! * `RV3` realized volatility of monthly log-ratios.
//! * `RV4` dispersion of monthly log-ratios around their annual mean.
//!
//! Log-ratios compare each month with the previous one. January uses the
//! previous December when the panel has it, so the first panel year has
//! eleven log-ratios and every later year twelve. Months below `floor_mm`
//! are raised to the floor before taking logs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{AnnualSeries, MonthlyRainfallSeries};

pub const DEFAULT_FLOOR_MM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RiskVariant {
    RV1,
    RV2,
    RV3,
    RV4,
}

impl RiskVariant {
    pub const ALL: [RiskVariant; 4] = [Self::RV1, Self::RV2, Self::RV3, Self::RV4];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::RV1 => "RV1",
            Self::RV2 => "RV2",
            Self::RV3 => "RV3",
            Self::RV4 => "RV4",
        }
    }
}

impl fmt::Display for RiskVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RV1" | "1" => Ok(Self::RV1),
            "RV2" | "2" => Ok(Self::RV2),
            "RV3" | "3" => Ok(Self::RV3),
            "RV4" | "4" => Ok(Self::RV4),
            other => Err(Error::InvalidArgument(format!(
                "unknown risk measure {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskConfig {
    pub floor_mm: f64,
    /// Report the square root of RV4 (a standard deviation) instead of the
    /// variance-like quantity.
    pub rv4_sqrt: bool,
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self {
            floor_mm: DEFAULT_FLOOR_MM,
            rv4_sqrt: false,
        }
    }
}

/// Monthly log-ratios of one panel year.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDiffYear {
    pub year: i32,
    pub diffs: Vec<f64>,
}

pub fn log_diffs(
    rainfall: &MonthlyRainfallSeries,
    year_index: usize,
    floor_mm: f64,
) -> Result<LogDiffYear> {
    if !(floor_mm > 0.0 && floor_mm.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "floor_mm must be positive, got {floor_mm}"
        )));
    }
    let row = rainfall.row(year_index)?;
    let floored = |v: f64| v.max(floor_mm).ln();

    let mut prev = if year_index > 0 {
        Some(floored(rainfall.rows()[year_index - 1][11]))
    } else {
        None
    };
    let mut diffs = Vec::with_capacity(12);
    for &r in row {
        let cur = floored(r);
        if let Some(p) = prev {
            diffs.push(cur - p);
        }
        prev = Some(cur);
    }
    Ok(LogDiffYear {
        year: rainfall.start_year() + year_index as i32,
        diffs,
    })
}

pub fn rv1(rainfall: &MonthlyRainfallSeries, year_index: usize) -> Result<f64> {
    let row = rainfall.row(year_index)?;
    Ok(row.iter().map(|r| r * r).sum::<f64>().sqrt())
}

pub fn rv2(rainfall: &MonthlyRainfallSeries, year_index: usize) -> Result<f64> {
    let row = rainfall.row(year_index)?;
    Ok(population_variance(row).sqrt())
}

pub fn rv3(rainfall: &MonthlyRainfallSeries, year_index: usize, floor_mm: f64) -> Result<f64> {
    let ld = log_diffs(rainfall, year_index, floor_mm)?;
    Ok(ld.diffs.iter().map(|d| d * d).sum::<f64>().sqrt())
}

/// Mean squared deviation of the year's log-ratios from their mean. The
/// divisor is the number of log-ratios (twelve except in the first panel
/// year).
pub fn rv4(rainfall: &MonthlyRainfallSeries, year_index: usize, floor_mm: f64) -> Result<f64> {
    let ld = log_diffs(rainfall, year_index, floor_mm)?;
    Ok(population_variance(&ld.diffs))
}

// Shifted by the first value so a constant input gives exactly zero.
fn population_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let shift = x[0];
    let mean = x.iter().map(|v| v - shift).sum::<f64>() / n;
    x.iter().map(|v| (v - shift - mean).powi(2)).sum::<f64>() / n
}

pub fn measure(
    rainfall: &MonthlyRainfallSeries,
    year_index: usize,
    variant: RiskVariant,
    cfg: &RiskConfig,
) -> Result<f64> {
    match variant {
        RiskVariant::RV1 => rv1(rainfall, year_index),
        RiskVariant::RV2 => rv2(rainfall, year_index),
        RiskVariant::RV3 => rv3(rainfall, year_index, cfg.floor_mm),
        RiskVariant::RV4 => {
            let v = rv4(rainfall, year_index, cfg.floor_mm)?;
            Ok(if cfg.rv4_sqrt { v.sqrt() } else { v })
        }
    }
}

/// One risk value per panel year, indexed by the panel's years.
pub fn build_regressor(
    rainfall: &MonthlyRainfallSeries,
    variant: RiskVariant,
    cfg: &RiskConfig,
) -> Result<AnnualSeries> {
    let values = (0..rainfall.year_count())
        .map(|i| measure(rainfall, i, variant, cfg))
        .collect::<Result<Vec<_>>>()?;
    AnnualSeries::new(rainfall.start_year(), values, format!("{variant}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn panel(rows: Vec<[f64; 12]>) -> MonthlyRainfallSeries {
        MonthlyRainfallSeries::new(2000, rows).unwrap()
    }

    #[test]
    fn constant_rainfall_gives_zero_log_diffs() {
        let p = panel(vec![[100.0; 12]; 3]);
        let ld = log_diffs(&p, 1, 0.1).unwrap();
        assert_eq!(ld.year, 2001);
        assert_eq!(ld.diffs, vec![0.0; 12]);
        assert_eq!(log_diffs(&p, 0, 0.1).unwrap().diffs.len(), 11);
    }

    #[test]
    fn alternating_rainfall_log_diffs() {
        let mut row = [0.0; 12];
        for (m, v) in row.iter_mut().enumerate() {
            *v = if m % 2 == 0 { 100.0 } else { 200.0 };
        }
        let p = panel(vec![row; 2]);
        let ld = log_diffs(&p, 1, 0.1).unwrap();
        // January (100) follows December (200)
        for (m, d) in ld.diffs.iter().enumerate() {
            let expect = if m % 2 == 0 { -LN_2 } else { LN_2 };
            assert!((d - expect).abs() < 1e-15);
        }
        assert!((rv4(&p, 1, 0.1).unwrap() - LN_2 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn zero_month_is_floored() {
        let mut row = [50.0; 12];
        row[4] = 0.0;
        let p = panel(vec![row; 2]);
        let ld = log_diffs(&p, 1, 0.1).unwrap();
        assert!(ld.diffs.iter().all(|d| d.is_finite()));
        assert!((ld.diffs[4] - (0.1f64 / 50.0).ln()).abs() < 1e-14);
        assert!(log_diffs(&p, 1, 0.0).is_err());
        assert!(matches!(log_diffs(&p, 2, 0.1), Err(Error::Index { .. })));
    }

    #[test]
    fn rv1_examples() {
        let p = panel(vec![[100.0; 12], [0.0; 12]]);
        assert!((rv1(&p, 0).unwrap() - 100.0 * 12f64.sqrt()).abs() < 1e-12);
        assert_eq!(rv1(&p, 1).unwrap(), 0.0);
        let ramp: [f64; 12] = std::array::from_fn(|k| 10.0 * (k + 1) as f64);
        let p = panel(vec![ramp]);
        assert!((rv1(&p, 0).unwrap() - 10.0 * 650f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rv2_examples() {
        let p = panel(vec![[7.0; 12]]);
        assert_eq!(rv2(&p, 0).unwrap(), 0.0);
        let mut row = [0.0; 12];
        row[6..].fill(200.0);
        assert!((rv2(&panel(vec![row]), 0).unwrap() - 100.0).abs() < 1e-12);

        // Divisor 12 (not 11) for a skewed monsoon year.
        let row = [
            0.0, 0.0, 0.0, 0.0, 50.0, 150.0, 300.0, 250.0, 100.0, 20.0, 0.0, 0.0,
        ];
        let mean = row.iter().sum::<f64>() / 12.0;
        let ss: f64 = row.iter().map(|r| (r - mean).powi(2)).sum();
        let got = rv2(&panel(vec![row]), 0).unwrap();
        assert!((got - (ss / 12.0).sqrt()).abs() < 1e-12);
        assert!((got - (ss / 11.0).sqrt()).abs() > 1.0);
    }

    #[test]
    fn rv3_doubling_rainfall() {
        let row: [f64; 12] = std::array::from_fn(|k| 2f64.powi(k as i32));
        let mut prev = [0.0; 12];
        prev[11] = 0.5; // December before a doubling January
        let p = panel(vec![prev, row]);
        let v = rv3(&p, 1, 1e-3).unwrap();
        assert!((v - LN_2 * 12f64.sqrt()).abs() < 1e-12);
        assert_eq!(rv3(&panel(vec![[3.0; 12]; 2]), 1, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn rv4_sqrt_option() {
        let mut row = [0.0; 12];
        for (m, v) in row.iter_mut().enumerate() {
            *v = if m % 2 == 0 { 100.0 } else { 200.0 };
        }
        let p = panel(vec![row; 2]);
        let cfg = RiskConfig {
            rv4_sqrt: true,
            ..Default::default()
        };
        let v = measure(&p, 1, RiskVariant::RV4, &cfg).unwrap();
        assert!((v - LN_2).abs() < 1e-15);
    }

    #[test]
    fn build_regressor_examples() {
        let p = panel(vec![[5.0; 12]; 3]);
        let s = build_regressor(&p, RiskVariant::RV2, &RiskConfig::default()).unwrap();
        assert_eq!(s.values(), &[0.0, 0.0, 0.0]);
        assert_eq!(s.start_year(), 2000);

        let mut row = [0.0; 12];
        row[7] = 3.0;
        let p = panel(vec![row, [0.0; 12]]);
        let s = build_regressor(&p, RiskVariant::RV1, &RiskConfig::default()).unwrap();
        assert!(s.values()[0] > 0.0);
        assert_eq!(s.values()[1], 0.0);
    }

    #[test]
    fn log_measures_depend_on_month_order() {
        let row = [
            1.0, 5.0, 2.0, 40.0, 90.0, 300.0, 250.0, 120.0, 60.0, 10.0, 4.0, 2.0,
        ];
        let mut shuffled = row;
        shuffled.swap(0, 5);
        shuffled.swap(3, 9);
        let a = panel(vec![[10.0; 12], row]);
        let b = panel(vec![[10.0; 12], shuffled]);
        assert!((rv1(&a, 1).unwrap() - rv1(&b, 1).unwrap()).abs() < 1e-9);
        assert!((rv2(&a, 1).unwrap() - rv2(&b, 1).unwrap()).abs() < 1e-9);
        assert!((rv3(&a, 1, 0.1).unwrap() - rv3(&b, 1, 0.1).unwrap()).abs() > 1e-3);
        assert!((rv4(&a, 1, 0.1).unwrap() - rv4(&b, 1, 0.1).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn parse_variant() {
        assert_eq!("rv3".parse::<RiskVariant>().unwrap(), RiskVariant::RV3);
        assert!("rv5".parse::<RiskVariant>().is_err());
    }

    fn arb_panel() -> impl Strategy<Value = MonthlyRainfallSeries> {
        prop::collection::vec(prop::array::uniform12(0.0f64..600.0), 1..6)
            .prop_map(|rows| MonthlyRainfallSeries::new(1990, rows).unwrap())
    }

    proptest! {
        #[test]
        fn prop_all_measures_finite_and_non_negative(p in arb_panel()) {
            let cfg = RiskConfig::default();
            for v in RiskVariant::ALL {
                let s = build_regressor(&p, v, &cfg).unwrap();
                prop_assert!(s.values().iter().all(|x| x.is_finite() && *x >= 0.0));
            }
        }

        #[test]
        fn prop_permutation_invariance_of_rv1_rv2(
            row in prop::array::uniform12(0.0f64..600.0),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut perm = row;
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = panel(vec![row]);
            let b = panel(vec![perm]);
            prop_assert!((rv1(&a, 0).unwrap() - rv1(&b, 0).unwrap()).abs() <= 1e-9);
            prop_assert!((rv2(&a, 0).unwrap() - rv2(&b, 0).unwrap()).abs() <= 1e-9);
        }
    }
}
