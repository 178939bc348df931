#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rainrisk::series::{difference, AnnualSeries, DifferencedSeries, MonthlyRainfallSeries};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn rainfall_fixture() -> PathBuf {
    data_dir().join("sample_rainfall.csv")
}

pub fn production_fixture() -> PathBuf {
    data_dir().join("sample_production.csv")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Undifferenced wrapper so simulated data can go straight into the fitters.
pub fn as_series(values: Vec<f64>) -> DifferencedSeries {
    let s = AnnualSeries::new(1, values, "sim").expect("finite values");
    difference(&s, 0).expect("d = 0")
}

pub fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let burn = 200;
    let mut y = 0.0;
    let mut out = Vec::with_capacity(n);
    for t in 0..n + burn {
        let e: f64 = r.sample(StandardNormal);
        y = phi * y + e;
        if t >= burn {
            out.push(y);
        }
    }
    out
}

pub fn garch11(omega: f64, alpha: f64, beta: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let burn = 500;
    let mut s2 = omega / (1.0 - alpha - beta);
    let mut e = 0.0;
    let mut out = Vec::with_capacity(n);
    for t in 0..n + burn {
        s2 = omega + alpha * e * e + beta * s2;
        let z: f64 = r.sample(StandardNormal);
        e = s2.sqrt() * z;
        if t >= burn {
            out.push(e);
        }
    }
    out
}

pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

pub fn random_walk(n: usize, seed: u64) -> Vec<f64> {
    let mut acc = 0.0;
    white_noise(n, seed)
        .into_iter()
        .map(|e| {
            acc += e;
            acc
        })
        .collect()
}

/// Random monthly panel. Roughly one month in ten is dry when `dry` is set.
pub fn panel(years: usize, seed: u64, dry: bool) -> MonthlyRainfallSeries {
    let mut r = rng(seed);
    let rows = (0..years)
        .map(|_| {
            let mut row = [0.0; 12];
            for v in &mut row {
                *v = if dry && r.random::<f64>() < 0.1 {
                    0.0
                } else {
                    1.0 + r.random::<f64>() * 400.0
                };
            }
            row
        })
        .collect();
    MonthlyRainfallSeries::new(1950, rows).expect("valid panel")
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
