//! Ordinary least squares through a Householder QR factorization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Standard errors from the unbiased residual variance. `NaN` when the
    /// system is exactly determined.
    pub std_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    /// `rss / (rows - cols)`.
    pub sigma2: f64,
}

/// Relative pivot size below which the design is treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

pub fn least_squares(design: &DMatrix<f64>, response: &[f64]) -> Result<LeastSquares> {
    let (n, k) = design.shape();
    if response.len() != n {
        return Err(Error::InvalidArgument(format!(
            "design has {n} rows but response has {} entries",
            response.len()
        )));
    }
    if k == 0 || n < k {
        return Err(Error::InsufficientData {
            needed: k.max(1),
            got: n,
        });
    }
    let y = DVector::from_column_slice(response);
    let qr = design.clone().qr();
    let r = qr.r();
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if max_diag == 0.0 || (0..k).any(|i| r[(i, i)].abs() <= RANK_TOL * max_diag) {
        return Err(Error::Degenerate("design matrix is rank deficient".into()));
    }
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Degenerate("singular triangular factor".into()))?;
    let residuals = &y - design * &beta;
    let rss = residuals.norm_squared();
    let dof = n - k;
    let sigma2 = if dof > 0 { rss / dof as f64 } else { f64::NAN };

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Degenerate("singular triangular factor".into()))?;
    // diag((R'R)^-1) = row norms of R^-1
    let std_errors = (0..k)
        .map(|i| (sigma2 * r_inv.row(i).norm_squared()).sqrt())
        .collect();

    Ok(LeastSquares {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        residuals: residuals.iter().copied().collect(),
        rss,
        sigma2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Normal-equations solve by Gauss-Jordan elimination with partial
    /// pivoting; kept independent of the QR path.
    fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        let k = x[0].len();
        let mut a = vec![vec![0.0; k + 1]; k];
        for (row, &yi) in x.iter().zip(y) {
            for i in 0..k {
                for j in 0..k {
                    a[i][j] += row[i] * row[j];
                }
                a[i][k] += row[i] * yi;
            }
        }
        for c in 0..k {
            let p = (c..k)
                .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
                .unwrap();
            a.swap(c, p);
            for r in 0..k {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    let pivot = a[c].clone();
                    for (x, p) in a[r].iter_mut().zip(&pivot).skip(c) {
                        *x -= f * p;
                    }
                }
            }
        }
        (0..k).map(|i| a[i][k] / a[i][i]).collect()
    }

    #[test]
    fn exactly_determined() {
        let x = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let fit = least_squares(&x, &[5.0, 10.0]).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-12);
        assert!(fit.rss < 1e-24);
    }

    #[test]
    fn noiseless_slope() {
        let col: Vec<f64> = (1..=20).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = col.iter().map(|c| 3.0 * c).collect();
        let x = DMatrix::from_column_slice(20, 1, &col);
        let fit = least_squares(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-10);
        assert!(fit.std_errors[0].abs() < 1e-10);
    }

    #[test]
    fn matches_normal_equations_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(50);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = (0..50).map(|_| rng.random_range(-5.0..5.0)).collect();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let x = DMatrix::from_row_slice(50, 3, &flat);
        let fit = least_squares(&x, &y).unwrap();
        let oracle = normal_equations(&rows, &y);
        for (a, b) in fit.coefficients.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn rank_deficient_is_degenerate() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0, 4.0, 8.0]);
        assert!(matches!(
            least_squares(&x, &[1.0, 2.0, 3.0, 4.0]),
            Err(Error::Degenerate(_))
        ));
    }
}
