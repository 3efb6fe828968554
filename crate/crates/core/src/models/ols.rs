use serde::{Deserialize, Serialize};

use super::qr::least_squares;
use super::Dataset;
use crate::error::{Error, Result};
use crate::mechanism::LinearMechanism;

/// Result of an ordinary least-squares fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OlsFit {
    pub mechanism: LinearMechanism,
    pub rank: usize,
    /// Set when the design matrix is rank deficient; the coefficients are
    /// then the minimum-norm solution.
    pub warning: Option<String>,
    /// `1 − SSR / Σ(y − ȳ)²`.
    pub r_squared: f64,
    /// `1 − SSR / Σ y²`.
    pub r_squared_uncentered: f64,
    pub residuals: Vec<f64>,
}

impl OlsFit {
    pub fn rank_deficient(&self) -> bool {
        self.warning.is_some()
    }
}

/// Least-squares linear fit via column-pivoted Householder QR.
///
/// With `with_intercept`, a constant column is appended and its
/// coefficient becomes the mechanism's intercept.
pub fn fit_ols(data: &Dataset, with_intercept: bool) -> Result<OlsFit> {
    let n = data.len();
    let d = data.dim();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if data.x.iter().flatten().chain(&data.y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("data contains NaN or infinite values".into()));
    }

    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| data.x.iter().map(|r| r[j]).collect()).collect();
    if with_intercept {
        cols.push(vec![1.0; n]);
    }
    let p = cols.len();
    let ls = least_squares(cols, &data.y);

    let mut coefficients = ls.solution;
    let intercept = with_intercept.then(|| coefficients.pop().expect("intercept column"));
    let mut mechanism = LinearMechanism::new(coefficients).with_label("ols");
    mechanism.intercept = intercept;

    let residuals: Vec<f64> = data
        .x
        .iter()
        .zip(&data.y)
        .map(|(row, y)| {
            let mut fitted = 0.0;
            for (b, v) in mechanism.coefficients.iter().zip(row) {
                fitted += b * v;
            }
            y - (fitted + intercept.unwrap_or(0.0))
        })
        .collect();
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let mean = data.y.iter().sum::<f64>() / n as f64;
    let sst: f64 = data.y.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss0: f64 = data.y.iter().map(|y| y * y).sum();

    let warning = (ls.rank < p).then(|| {
        format!(
            "design matrix has rank {} < {p} columns; returning the minimum-norm solution",
            ls.rank
        )
    });
    Ok(OlsFit {
        mechanism,
        rank: ls.rank,
        warning,
        r_squared: if sst > 0.0 { 1.0 - ssr / sst } else { f64::NAN },
        r_squared_uncentered: if ss0 > 0.0 { 1.0 - ssr / ss0 } else { f64::NAN },
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_single_slope() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.7 - 2.0]).collect();
        let y = x.iter().map(|r| 2.0 * r[0]).collect();
        let fit = fit_ols(&Dataset::new(x, y).unwrap(), false).unwrap();
        assert!((fit.mechanism.coefficients[0] - 2.0).abs() < 1e-9);
        assert!(fit.warning.is_none());
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_two_coefficients_on_noiseless_data() {
        let x: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.37).sin() * 3.0, (t * 0.11).cos() + 0.01 * t]
            })
            .collect();
        let y = x.iter().map(|r| 3.0 * r[0] - r[1]).collect();
        let fit = fit_ols(&Dataset::new(x, y).unwrap(), false).unwrap();
        assert!((fit.mechanism.coefficients[0] - 3.0).abs() < 1e-9);
        assert!((fit.mechanism.coefficients[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn intercept_is_recovered_and_residuals_centered() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, r)| 1.5 + 0.5 * r[0] - 2.0 * r[1] + if i % 2 == 0 { 0.1 } else { -0.1 })
            .collect();
        let fit = fit_ols(&Dataset::new(x.clone(), y).unwrap(), true).unwrap();
        let resid_sum: f64 = fit.residuals.iter().sum();
        assert!(resid_sum.abs() < 1e-10);
        for j in 0..2 {
            let dot: f64 = x.iter().zip(&fit.residuals).map(|(r, e)| r[j] * e).sum();
            assert!(dot.abs() < 1e-9, "residuals not orthogonal to column {j}");
        }
        assert!(fit.mechanism.intercept.is_some());
    }

    #[test]
    fn collinear_columns_warn() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y = x.iter().map(|r| r[0]).collect();
        let fit = fit_ols(&Dataset::new(x, y).unwrap(), false).unwrap();
        assert_eq!(fit.rank, 1);
        assert!(fit.rank_deficient());
        // Minimum-norm split of 1·x between x and 2x: (0.2, 0.4).
        assert!((fit.mechanism.coefficients[0] - 0.2).abs() < 1e-12);
        assert!((fit.mechanism.coefficients[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn non_finite_data_rejected() {
        let data = Dataset::new(vec![vec![1.0], vec![f64::NAN]], vec![1.0, 2.0]).unwrap();
        assert!(matches!(fit_ols(&data, false), Err(Error::Fit(_))));
    }
}
