//! OLS and ridge baselines.
//!
//! Missing cells are imputed with the column's training mean; the means are
//! stored in the model and reused at prediction time.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::DesignMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum LinearKind {
    Ols,
    Ridge { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: LinearKind,
    pub feature_names: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Training means used in place of missing cells.
    pub impute_means: Vec<f64>,
}

impl LinearModel {
    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        let cols = align(x, &self.feature_names)?;
        let mut out = vec![self.intercept; x.n_rows];
        for ((col, beta), fill) in cols.iter().zip(&self.coefficients).zip(&self.impute_means) {
            for (o, v) in out.iter_mut().zip(col.iter()) {
                *o += beta * v.unwrap_or(*fill);
            }
        }
        Ok(out)
    }
}

/// Columns of `x` in the order of `names`.
pub(crate) fn align<'a>(x: &'a DesignMatrix, names: &[String]) -> Result<Vec<&'a Vec<Option<f64>>>> {
    names
        .iter()
        .map(|n| {
            x.names
                .iter()
                .position(|m| m == n)
                .map(|i| &x.columns[i])
                .ok_or_else(|| Error::Schema(format!("missing column {n}")))
        })
        .collect()
}

struct Prepared {
    means: Vec<f64>,
    centers: Vec<f64>,
    y_mean: f64,
    /// Centered, imputed design (n × p).
    xc: DMatrix<f64>,
    yc: DVector<f64>,
}

fn prepare(x: &DesignMatrix, y: &[f64]) -> Result<Prepared> {
    let n = x.n_rows;
    if n == 0 {
        return Err(Error::domain("cannot fit on zero rows"));
    }
    if y.len() != n {
        return Err(Error::domain(format!("{} targets for {n} rows", y.len())));
    }
    let p = x.n_features();
    let impute: Vec<f64> = x
        .columns
        .iter()
        .map(|c| {
            let seen: Vec<f64> = c.iter().flatten().copied().collect();
            if seen.is_empty() {
                0.0
            } else {
                seen.iter().sum::<f64>() / seen.len() as f64
            }
        })
        .collect();
    let full = DMatrix::from_fn(n, p, |i, j| x.columns[j][i].unwrap_or(impute[j]));
    let means: Vec<f64> = (0..p).map(|j| full.column(j).sum() / n as f64).collect();
    let xc = DMatrix::from_fn(n, p, |i, j| full[(i, j)] - means[j]);
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    Ok(Prepared {
        means: impute,
        centers: means,
        y_mean,
        xc,
        yc,
    })
}

fn min_norm_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = a.shape();
    if p == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (n.max(p) as f64) * f64::EPSILON * smax;
    svd.solve(b, eps)
        .map_err(|e| Error::domain(format!("least squares failed: {e}")))
}

/// Least squares with a free intercept; rank-deficient designs get the
/// minimum-norm coefficient vector.
pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<LinearModel> {
    let prep = prepare(x, y)?;
    let column_means = prep.centers.clone();
    let beta = min_norm_solve(prep.xc, &prep.yc)?;
    let intercept = prep.y_mean - beta.iter().zip(&column_means).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearModel {
        kind: LinearKind::Ols,
        feature_names: x.names.clone(),
        intercept,
        coefficients: beta.iter().copied().collect(),
        impute_means: prep.means,
    })
}

/// Ridge on internally standardized features with an unpenalized intercept:
/// minimizes `‖y − b0 − Zβ‖² + λ‖β‖²` over standardized columns `Z`, then maps
/// the coefficients back to the original scale. Constant columns get 0.
pub fn ridge_fit(x: &DesignMatrix, y: &[f64], lambda: f64) -> Result<LinearModel> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::parameter(format!(
            "ridge penalty must be non-negative, got {lambda}"
        )));
    }
    let prep = prepare(x, y)?;
    let n = x.n_rows;
    let p = x.n_features();
    let column_means = prep.centers.clone();
    let scales: Vec<f64> = (0..p)
        .map(|j| (prep.xc.column(j).norm_squared() / n as f64).sqrt())
        .collect();
    let active: Vec<usize> = (0..p).filter(|&j| scales[j] > 0.0).collect();
    let z = DMatrix::from_fn(n, active.len(), |i, k| prep.xc[(i, active[k])] / scales[active[k]]);

    let mut gram = z.transpose() * &z;
    for k in 0..active.len() {
        gram[(k, k)] += lambda;
    }
    let rhs = z.transpose() * &prep.yc;
    let b = match gram.clone().cholesky() {
        Some(ch) if lambda > 0.0 => ch.solve(&rhs),
        _ => min_norm_solve(z, &prep.yc)?,
    };

    let mut coefficients = vec![0.0; p];
    for (k, &j) in active.iter().enumerate() {
        coefficients[j] = b[k] / scales[j];
    }
    let intercept = prep.y_mean - coefficients.iter().zip(&column_means).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearModel {
        kind: LinearKind::Ridge { lambda },
        feature_names: x.names.clone(),
        intercept,
        coefficients,
        impute_means: prep.means,
    })
}

pub fn rss(model: &LinearModel, x: &DesignMatrix, y: &[f64]) -> Result<f64> {
    let pred = model.predict(x)?;
    Ok(pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn design(cols: &[&str], rows: &[Vec<f64>]) -> DesignMatrix {
        DesignMatrix::from_rows(cols.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    #[test]
    fn exact_line() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..6).map(|i| 3.0 + 2.0 * i as f64).collect();
        let m = ols_fit(&design(&["x"], &rows), &y).unwrap();
        assert_abs_diff_eq!(m.intercept, 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.coefficients[0], 2.0, epsilon = 1e-10);
        assert!(rss(&m, &design(&["x"], &rows), &y).unwrap() < 1e-18);
    }

    #[test]
    fn duplicated_column_splits_weight() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, i as f64]).collect();
        let y: Vec<f64> = (0..8).map(|i| 1.0 + 4.0 * i as f64).collect();
        let m = ols_fit(&design(&["a", "b"], &rows), &y).unwrap();
        // pseudo-inverse oracle: minimum-norm (β1, β2) with β1 + β2 = 4 is (2, 2)
        assert_abs_diff_eq!(m.coefficients[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.coefficients[1], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.intercept, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_rows_and_negative_lambda() {
        let empty = design(&["x"], &[]);
        assert!(matches!(ols_fit(&empty, &[]), Err(Error::Domain(_))));
        let d = design(&["x"], &[vec![1.0], vec![2.0]]);
        assert!(matches!(ridge_fit(&d, &[1.0, 2.0], -1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn ridge_limits() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, ((i * 7) % 5) as f64, (i as f64).sqrt()])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 1.0 + r[0] - 2.0 * r[1] + 0.5 * r[2] + ((r[0] * 3.1).sin()))
            .collect();
        let d = design(&["a", "b", "c"], &rows);
        let ols = ols_fit(&d, &y).unwrap();
        let r0 = ridge_fit(&d, &y, 0.0).unwrap();
        for (a, b) in ols.coefficients.iter().zip(&r0.coefficients) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        let big = ridge_fit(&d, &y, 1e12).unwrap();
        assert!(big.coefficients.iter().all(|c| c.abs() < 1e-8));
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        for p in big.predict(&d).unwrap() {
            assert_abs_diff_eq!(p, mean, epsilon = 1e-6);
        }
    }

    #[test]
    fn missing_cells_use_training_mean() {
        let d = DesignMatrix::new(vec!["x".into()], vec![vec![Some(1.0), None, Some(3.0), Some(5.0)]]).unwrap();
        let m = ols_fit(&d, &[1.0, 2.0, 3.0, 5.0]).unwrap();
        assert_eq!(m.impute_means, vec![3.0]);
        let probe = DesignMatrix::new(vec!["x".into()], vec![vec![None]]).unwrap();
        let p = m.predict(&probe).unwrap()[0];
        assert_abs_diff_eq!(p, m.intercept + 3.0 * m.coefficients[0], epsilon = 1e-12);
        let wrong = DesignMatrix::new(vec!["z".into()], vec![vec![None]]).unwrap();
        assert!(matches!(m.predict(&wrong), Err(Error::Schema(_))));
    }
}
