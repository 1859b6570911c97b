use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PCA_FORMAT_VERSION: u32 = 1;

/// How many components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaTarget {
    Components(usize),
    /// Smallest count whose cumulative explained-variance ratio reaches the fraction.
    VarianceFraction(f64),
    /// `max_components` when the data can support it, otherwise the variance
    /// criterion, never fewer than `min_components` (if available).
    Budget {
        max_components: usize,
        variance_fraction: f64,
        min_components: usize,
    },
}

impl Default for PcaTarget {
    fn default() -> Self {
        PcaTarget::Budget {
            max_components: 200,
            variance_fraction: 0.85,
            min_components: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub format_version: u32,
    pub mean: Vec<f64>,
    /// One orthonormal row per component, most variance first.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

/// Fits PCA on `rows` (n × D) by eigendecomposing the sample covariance.
///
/// When n − 1 < D the n × n Gram matrix is decomposed instead and its
/// eigenvectors mapped back to feature space; both yield the covariance's
/// leading eigenpairs.
pub fn pca_fit(rows: &[Vec<f64>], target: PcaTarget) -> Result<PcaModel> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::domain(format!("PCA needs at least 2 rows, got {n}")));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::domain("PCA rows must share a nonzero dimension"));
    }
    let available = (n - 1).min(d);

    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let denom = (n - 1) as f64;

    let (values, vectors): (Vec<f64>, Vec<Vec<f64>>) = if d <= n - 1 {
        let cov = (x.transpose() * &x) / denom;
        let eig = SymmetricEigen::new(cov);
        let mut pairs: Vec<(f64, Vec<f64>)> = (0..d)
            .map(|i| {
                (
                    eig.eigenvalues[i].max(0.0),
                    eig.eigenvectors.column(i).iter().copied().collect(),
                )
            })
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        pairs.into_iter().unzip()
    } else {
        let gram = (&x * x.transpose()) / denom;
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
        order
            .into_iter()
            .take(available)
            .map(|i| {
                let lambda = eig.eigenvalues[i].max(0.0);
                let u = eig.eigenvectors.column(i);
                let mut v: Vec<f64> = (0..d).map(|j| x.column(j).dot(&u)).collect();
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                if norm > 0.0 {
                    v.iter_mut().for_each(|a| *a /= norm);
                }
                (lambda, v)
            })
            .unzip()
    };

    let total_var: f64 = (0..d).map(|j| x.column(j).norm_squared()).sum::<f64>() / denom;
    let ratios: Vec<f64> = values
        .iter()
        .map(|v| if total_var > 0.0 { v / total_var } else { 0.0 })
        .collect();

    let by_fraction = |f: f64| -> Result<usize> {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::parameter(format!("variance fraction {f} outside (0, 1]")));
        }
        if total_var <= 0.0 {
            return Err(Error::domain("data has zero variance"));
        }
        let mut acc = 0.0;
        for (i, r) in ratios.iter().take(available).enumerate() {
            acc += r;
            if acc >= f - 1e-12 {
                return Ok(i + 1);
            }
        }
        Ok(available)
    };
    let k = match target {
        PcaTarget::Components(k) => {
            if k == 0 || k > available {
                return Err(Error::parameter(format!(
                    "requested {k} components; at most {available} available"
                )));
            }
            k
        }
        PcaTarget::VarianceFraction(f) => by_fraction(f)?,
        PcaTarget::Budget {
            max_components,
            variance_fraction,
            min_components,
        } => {
            if available >= max_components {
                max_components
            } else {
                let k = if total_var > 0.0 {
                    by_fraction(variance_fraction)?
                } else {
                    1
                };
                k.max(min_components.min(available))
            }
        }
    };

    let mut components: Vec<Vec<f64>> = vectors.into_iter().take(k).collect();
    for c in &mut components {
        let pivot = c.iter().enumerate().fold(
            (0, 0.0f64),
            |acc, (i, v)| if v.abs() > acc.1.abs() { (i, *v) } else { acc },
        );
        if pivot.1 < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(PcaModel {
        format_version: PCA_FORMAT_VERSION,
        mean,
        components,
        explained_variance: values.into_iter().take(k).collect(),
        explained_variance_ratio: ratios.into_iter().take(k).collect(),
    })
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// `components · (v − mean)`.
    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::domain(format!(
                "vector length {} does not match model dimension {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(v).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
            .collect())
    }

    pub fn transform_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if rows.iter().any(|r| r.len() != self.dim()) {
            return Err(Error::domain("batch rows must match model dimension"));
        }
        let centered = DMatrix::from_fn(rows.len(), self.dim(), |i, j| rows[i][j] - self.mean[j]);
        let comps = DMatrix::from_fn(self.n_components(), self.dim(), |i, j| self.components[i][j]);
        let scores = centered * comps.transpose();
        Ok((0..rows.len())
            .map(|i| scores.row(i).iter().copied().collect())
            .collect())
    }

    /// Maps scores back to feature space (exact when all components are kept).
    pub fn inverse_transform(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (s, c) in scores.iter().zip(&self.components) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += s * v;
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PcaModel> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let m: PcaModel = serde_json::from_reader(f)?;
        if m.format_version != PCA_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported PCA format version {}",
                m.format_version
            )));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rank_one_line() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let m = pca_fit(&rows, PcaTarget::Components(1)).unwrap();
        let s5 = 5f64.sqrt();
        assert_abs_diff_eq!(m.components[0][0], 1.0 / s5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.components[0][1], 2.0 / s5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.explained_variance_ratio[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn full_reconstruction_both_branches() {
        // n - 1 >= D (covariance) and n - 1 < D (Gram)
        for (n, d) in [(12usize, 4usize), (5, 9)] {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..d)
                        .map(|j| ((i * 7 + j * 3) % 11) as f64 + (i * j) as f64 * 0.1)
                        .collect()
                })
                .collect();
            let m = pca_fit(&rows, PcaTarget::Components((n - 1).min(d))).unwrap();
            for r in &rows {
                let back = m.inverse_transform(&m.transform(r).unwrap());
                for (a, b) in back.iter().zip(r) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn transform_of_mean_is_zero_and_errors() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![2.0, 0.0, 1.0], vec![0.0, 1.0, 5.0]];
        let m = pca_fit(&rows, PcaTarget::Components(2)).unwrap();
        assert!(m.transform(&m.mean.clone()).unwrap().iter().all(|s| s.abs() < 1e-12));
        assert!(m.transform(&[1.0]).is_err());
        assert!(pca_fit(&rows[..1], PcaTarget::Components(1)).is_err());
        assert!(pca_fit(&rows, PcaTarget::Components(3)).is_err());
        let batch = m.transform_batch(&rows).unwrap();
        for (r, b) in rows.iter().zip(&batch) {
            for (x, y) in m.transform(r).unwrap().iter().zip(b) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sign_convention() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![-(i as f64), 0.1 * i as f64]).collect();
        let m = pca_fit(&rows, PcaTarget::Components(1)).unwrap();
        assert!(m.components[0][0] > 0.0);
    }

    #[test]
    fn budget_falls_back_to_variance() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64;
                vec![
                    t,
                    0.5 * t + (t * 0.7).sin() * 0.01,
                    (t * 1.3).cos() * 0.01,
                    (t * 2.1).sin() * 0.001,
                ]
            })
            .collect();
        let m = pca_fit(&rows, PcaTarget::default()).unwrap();
        // one dominant direction, but at least two components are kept
        assert_eq!(m.n_components(), 2);
        let m = pca_fit(&rows, PcaTarget::VarianceFraction(0.85)).unwrap();
        assert_eq!(m.n_components(), 1);
    }

    #[test]
    fn save_load() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 0.5], vec![0.0, 1.0]];
        let m = pca_fit(&rows, PcaTarget::Components(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pca.json");
        m.save(&p).unwrap();
        assert_eq!(PcaModel::load(&p).unwrap(), m);
    }
}
