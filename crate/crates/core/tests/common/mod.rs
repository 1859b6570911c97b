//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use estate_vision::entropy::GrayImage;

/// Per-pixel window entropy, recomputing the histogram from scratch (clamp-to-edge borders).
pub fn brute_entropy(img: &GrayImage, window: usize) -> Vec<f64> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let r = (window / 2) as i64;
    let n = (window * window) as f64;
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let mut hist = vec![0u32; 256];
            for dy in -r..=r {
                for dx in -r..=r {
                    let px = (x + dx).clamp(0, w - 1) as usize;
                    let py = (y + dy).clamp(0, h - 1) as usize;
                    hist[img.get(px, py) as usize] += 1;
                }
            }
            let e: f64 = hist
                .iter()
                .filter(|c| **c > 0)
                .map(|c| {
                    let p = *c as f64 / n;
                    -p * p.log2()
                })
                .sum();
            out.push(e);
        }
    }
    out
}

/// Plain Lloyd iterations: nearest centroid (lowest index on ties), mean update,
/// empty clusters unchanged, stop when no centroid moves by `tol` or more.
pub fn lloyd_oracle(points: &[[f64; 3]], mut c: Vec<[f64; 3]>, max_iter: usize, tol: f64) -> Vec<[f64; 3]> {
    let d2 = |a: &[f64; 3], b: &[f64; 3]| (0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum::<f64>();
    for _ in 0..max_iter {
        let mut sum = vec![[0.0; 3]; c.len()];
        let mut cnt = vec![0.0; c.len()];
        for p in points {
            let mut best = 0;
            for j in 1..c.len() {
                if d2(p, &c[j]) < d2(p, &c[best]) {
                    best = j;
                }
            }
            for i in 0..3 {
                sum[best][i] += p[i];
            }
            cnt[best] += 1.0;
        }
        let mut moved = 0.0f64;
        for j in 0..c.len() {
            if cnt[j] > 0.0 {
                let next = [sum[j][0] / cnt[j], sum[j][1] / cnt[j], sum[j][2] / cnt[j]];
                moved = moved.max(d2(&next, &c[j]).sqrt());
                c[j] = next;
            }
        }
        if moved < tol {
            break;
        }
    }
    c
}

/// Sample covariance (n − 1 denominator).
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let mut c = vec![vec![0.0; d]; d];
    for r in rows {
        for a in 0..d {
            for b in 0..d {
                c[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    for row in &mut c {
        for v in row.iter_mut() {
            *v /= n - 1.0;
        }
    }
    c
}

/// Leading `k` eigenpairs of a symmetric PSD matrix by power iteration with deflation.
pub fn power_iteration(mut m: Vec<Vec<f64>>, k: usize) -> Vec<(f64, Vec<f64>)> {
    let d = m.len();
    let mut out = Vec::new();
    for comp in 0..k {
        let mut v: Vec<f64> = (0..d).map(|i| 1.0 + ((i * 7 + comp * 3) % 5) as f64 * 0.1).collect();
        let mut lambda = 0.0;
        for _ in 0..20_000 {
            let mut w: Vec<f64> = (0..d).map(|i| (0..d).map(|j| m[i][j] * v[j]).sum()).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            w.iter_mut().for_each(|x| *x /= norm);
            let delta: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
            v = w;
            lambda = norm;
            if delta < 1e-15 {
                break;
            }
        }
        for i in 0..d {
            for j in 0..d {
                m[i][j] -= lambda * v[i] * v[j];
            }
        }
        out.push((lambda, v));
    }
    out
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|x, y| a[*x][col].abs().total_cmp(&a[*y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Ridge with an unpenalized intercept and the penalty on standardized
/// coefficients, solved on the raw scale: `(XcᵀXc + λ·diag(σ²)) β = Xcᵀyc`
/// with `σ²` the population variance of each column.
pub fn ridge_oracle(rows: &[Vec<f64>], y: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let n = rows.len();
    let p = rows[0].len();
    let mean: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let ym = y.iter().sum::<f64>() / n as f64;
    let var: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n as f64)
        .collect();
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for (r, t) in rows.iter().zip(y) {
        for i in 0..p {
            b[i] += (r[i] - mean[i]) * (t - ym);
            for j in 0..p {
                a[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..p {
        a[i][i] += lambda * var[i];
    }
    let beta = gauss_solve(a, b);
    let b0 = ym - beta.iter().zip(&mean).map(|(b, m)| b * m).sum::<f64>();
    (b0, beta)
}

pub fn mae_oracle(t: &[f64], p: &[f64]) -> f64 {
    t.iter().zip(p).map(|(a, b)| (a - b).abs()).sum::<f64>() / t.len() as f64
}

pub fn r2_oracle(t: &[f64], p: &[f64]) -> f64 {
    let m = t.iter().sum::<f64>() / t.len() as f64;
    1.0 - t.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / t.iter().map(|a| (a - m).powi(2)).sum::<f64>()
}
