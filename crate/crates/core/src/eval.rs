//! Target transforms, resampling, splitting and accuracy metrics.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_STRATA: usize = 10;
pub const DEFAULT_TRAIN_RATIO: f64 = 0.7;

/// Natural log of a sale price.
pub fn log_transform_price(price: f64) -> Result<f64> {
    if !(price > 0.0) || !price.is_finite() {
        return Err(Error::domain(format!("price must be positive, got {price}")));
    }
    Ok(price.ln())
}

pub fn inverse_log_price(log_price: f64) -> f64 {
    log_price.exp()
}

/// `ln(1 + dom)`, so a listing sold on its first day maps to 0.
pub fn log_transform_dom(dom: f64) -> Result<f64> {
    if !(dom >= 0.0) || !dom.is_finite() {
        return Err(Error::domain(format!("days on market must be non-negative, got {dom}")));
    }
    Ok(dom.ln_1p())
}

pub fn inverse_log_dom(log_dom: f64) -> f64 {
    log_dom.exp_m1()
}

/// Stratum index per row. Rows are ranked by target (ties by position) and
/// cut into `n_strata` equal-count groups; equal targets always share a stratum.
pub fn target_strata(targets: &[f64], n_strata: usize) -> Result<Vec<usize>> {
    if n_strata == 0 {
        return Err(Error::parameter("n_strata must be at least 1"));
    }
    if targets.is_empty() {
        return Err(Error::domain("cannot stratify zero rows"));
    }
    if targets.iter().any(|t| t.is_nan()) {
        return Err(Error::domain("targets contain NaN"));
    }
    let n = targets.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| targets[*a].total_cmp(&targets[*b]).then(a.cmp(b)));
    let distinct = 1 + order.windows(2).filter(|w| targets[w[0]] != targets[w[1]]).count();
    if n_strata > distinct {
        log::warn!("{n_strata} strata requested but only {distinct} distinct targets; merging strata");
    }
    // with no more strata than values each value gets its own stratum
    let per_value = n_strata >= distinct;
    let mut strata = vec![0; n];
    let mut current = 0;
    let mut group = 0;
    for (rank, &i) in order.iter().enumerate() {
        if rank > 0 && targets[order[rank - 1]] != targets[i] {
            group += 1;
            current = if per_value { group } else { rank * n_strata / n };
        }
        strata[i] = current;
    }
    Ok(strata)
}

/// Row indices drawn with replacement inside each target-quantile stratum.
/// Every stratum keeps its size, so the output has as many rows as the input.
pub fn stratified_bootstrap(targets: &[f64], n_strata: usize, seed: u64) -> Result<Vec<usize>> {
    let strata = target_strata(targets, n_strata)?;
    let n_groups = strata.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
    for (i, s) in strata.iter().enumerate() {
        members[*s].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(targets.len());
    for group in members.iter().filter(|g| !g.is_empty()) {
        for _ in 0..group.len() {
            out.push(group[rng.random_range(0..group.len())]);
        }
    }
    Ok(out)
}

/// Shuffled partition of `0..n`: the first `⌊ratio·n⌋` shuffled rows train.
/// Both sides are returned in ascending row order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainTest {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn train_test_split(n: usize, ratio: f64, seed: u64) -> Result<TrainTest> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::parameter(format!("split ratio {ratio} outside (0, 1)")));
    }
    if n < 2 {
        return Err(Error::domain(format!("cannot split {n} rows")));
    }
    let n_train = (ratio * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::domain(format!(
            "ratio {ratio} leaves one side of {n} rows empty"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(TrainTest { train, test })
}

fn check_pair(targets: &[f64], predictions: &[f64]) -> Result<()> {
    if targets.len() != predictions.len() {
        return Err(Error::domain(format!(
            "{} targets but {} predictions",
            targets.len(),
            predictions.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::domain("no targets to score"));
    }
    Ok(())
}

pub fn mae(targets: &[f64], predictions: &[f64]) -> Result<f64> {
    check_pair(targets, predictions)?;
    let total: f64 = targets.iter().zip(predictions).map(|(t, p)| (t - p).abs()).sum();
    Ok(total / targets.len() as f64)
}

/// `1 − SSE/SST`, with SST taken about the mean of `targets`.
pub fn r_squared(targets: &[f64], predictions: &[f64]) -> Result<f64> {
    check_pair(targets, predictions)?;
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let sst: f64 = targets.iter().map(|t| (t - mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::domain("targets have zero variance"));
    }
    let sse: f64 = targets.iter().zip(predictions).map(|(t, p)| (t - p).powi(2)).sum();
    Ok(1.0 - sse / sst)
}
