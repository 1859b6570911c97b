//! Least-squares gradient-boosted regression trees over quantile histograms.
//!
//! Each feature is cut into at most `n_bins` bins at quantiles of its observed
//! training values. Stage 0 predicts the target mean; every later stage fits a
//! depth-bounded tree to the current residuals, choosing at each node the
//! (feature, bin boundary, missing direction) with the largest reduction in
//! squared error. Leaves hold residual means and are added with factor `η`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::align;
use crate::table::DesignMatrix;

pub const GBDT_FORMAT_VERSION: u32 = 1;

const MISSING_BIN: u16 = u16::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub n_bins: usize,
    pub seed: u64,
    /// Fraction of training rows drawn (without replacement) for each tree.
    pub subsample: f64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_trees: 500,
            learning_rate: 0.05,
            max_depth: 6,
            min_samples_leaf: 20,
            n_bins: 64,
            seed: 0,
            subsample: 1.0,
        }
    }
}

/// Named parameter sets standing in for the three boosting libraries
/// commonly compared on tabular data. All run on this one engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GbdtPreset {
    Xgb,
    Lgb,
    Cat,
}

impl GbdtPreset {
    pub fn params(self, seed: u64) -> GbdtParams {
        match self {
            GbdtPreset::Xgb => GbdtParams {
                n_trees: 300,
                learning_rate: 0.1,
                max_depth: 6,
                min_samples_leaf: 5,
                n_bins: 128,
                seed,
                subsample: 0.8,
            },
            GbdtPreset::Lgb => GbdtParams {
                seed,
                ..GbdtParams::default()
            },
            GbdtPreset::Cat => GbdtParams {
                n_trees: 300,
                learning_rate: 0.03,
                max_depth: 4,
                min_samples_leaf: 10,
                n_bins: 32,
                seed,
                subsample: 1.0,
            },
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GbdtPreset::Xgb => "xgb",
            GbdtPreset::Lgb => "lgb",
            GbdtPreset::Cat => "cat",
        }
    }

    pub fn parse(s: &str) -> Option<GbdtPreset> {
        match s.to_ascii_lowercase().as_str() {
            "xgb" => Some(GbdtPreset::Xgb),
            "lgb" => Some(GbdtPreset::Lgb),
            "cat" => Some(GbdtPreset::Cat),
            _ => None,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::parameter(format!(
                "learning_rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        if self.max_depth < 1 {
            return Err(Error::parameter("max_depth must be at least 1"));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::parameter("min_samples_leaf must be at least 1"));
        }
        if self.n_bins < 2 || self.n_bins >= MISSING_BIN as usize {
            return Err(Error::parameter(format!("n_bins {} outside [2, 65534]", self.n_bins)));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::parameter(format!("subsample {} outside (0, 1]", self.subsample)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        /// Rows with `value <= threshold` go left.
        threshold: f64,
        /// Highest bin index routed left.
        bin: u16,
        missing_left: bool,
        gain: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        n: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Walks from the root; `goes_left(feature, threshold, bin, missing_left)` picks the branch.
    fn leaf_for(&self, goes_left: impl Fn(usize, f64, u16, bool) -> bool) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    bin,
                    missing_left,
                    left,
                    right,
                    ..
                } => {
                    i = if goes_left(*feature, *threshold, *bin, *missing_left) {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub format_version: u32,
    pub params: GbdtParams,
    pub feature_names: Vec<String>,
    pub initial: f64,
    pub trees: Vec<Tree>,
    /// Total split gain per feature, aligned with `feature_names`.
    pub feature_gain: Vec<f64>,
    pub total_gain: f64,
    pub bin_edges: Vec<Vec<f64>>,
    /// Training MSE after stage 0 and after every tree.
    pub stage_train_mse: Vec<f64>,
    /// Set when the target was constant and no trees were grown.
    pub constant_target: bool,
}

/// Bin boundaries at quantiles of the observed values. Boundaries sit halfway
/// between adjacent distinct values, so a split never separates equal values.
pub fn quantile_edges(values: &[f64], n_bins: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for v in sorted.iter() {
        match distinct.last_mut() {
            Some((d, c)) if *d == *v => *c += 1,
            _ => distinct.push((*v, 1)),
        }
    }
    if distinct.len() < 2 {
        return Vec::new();
    }
    let cuts: Vec<usize> = if distinct.len() <= n_bins {
        (0..distinct.len() - 1).collect()
    } else {
        let n = sorted.len();
        let mut cum = Vec::with_capacity(distinct.len());
        let mut acc = 0;
        for (_, c) in &distinct {
            acc += c;
            cum.push(acc);
        }
        let mut cuts: Vec<usize> = (1..n_bins)
            .map(|q| {
                let target = (q * n).div_ceil(n_bins);
                cum.partition_point(|c| *c < target)
            })
            .filter(|i| *i < distinct.len() - 1)
            .collect();
        cuts.dedup();
        cuts
    };
    cuts.into_iter()
        .map(|i| {
            let (a, b) = (distinct[i].0, distinct[i + 1].0);
            let mid = a + (b - a) / 2.0;
            if mid >= b || mid < a {
                a
            } else {
                mid
            }
        })
        .collect()
}

#[inline]
fn bin_of(edges: &[f64], v: Option<f64>) -> u16 {
    match v {
        Some(x) if !x.is_nan() => edges.partition_point(|e| *e < x) as u16,
        _ => MISSING_BIN,
    }
}

struct Binned {
    /// Column-major bin indices.
    bins: Vec<Vec<u16>>,
    n_bins: Vec<usize>,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    bin: u16,
    missing_left: bool,
}

/// Squared-error reduction of splitting a node into two parts:
/// `n_l·n_r/n · (mean_l − mean_r)²`.
#[inline]
fn split_gain(sum_l: f64, n_l: usize, sum_r: f64, n_r: usize) -> f64 {
    let (nl, nr) = (n_l as f64, n_r as f64);
    let d = sum_l / nl - sum_r / nr;
    nl * nr / (nl + nr) * d * d
}

fn best_split_for_feature(
    feature: usize,
    bins: &[u16],
    n_bins: usize,
    rows: &[usize],
    residuals: &[f64],
    min_leaf: usize,
) -> Option<Candidate> {
    if n_bins < 2 {
        return None;
    }
    let mut sums = vec![0.0f64; n_bins];
    let mut counts = vec![0usize; n_bins];
    let (mut miss_sum, mut miss_n) = (0.0, 0usize);
    for &r in rows {
        let b = bins[r];
        if b == MISSING_BIN {
            miss_sum += residuals[r];
            miss_n += 1;
        } else {
            sums[b as usize] += residuals[r];
            counts[b as usize] += 1;
        }
    }
    let total_sum: f64 = sums.iter().sum();
    let total_n = rows.len() - miss_n;
    let mut best: Option<Candidate> = None;
    let (mut left_sum, mut left_n) = (0.0, 0usize);
    for s in 0..n_bins - 1 {
        left_sum += sums[s];
        left_n += counts[s];
        if counts[s] == 0 {
            continue;
        }
        let right_sum = total_sum - left_sum;
        let right_n = total_n - left_n;
        if right_n == 0 {
            break;
        }
        let options: &[bool] = if miss_n == 0 {
            if left_n >= right_n {
                &[true]
            } else {
                &[false]
            }
        } else {
            &[false, true]
        };
        for &missing_left in options {
            let (ls, ln, rs, rn) = if missing_left {
                (left_sum + miss_sum, left_n + miss_n, right_sum, right_n)
            } else {
                (left_sum, left_n, right_sum + miss_sum, right_n + miss_n)
            };
            if ln < min_leaf || rn < min_leaf {
                continue;
            }
            let gain = split_gain(ls, ln, rs, rn);
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(Candidate {
                    gain,
                    feature,
                    bin: s as u16,
                    missing_left,
                });
            }
        }
    }
    best
}

struct Grower<'a> {
    binned: &'a Binned,
    edges: &'a [Vec<f64>],
    residuals: &'a [f64],
    params: &'a GbdtParams,
    feature_gain: &'a mut [f64],
    total_gain: &'a mut f64,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let sum: f64 = rows.iter().map(|&r| self.residuals[r]).sum();
        let value = sum / rows.len() as f64;
        self.nodes.push(Node::Leaf { value, n: rows.len() });

        if depth >= self.params.max_depth || rows.len() < 2 * self.params.min_samples_leaf {
            return id;
        }
        let scale: f64 = rows.iter().map(|&r| self.residuals[r] * self.residuals[r]).sum();
        let candidates: Vec<Option<Candidate>> = (0..self.binned.bins.len())
            .into_par_iter()
            .map(|f| {
                best_split_for_feature(
                    f,
                    &self.binned.bins[f],
                    self.binned.n_bins[f],
                    &rows,
                    self.residuals,
                    self.params.min_samples_leaf,
                )
            })
            .collect();
        let best = candidates
            .into_iter()
            .flatten()
            .fold(None::<Candidate>, |acc, c| match acc {
                Some(a) if a.gain >= c.gain => Some(a),
                _ => Some(c),
            });
        let Some(best) = best else { return id };
        if !(best.gain > 1e-12 * scale) {
            return id;
        }

        let col = &self.binned.bins[best.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| {
            let b = col[r];
            if b == MISSING_BIN {
                best.missing_left
            } else {
                b <= best.bin
            }
        });
        drop(rows);
        self.feature_gain[best.feature] += best.gain;
        *self.total_gain += best.gain;
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: self.edges[best.feature][best.bin as usize],
            bin: best.bin,
            missing_left: best.missing_left,
            gain: best.gain,
            left,
            right,
        };
        id
    }
}

pub fn gbdt_fit(x: &DesignMatrix, y: &[f64], params: &GbdtParams) -> Result<GbdtModel> {
    params.validate()?;
    let n = x.n_rows;
    if y.len() != n {
        return Err(Error::domain(format!("{} targets for {n} rows", y.len())));
    }
    if n == 0 || n < 2 * params.min_samples_leaf {
        return Err(Error::domain(format!(
            "need at least {} rows for min_samples_leaf = {}, got {n}",
            2 * params.min_samples_leaf,
            params.min_samples_leaf
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("targets must be finite"));
    }
    let p = x.n_features();
    let edges: Vec<Vec<f64>> = x
        .columns
        .iter()
        .map(|c| {
            let observed: Vec<f64> = c.iter().flatten().copied().collect();
            quantile_edges(&observed, params.n_bins)
        })
        .collect();
    let binned = Binned {
        bins: x
            .columns
            .iter()
            .zip(&edges)
            .map(|(c, e)| c.iter().map(|v| bin_of(e, *v)).collect())
            .collect(),
        n_bins: edges.iter().map(|e| e.len() + 1).collect(),
    };

    let constant_target = y.iter().all(|v| *v == y[0]);
    let initial = if constant_target {
        y[0]
    } else {
        y.iter().sum::<f64>() / n as f64
    };
    let mut pred = vec![initial; n];
    let mse = |pred: &[f64]| pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n as f64;
    let mut stage_train_mse = vec![mse(&pred)];
    let mut feature_gain = vec![0.0; p];
    let mut total_gain = 0.0;
    let mut trees = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n_sample = ((params.subsample * n as f64).floor() as usize).clamp(2 * params.min_samples_leaf, n);

    if !constant_target {
        for _ in 0..params.n_trees {
            let residuals: Vec<f64> = y.iter().zip(&pred).map(|(t, p)| t - p).collect();
            let rows: Vec<usize> = if n_sample < n {
                let mut idx = sample(&mut rng, n, n_sample).into_vec();
                idx.sort_unstable();
                idx
            } else {
                (0..n).collect()
            };
            let mut grower = Grower {
                binned: &binned,
                edges: &edges,
                residuals: &residuals,
                params,
                feature_gain: &mut feature_gain,
                total_gain: &mut total_gain,
                nodes: Vec::new(),
            };
            grower.grow(rows, 0);
            let tree = Tree { nodes: grower.nodes };
            if tree.nodes.len() == 1 && n_sample == n {
                // no split improves the fit; later stages would repeat this tree
                break;
            }
            for (r, p) in pred.iter_mut().enumerate() {
                let leaf = tree.leaf_for(|f, _, bin, missing_left| {
                    let b = binned.bins[f][r];
                    if b == MISSING_BIN {
                        missing_left
                    } else {
                        b <= bin
                    }
                });
                *p += params.learning_rate * leaf;
            }
            stage_train_mse.push(mse(&pred));
            trees.push(tree);
        }
    }

    Ok(GbdtModel {
        format_version: GBDT_FORMAT_VERSION,
        params: *params,
        feature_names: x.names.clone(),
        initial,
        trees,
        feature_gain,
        total_gain,
        bin_edges: edges,
        stage_train_mse,
        constant_target,
    })
}

impl GbdtModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// `initial + η·Σ tree outputs`, with columns matched to the training schema by name.
    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        let cols = align(x, &self.feature_names)?;
        let eta = self.params.learning_rate;
        Ok((0..x.n_rows)
            .map(|r| {
                let boost: f64 = self
                    .trees
                    .iter()
                    .map(|t| {
                        t.leaf_for(|f, threshold, _, missing_left| match cols[f][r] {
                            Some(v) if !v.is_nan() => v <= threshold,
                            _ => missing_left,
                        })
                    })
                    .sum();
                self.initial + eta * boost
            })
            .collect())
    }

    /// Total split gain per feature, in training column order.
    pub fn feature_importance(&self) -> Vec<(String, f64)> {
        self.feature_names
            .iter()
            .cloned()
            .zip(self.feature_gain.iter().copied())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<GbdtModel> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let m: GbdtModel = serde_json::from_reader(f)?;
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        if self.format_version != GBDT_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        let p = self.feature_names.len();
        if self.feature_gain.len() != p || self.bin_edges.len() != p {
            return Err(Error::Format("per-feature arrays do not match the schema".into()));
        }
        for t in &self.trees {
            for node in &t.nodes {
                if let Node::Split {
                    feature, left, right, ..
                } = node
                {
                    if *feature >= p || *left >= t.nodes.len() || *right >= t.nodes.len() {
                        return Err(Error::Format("tree references a missing node or feature".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The `n` names with the highest scores; ties go to the alphabetically first name.
pub fn select_top_n(importances: &[(String, f64)], n: usize) -> Result<Vec<String>> {
    if n > importances.len() {
        return Err(Error::parameter(format!(
            "cannot select {n} of {} features",
            importances.len()
        )));
    }
    let mut sorted: Vec<&(String, f64)> = importances.iter().collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(sorted.into_iter().take(n).map(|(name, _)| name.clone()).collect())
}
