//! Feature-combination experiments: every combination and model is scored on
//! one shared train/test partition per run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart;
use crate::error::{Error, Result};
use crate::eval::{mae, r_squared, stratified_bootstrap, train_test_split, DEFAULT_STRATA, DEFAULT_TRAIN_RATIO};
use crate::gbdt::{gbdt_fit, select_top_n, GbdtParams, GbdtPreset};
use crate::listing::BASIC_FEATURES;
use crate::model::{FittedModel, ModelChoice, Target};
use crate::table::{DesignMatrix, FeatureTable};

pub const BASE_1: [&str; 5] = ["LOTSIZE", "AGE", "SQFT", "ZIP", "BATHS"];
pub const BASE_2: [&str; 7] = ["LOTSIZE", "AGE", "SQFT", "ZIP", "BATHS", "BEDS", "GARAGE"];

/// Written at the top of every report.
pub const LOG_SCALE_NOTE: &str = "# metrics on log scale: price as ln(price), dom as ln(1+dom)";

/// Offset mixed into the run seed for the dom bootstrap.
const BOOTSTRAP_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Combination {
    pub name: String,
    /// Feature tokens; when empty the name itself is split on `+`.
    #[serde(default)]
    pub features: Vec<String>,
    pub models: Vec<ModelChoice>,
}

impl Combination {
    pub fn new(name: &str, models: &[ModelChoice]) -> Self {
        Combination {
            name: name.to_string(),
            features: Vec::new(),
            models: models.to_vec(),
        }
    }

    pub fn tokens(&self) -> Vec<String> {
        if self.features.is_empty() {
            self.name.split('+').map(|t| t.trim().to_string()).collect()
        } else {
            self.features.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub combinations: Vec<Combination>,
    pub targets: Vec<Target>,
    pub seed: u64,
    pub ratio: f64,
    pub n_strata: usize,
    /// Resample the dom training partition within target strata.
    pub bootstrap_dom: bool,
    /// Parameters for the `gbdt` model choice.
    pub gbdt: GbdtParams,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        use GbdtPreset::*;
        let linear = [ModelChoice::Ols, ModelChoice::Ridge(1.0)];
        let all = [
            ModelChoice::Ols,
            ModelChoice::Ridge(1.0),
            ModelChoice::Preset(Xgb),
            ModelChoice::Preset(Lgb),
            ModelChoice::Preset(Cat),
        ];
        ExperimentSpec {
            combinations: vec![
                Combination::new("base_1", &linear),
                Combination::new("base_2", &all),
                Combination::new("base_2+indoor", &all),
                Combination::new("base_2+outdoor", &all),
                Combination::new("base_2+satellite", &all),
                Combination::new("base_2+image", &all),
                Combination::new("top:40:lgb", &[ModelChoice::Preset(Lgb)]),
            ],
            targets: Target::ALL.to_vec(),
            seed: 0,
            ratio: DEFAULT_TRAIN_RATIO,
            n_strata: DEFAULT_STRATA,
            bootstrap_dom: true,
            gbdt: GbdtParams::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Spec(format!("split ratio {} outside (0, 1)", self.ratio)));
        }
        if self.combinations.is_empty() || self.targets.is_empty() {
            return Err(Error::Spec(
                "experiment needs at least one combination and one target".into(),
            ));
        }
        if let Some(c) = self.combinations.iter().find(|c| c.models.is_empty()) {
            return Err(Error::Spec(format!("combination {} lists no models", c.name)));
        }
        self.gbdt.validate()
    }
}

/// A feature group name, or `None` when `token` is not a group.
pub fn feature_group(token: &str, table: &FeatureTable) -> Option<Vec<String>> {
    let with_prefix = |prefixes: &[&str], extra: &[&str]| -> Vec<String> {
        table
            .feature_columns()
            .into_iter()
            .filter(|c| prefixes.iter().any(|p| c.starts_with(p)) || extra.contains(&c.as_str()))
            .collect()
    };
    let fixed = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    Some(match token {
        "base_1" => fixed(&BASE_1),
        "base_2" => fixed(&BASE_2),
        "mls" => fixed(&BASIC_FEATURES),
        "indoor" => with_prefix(&["ENT_ind_", "CG_ind_", "cat_", "pca_"], &[]),
        "outdoor" => with_prefix(&["ENT_out_", "CG_out_"], &["GREEN_mask"]),
        "satellite" => with_prefix(&["ENT_sat_", "CG_sat_"], &["GREEN_sat"]),
        "image" => with_prefix(&["ENT_", "CG_", "cat_", "pca_"], &["GREEN_mask", "GREEN_sat"]),
        "all" => table.feature_columns(),
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct TopN {
    n: usize,
    preset: GbdtPreset,
}

fn parse_top(token: &str) -> Option<Option<TopN>> {
    let rest = token.strip_prefix("top:")?;
    let mut parts = rest.splitn(2, ':');
    let n = parts.next().and_then(|n| n.parse().ok());
    let preset = match parts.next() {
        None => Some(GbdtPreset::Lgb),
        Some(p) => GbdtPreset::parse(p),
    };
    Some(n.zip(preset).map(|(n, preset)| TopN { n, preset }))
}

enum Resolved {
    Fixed(Vec<String>),
    /// Fixed names plus the top-n selections to add per target.
    WithTop(Vec<String>, Vec<TopN>),
}

fn resolve(tokens: &[String], table: &FeatureTable, offenders: &mut Vec<String>) -> Resolved {
    let available = table.feature_columns();
    let mut names = Vec::new();
    let mut tops = Vec::new();
    for t in tokens {
        if let Some(top) = parse_top(t) {
            match top {
                Some(top) if top.n >= 1 && top.n <= available.len() => tops.push(top),
                _ => offenders.push(t.clone()),
            }
        } else if let Some(group) = feature_group(t, table) {
            let missing: Vec<&String> = group.iter().filter(|g| !table.has_column(g)).collect();
            if group.is_empty() || !missing.is_empty() {
                offenders.push(t.clone());
            }
            names.extend(group);
        } else if available.contains(t) {
            names.push(t.clone());
        } else {
            offenders.push(t.clone());
        }
    }
    if tops.is_empty() {
        Resolved::Fixed(names)
    } else {
        Resolved::WithTop(names, tops)
    }
}

/// Resolves feature names and group tokens to sorted, distinct column names.
/// `top:` tokens are not accepted here.
pub fn resolve_features(tokens: &[String], table: &FeatureTable) -> Result<Vec<String>> {
    let mut offenders = Vec::new();
    let names = match resolve(tokens, table, &mut offenders) {
        Resolved::Fixed(n) => n,
        Resolved::WithTop(n, _) => {
            offenders.extend(tokens.iter().filter(|t| t.starts_with("top:")).cloned());
            n
        }
    };
    if !offenders.is_empty() {
        return Err(Error::Spec(format!("unresolvable features: {}", offenders.join(", "))));
    }
    if names.is_empty() {
        return Err(Error::Spec("no features selected".into()));
    }
    Ok(dedup_sorted(names))
}

fn dedup_sorted(mut names: Vec<String>) -> Vec<String> {
    names.sort();
    names.dedup();
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub combination: String,
    pub model: String,
    pub target: Target,
    pub n_features: usize,
    pub mae: f64,
    pub r_squared: f64,
    /// Not written to the CSV so reports stay reproducible.
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub targets: Vec<Target>,
    pub rows: Vec<MetricRow>,
    pub n_train: usize,
    pub n_test: usize,
}

impl MetricReport {
    pub fn get(&self, combination: &str, model: &str, target: Target) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.combination == combination && r.model == model && r.target == target)
    }

    /// (combination, model) pairs in first-seen order.
    fn pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for r in &self.rows {
            let key = (r.combination.clone(), r.model.clone());
            if !out.contains(&key) {
                out.push(key);
            }
        }
        out
    }

    /// One line per (combination, model) with MAE and R² for each target,
    /// ranked by mean R² across targets.
    pub fn to_csv(&self) -> String {
        let pairs = self.pairs();
        let mean_r2: Vec<f64> = pairs
            .iter()
            .map(|(c, m)| {
                let v: Vec<f64> = self
                    .targets
                    .iter()
                    .filter_map(|t| self.get(c, m, *t).map(|r| r.r_squared))
                    .collect();
                v.iter().sum::<f64>() / v.len().max(1) as f64
            })
            .collect();
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by(|a, b| mean_r2[*b].total_cmp(&mean_r2[*a]).then(a.cmp(b)));
        let mut rank = vec![0; pairs.len()];
        for (pos, i) in order.iter().enumerate() {
            rank[*i] = pos + 1;
        }

        let mut s = String::new();
        let _ = writeln!(s, "{LOG_SCALE_NOTE}");
        let _ = writeln!(s, "# train rows {}, test rows {}", self.n_train, self.n_test);
        s.push_str("rank,combination,model");
        for t in &self.targets {
            let _ = write!(s, ",{t}_features,{t}_MAE,{t}_R2");
        }
        s.push('\n');
        for i in order {
            let (c, m) = &pairs[i];
            let _ = write!(s, "{},{c},{m}", rank[i]);
            for t in &self.targets {
                match self.get(c, m, *t) {
                    Some(r) => {
                        let _ = write!(s, ",{},{:.6},{:.6}", r.n_features, r.mae, r.r_squared);
                    }
                    None => s.push_str(",,,"),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv().as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Grouped bar chart of test R² per (combination, model), one bar per target.
    pub fn to_svg(&self) -> String {
        let pairs = self.pairs();
        let labels: Vec<String> = pairs.iter().map(|(c, m)| format!("{c} [{m}]")).collect();
        let series: Vec<String> = self.targets.iter().map(|t| format!("{t} R²")).collect();
        let values: Vec<Vec<f64>> = pairs
            .iter()
            .map(|(c, m)| {
                self.targets
                    .iter()
                    .map(|t| self.get(c, m, *t).map_or(0.0, |r| r.r_squared))
                    .collect()
            })
            .collect();
        chart::grouped_bars("Test R² by feature combination", &labels, &series, &values)
    }
}

struct Prepared {
    target: Target,
    y: Vec<f64>,
    train: Vec<usize>,
    test: Vec<usize>,
    top: BTreeMap<TopN, Vec<String>>,
}

/// Fits every combination × model × target and scores it on the shared test rows.
pub fn run_experiment(spec: &ExperimentSpec, table: &FeatureTable) -> Result<MetricReport> {
    spec.validate()?;
    let mut offenders = Vec::new();
    let resolved: Vec<Resolved> = spec
        .combinations
        .iter()
        .map(|c| resolve(&c.tokens(), table, &mut offenders))
        .collect();
    if !offenders.is_empty() {
        offenders.sort();
        offenders.dedup();
        return Err(Error::Spec(format!("unresolvable features: {}", offenders.join(", "))));
    }

    let split = train_test_split(table.n_rows(), spec.ratio, spec.seed)?;
    let all_features = table.feature_columns();
    let wanted_tops: Vec<TopN> = {
        let mut v: Vec<TopN> = resolved
            .iter()
            .flat_map(|r| match r {
                Resolved::WithTop(_, t) => t.clone(),
                Resolved::Fixed(_) => Vec::new(),
            })
            .collect();
        v.sort();
        v.dedup();
        v
    };

    let mut prepared = Vec::new();
    for &target in &spec.targets {
        let y = target.values(table)?;
        let train = if target == Target::Dom && spec.bootstrap_dom {
            let ty: Vec<f64> = split.train.iter().map(|r| y[*r]).collect();
            stratified_bootstrap(&ty, spec.n_strata, spec.seed ^ BOOTSTRAP_SEED_OFFSET)?
                .into_iter()
                .map(|i| split.train[i])
                .collect()
        } else {
            split.train.clone()
        };
        let mut top = BTreeMap::new();
        if !wanted_tops.is_empty() {
            let x = DesignMatrix::from_table(table, &all_features, Some(&train))?;
            let ty: Vec<f64> = train.iter().map(|r| y[*r]).collect();
            for t in &wanted_tops {
                let m = gbdt_fit(&x, &ty, &t.preset.params(spec.seed))?;
                top.insert(*t, select_top_n(&m.feature_importance(), t.n)?);
            }
        }
        prepared.push(Prepared {
            target,
            y,
            train,
            test: split.test.clone(),
            top,
        });
    }

    let mut jobs = Vec::new();
    for p in &prepared {
        for (c, r) in spec.combinations.iter().zip(&resolved) {
            let names = match r {
                Resolved::Fixed(n) => dedup_sorted(n.clone()),
                Resolved::WithTop(n, tops) => {
                    let mut all = n.clone();
                    for t in tops {
                        all.extend(p.top[t].iter().cloned());
                    }
                    dedup_sorted(all)
                }
            };
            for m in &c.models {
                jobs.push((p, c.name.clone(), names.clone(), *m));
            }
        }
    }

    let rows: Vec<MetricRow> = jobs
        .par_iter()
        .map(|(p, combination, names, choice)| {
            let start = Instant::now();
            let x_train = DesignMatrix::from_table(table, names, Some(&p.train))?;
            let y_train: Vec<f64> = p.train.iter().map(|r| p.y[*r]).collect();
            let model: FittedModel = choice.fit(&x_train, &y_train, &spec.gbdt, spec.seed)?;
            let x_test = DesignMatrix::from_table(table, names, Some(&p.test))?;
            let y_test: Vec<f64> = p.test.iter().map(|r| p.y[*r]).collect();
            let pred = model.predict(&x_test)?;
            Ok(MetricRow {
                combination: combination.clone(),
                model: choice.to_string(),
                target: p.target,
                n_features: names.len(),
                mae: mae(&y_test, &pred)?,
                r_squared: r_squared(&y_test, &pred)?,
                wall_seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<_>>()?;

    Ok(MetricReport {
        targets: spec.targets.clone(),
        rows,
        n_train: split.train.len(),
        n_test: split.test.len(),
    })
}
