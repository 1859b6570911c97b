//! Model choices, targets, and the persisted model file.

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{log_transform_dom, log_transform_price};
use crate::gbdt::{gbdt_fit, GbdtModel, GbdtParams, GbdtPreset};
use crate::linear::{ols_fit, ridge_fit, LinearModel};
use crate::listing::{DOM_COLUMN, PRICE_COLUMN};
use crate::table::{DesignMatrix, FeatureTable};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Response variable, always modelled on the log scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Price,
    Dom,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Price, Target::Dom];

    pub fn column(self) -> &'static str {
        match self {
            Target::Price => PRICE_COLUMN,
            Target::Dom => DOM_COLUMN,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Price => "price",
            Target::Dom => "dom",
        }
    }

    pub fn transform(self, raw: f64) -> Result<f64> {
        match self {
            Target::Price => log_transform_price(raw),
            Target::Dom => log_transform_dom(raw),
        }
    }

    /// Transformed target for every table row.
    pub fn values(self, table: &FeatureTable) -> Result<Vec<f64>> {
        table
            .column(self.column())?
            .into_iter()
            .zip(table.ids())
            .map(|(v, id)| {
                let raw = v.ok_or_else(|| Error::domain(format!("listing {id} has no {}", self.column())))?;
                self.transform(raw)
            })
            .collect()
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "price" | "soldprice" => Ok(Target::Price),
            "dom" => Ok(Target::Dom),
            _ => Err(Error::parameter(format!("unknown target {s}"))),
        }
    }
}

/// A regression method: `ols`, `ridge[:λ]`, `xgb`, `lgb`, `cat`, or `gbdt`
/// (the configured parameters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelChoice {
    Ols,
    Ridge(f64),
    Preset(GbdtPreset),
    Gbdt,
}

impl ModelChoice {
    pub fn fit(self, x: &DesignMatrix, y: &[f64], gbdt: &GbdtParams, seed: u64) -> Result<FittedModel> {
        Ok(match self {
            ModelChoice::Ols => FittedModel::Linear(ols_fit(x, y)?),
            ModelChoice::Ridge(lambda) => FittedModel::Linear(ridge_fit(x, y, lambda)?),
            ModelChoice::Preset(p) => FittedModel::Gbdt(gbdt_fit(x, y, &p.params(seed))?),
            ModelChoice::Gbdt => FittedModel::Gbdt(gbdt_fit(x, y, &GbdtParams { seed, ..*gbdt })?),
        })
    }
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelChoice::Ols => f.write_str("ols"),
            ModelChoice::Ridge(l) => write!(f, "ridge:{l}"),
            ModelChoice::Preset(p) => f.write_str(p.as_str()),
            ModelChoice::Gbdt => f.write_str("gbdt"),
        }
    }
}

impl FromStr for ModelChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(p) = GbdtPreset::parse(&lower) {
            return Ok(ModelChoice::Preset(p));
        }
        match lower.split_once(':') {
            None if lower == "ols" => Ok(ModelChoice::Ols),
            None if lower == "ridge" => Ok(ModelChoice::Ridge(1.0)),
            None if lower == "gbdt" => Ok(ModelChoice::Gbdt),
            Some(("ridge", l)) => l
                .parse::<f64>()
                .ok()
                .filter(|l| *l >= 0.0 && l.is_finite())
                .map(ModelChoice::Ridge)
                .ok_or_else(|| Error::parameter(format!("bad ridge penalty in {s}"))),
            _ => Err(Error::parameter(format!("unknown model {s}"))),
        }
    }
}

impl TryFrom<String> for ModelChoice {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModelChoice> for String {
    fn from(m: ModelChoice) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FittedModel {
    Linear(LinearModel),
    Gbdt(GbdtModel),
}

impl FittedModel {
    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        match self {
            FittedModel::Linear(m) => m.predict(x),
            FittedModel::Gbdt(m) => m.predict(x),
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            FittedModel::Linear(m) => &m.feature_names,
            FittedModel::Gbdt(m) => &m.feature_names,
        }
    }
}

/// A fitted model plus what is needed to apply it safely to a feature table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub choice: ModelChoice,
    pub target: Target,
    /// Schema hash of the table the model was trained on.
    pub schema_hash: String,
    pub model: FittedModel,
}

impl ModelFile {
    pub fn new(choice: ModelChoice, target: Target, table: &FeatureTable, model: FittedModel) -> Self {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            choice,
            target,
            schema_hash: table.schema_hash(),
            model,
        }
    }

    /// Refuses tables whose column set differs from the training table.
    pub fn check_schema(&self, table: &FeatureTable) -> Result<()> {
        let found = table.schema_hash();
        if found != self.schema_hash {
            return Err(Error::Schema(format!(
                "schema hash mismatch: model was trained on {} but the table has {found}",
                self.schema_hash
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelFile> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let m: ModelFile = serde_json::from_reader(std::io::BufReader::new(f))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model file version {}",
                m.format_version
            )));
        }
        Ok(m)
    }
}
