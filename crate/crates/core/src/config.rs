//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! jobs = 4
//!
//! [paths]
//! listings = "corpus/listings.csv"
//! manifest = "corpus/manifest.csv"
//! image_root = "corpus"
//! embeddings = "out/embeddings.csv"
//! out = "out"
//!
//! [fit]
//! model = "lgb"
//! target = "price"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::color::{GreenMaskSpec, MaskDerivation, DEFAULT_PALETTE_K};
use crate::deep::{PcaScope, PcaTarget};
use crate::entropy::DEFAULT_WINDOW;
use crate::error::{Error, Result};
use crate::experiment::ExperimentSpec;
use crate::gbdt::GbdtParams;
use crate::model::{ModelChoice, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub listings: PathBuf,
    pub manifest: PathBuf,
    pub image_root: PathBuf,
    /// Embedding file read by `extract` and written by `embed`.
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyConfig {
    pub window: usize,
    /// Satellite zoom levels to process; other zooms are skipped.
    pub zooms: Vec<u8>,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        EntropyConfig {
            window: DEFAULT_WINDOW,
            zooms: vec![16, 18, 20],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenConfig {
    /// Fixed mask; when absent the mask is derived from outdoor palettes.
    pub mask: Option<GreenMaskSpec>,
    pub derivation: MaskDerivation,
    pub k: usize,
    /// At most this many outdoor images contribute palettes.
    pub palette_images: usize,
    pub satellite_zoom: u8,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig {
            mask: None,
            derivation: MaskDerivation::default(),
            k: DEFAULT_PALETTE_K,
            palette_images: 200,
            satellite_zoom: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeepConfig {
    pub pca: PcaTarget,
    pub scope: PcaScope,
    /// Averaged components emitted per category.
    pub emit: usize,
}

impl Default for DeepConfig {
    fn default() -> Self {
        DeepConfig {
            pca: PcaTarget::default(),
            scope: PcaScope::Pooled,
            emit: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub model: ModelChoice,
    pub target: Target,
    /// Feature tokens, as in experiment combinations.
    pub features: Vec<String>,
    pub ratio: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            model: ModelChoice::Preset(crate::gbdt::GbdtPreset::Lgb),
            target: Target::Price,
            features: vec!["all".into()],
            ratio: crate::eval::DEFAULT_TRAIN_RATIO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectConfig {
    pub n: usize,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig { n: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Required: there is no clock-based default.
    pub seed: u64,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    pub paths: Paths,
    #[serde(default)]
    pub entropy: EntropyConfig,
    #[serde(default)]
    pub green: GreenConfig,
    #[serde(default)]
    pub deep: DeepConfig,
    #[serde(default)]
    pub gbdt: GbdtParams,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub select: SelectConfig,
    #[serde(default)]
    pub experiment: ExperimentSpec,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl RunConfig {
    /// Parses TOML; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<RunConfig> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.paths.listings);
        fix(&mut cfg.paths.manifest);
        fix(&mut cfg.paths.image_root);
        fix(&mut cfg.paths.out);
        if let Some(e) = cfg.paths.embeddings.as_mut() {
            fix(e);
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Copies the run seed into the nested sections that carry their own.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.sync_seeds();
        self
    }

    pub fn sync_seeds(&mut self) {
        self.gbdt.seed = self.seed;
        self.experiment.seed = self.seed;
        self.experiment.gbdt = self.gbdt;
    }

    /// Checks the input paths exist and the parameters are in range.
    /// The output directory may be missing; it is created on demand.
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("listings", &self.paths.listings),
            ("manifest", &self.paths.manifest),
            ("image_root", &self.paths.image_root),
        ] {
            if !p.exists() {
                return Err(Error::Config(format!("{name} path {} does not exist", p.display())));
            }
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if self.entropy.window == 0 || self.entropy.window % 2 == 0 {
            return Err(Error::Config(format!(
                "entropy window {} must be odd",
                self.entropy.window
            )));
        }
        if !self.entropy.zooms.contains(&self.green.satellite_zoom) {
            return Err(Error::Config(format!(
                "satellite zoom {} is not in the zoom list",
                self.green.satellite_zoom
            )));
        }
        if let Some(m) = &self.green.mask {
            m.validate()?;
        }
        if self.green.k == 0 {
            return Err(Error::Config("palette k must be at least 1".into()));
        }
        self.gbdt.validate()?;
        self.experiment.validate()
    }

    pub fn embeddings_path(&self) -> PathBuf {
        self.paths
            .embeddings
            .clone()
            .unwrap_or_else(|| self.paths.out.join("embeddings.csv"))
    }

    pub fn out(&self, file: &str) -> PathBuf {
        self.paths.out.join(file)
    }
}
