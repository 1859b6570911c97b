//! Visual feature extraction and predictive modeling for real-estate listings.
//!
//! The crate turns listing photos (indoor, outdoor, satellite) into numeric
//! features and feeds them, together with basic MLS attributes, to linear
//! baselines and a histogram gradient-boosted tree learner.
//!
//! - [`entropy`]: local Shannon entropy maps, regional averages, center of gravity
//! - [`color`]: HSV conversion, k-means palettes, green masks
//! - [`deep`]: embedding ingestion, PCA, per-category averaging
//! - [`linear`], [`gbdt`]: models, importance, feature selection
//! - [`eval`], [`experiment`]: transforms, sampling, metrics, feature-combination runs
//! - [`synthetic`]: a procedural corpus with known ground truth
//! - [`commands`]: the file-to-file pipeline behind the `estate-vision` binary

pub mod chart;
pub mod color;
pub mod commands;
pub mod config;
pub mod deep;
pub mod entropy;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod gbdt;
pub mod linear;
pub mod listing;
pub mod manifest;
pub mod model;
pub mod raster;
pub mod synthetic;
pub mod table;

pub use error::{Error, Result};
