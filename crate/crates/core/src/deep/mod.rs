//! Per-image embedding vectors grouped by indoor room category, reduced with
//! PCA and averaged per listing.
//!
//! Embeddings normally come from a pretrained vision network and are read from
//! a file. [`toy_embed`] is a deterministic stand-in used for tests and demos.

mod pca;

pub use pca::{pca_fit, PcaModel, PcaTarget, PCA_FORMAT_VERSION};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::color::rgb_to_hsv;
use crate::entropy::to_grayscale;
use crate::error::{Error, Result};
use crate::manifest::{Category, ImageAsset, ImageType};
use crate::table::Cell;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub image_id: String,
    pub vector: Vec<f64>,
}

/// Embeddings keyed by image id, all of one dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingIndex {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingIndex {
    pub fn from_records(records: Vec<EmbeddingRecord>) -> Result<Self> {
        let dim = records.first().map_or(0, |r| r.vector.len());
        let mut vectors = BTreeMap::new();
        for r in records {
            if r.vector.len() != dim {
                return Err(Error::Format(format!(
                    "embedding {} has dimension {}, expected {dim}",
                    r.image_id,
                    r.vector.len()
                )));
            }
            if vectors.insert(r.image_id.clone(), r.vector).is_some() {
                return Err(Error::Format(format!("duplicate embedding for {}", r.image_id)));
            }
        }
        Ok(EmbeddingIndex { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&[f64]> {
        self.vectors.get(image_id).map(Vec::as_slice)
    }

    /// Drops embeddings whose image id is not in `known`, returning how many were dropped.
    pub fn retain_known<'a>(&mut self, known: impl IntoIterator<Item = &'a str>) -> usize {
        let keep: std::collections::BTreeSet<&str> = known.into_iter().collect();
        let before = self.vectors.len();
        self.vectors.retain(|k, _| keep.contains(k.as_str()));
        let dropped = before - self.vectors.len();
        if dropped > 0 {
            log::warn!("dropped {dropped} embeddings with unknown image ids");
        }
        dropped
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<Vec<EmbeddingRecord>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(f)
}

/// Reads `image_id,v1,...,vD` rows, optionally preceded by a `dim=D` line.
pub fn parse_embeddings<R: Read>(reader: R) -> Result<Vec<EmbeddingRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut declared: Option<usize> = None;
    let mut out: Vec<EmbeddingRecord> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if i == 0 && rec.len() == 1 {
            if let Some(d) = rec[0].strip_prefix("dim=") {
                declared = Some(
                    d.parse()
                        .map_err(|_| Error::Format(format!("bad dim header {:?}", &rec[0])))?,
                );
                continue;
            }
        }
        if rec.len() < 2 {
            return Err(Error::Format(format!("line {line}: embedding row has no values")));
        }
        let vector = rec
            .iter()
            .skip(1)
            .map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Format(format!("line {line}: bad value {s:?}"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        let expected = declared.or_else(|| out.first().map(|r| r.vector.len()));
        if let Some(d) = expected {
            if vector.len() != d {
                return Err(Error::Format(format!(
                    "line {line}: dimension {} differs from {d}",
                    vector.len()
                )));
            }
        }
        out.push(EmbeddingRecord {
            image_id: rec[0].to_string(),
            vector,
        });
    }
    if out.is_empty() {
        return Err(Error::Format("embedding file has no rows".into()));
    }
    Ok(out)
}

pub fn write_embeddings<W: Write>(writer: W, records: &[EmbeddingRecord]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let dim = records.first().map_or(0, |r| r.vector.len());
    let io = |e| Error::io("<embeddings>", e);
    writeln!(w, "dim={dim}").map_err(io)?;
    let mut csv = csv::WriterBuilder::new().flexible(true).from_writer(w);
    for r in records {
        let mut row = Vec::with_capacity(r.vector.len() + 1);
        row.push(r.image_id.clone());
        row.extend(r.vector.iter().map(|v| format!("{v}")));
        csv.write_record(&row)?;
    }
    csv.flush().map_err(io)?;
    Ok(())
}

pub const TOY_GRID: usize = 8;
pub const TOY_HUE_BINS: usize = 32;
pub const TOY_DIM: usize = TOY_GRID * TOY_GRID + TOY_HUE_BINS;

/// 96-dimensional stand-in embedding: 8×8 mean-pooled grayscale blocks scaled
/// to `[0, 1]`, followed by a 32-bin hue histogram of pixel fractions.
/// Achromatic pixels land in hue bin 0.
pub fn toy_embed(img: &RgbImage) -> Result<Vec<f64>> {
    let gray = to_grayscale(img)?;
    let (w, h) = (gray.width(), gray.height());
    let span = |i: usize, n: usize| {
        let start = i * n / TOY_GRID;
        let end = ((i + 1) * n / TOY_GRID).max(start + 1).min(n);
        (start.min(n - 1), end)
    };
    let mut v = Vec::with_capacity(TOY_DIM);
    for by in 0..TOY_GRID {
        let (y0, y1) = span(by, h);
        for bx in 0..TOY_GRID {
            let (x0, x1) = span(bx, w);
            let mut sum = 0u64;
            for y in y0..y1 {
                for x in x0..x1 {
                    sum += gray.get(x, y) as u64;
                }
            }
            let count = ((y1 - y0) * (x1 - x0)) as f64;
            v.push(sum as f64 / count / 255.0);
        }
    }
    let mut hist = [0usize; TOY_HUE_BINS];
    for p in img.pixels() {
        let hue = rgb_to_hsv(p.0).hue;
        let bin = ((hue / 360.0 * TOY_HUE_BINS as f64) as usize).min(TOY_HUE_BINS - 1);
        hist[bin] += 1;
    }
    let n = (w * h) as f64;
    v.extend(hist.iter().map(|c| *c as f64 / n));
    Ok(v)
}

/// Whether PCA is fit once over all categories or separately per category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaScope {
    #[default]
    Pooled,
    PerCategory,
}

/// The fitted reduction(s) used for `pca_<category>_<j>` features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryPca {
    pub scope: PcaScope,
    pub pooled: Option<PcaModel>,
    pub per_category: BTreeMap<Category, PcaModel>,
}

impl CategoryPca {
    pub fn model_for(&self, category: Category) -> Option<&PcaModel> {
        match self.scope {
            PcaScope::Pooled => self.pooled.as_ref(),
            PcaScope::PerCategory => self.per_category.get(&category),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(f), self)?;
        Ok(())
    }
}

fn featured_category(asset: &ImageAsset) -> Option<Category> {
    match (asset.image_type, asset.category) {
        (ImageType::Indoor, Some(c)) if c != Category::Other => Some(c),
        _ => None,
    }
}

/// Fits the reduction on the embeddings of categorized indoor images.
/// Categories with fewer than two embedded images get no per-category model.
pub fn fit_category_pca<'a>(
    assets: impl IntoIterator<Item = &'a ImageAsset>,
    index: &EmbeddingIndex,
    scope: PcaScope,
    target: PcaTarget,
) -> Result<CategoryPca> {
    let mut groups: BTreeMap<Category, Vec<Vec<f64>>> = BTreeMap::new();
    for a in assets {
        if let (Some(c), Some(v)) = (featured_category(a), index.get(a.image_id())) {
            groups.entry(c).or_default().push(v.to_vec());
        }
    }
    let mut out = CategoryPca {
        scope,
        pooled: None,
        per_category: BTreeMap::new(),
    };
    match scope {
        PcaScope::Pooled => {
            let rows: Vec<Vec<f64>> = groups.into_values().flatten().collect();
            if rows.len() >= 2 {
                out.pooled = Some(pca_fit(&rows, target)?);
            }
        }
        PcaScope::PerCategory => {
            for (c, rows) in groups {
                if rows.len() >= 2 {
                    out.per_category.insert(c, pca_fit(&rows, target)?);
                }
            }
        }
    }
    Ok(out)
}

/// Mean component scores of a listing's images in `category`; `None` if it has none.
pub fn category_average(
    listing_assets: &[ImageAsset],
    index: &EmbeddingIndex,
    model: &PcaModel,
    category: Category,
) -> Result<Option<Vec<f64>>> {
    let mut scores: Vec<Vec<f64>> = Vec::new();
    for a in listing_assets.iter().filter(|a| featured_category(a) == Some(category)) {
        if let Some(v) = index.get(a.image_id()) {
            scores.push(model.transform(v)?);
        }
    }
    if scores.is_empty() {
        return Ok(None);
    }
    let k = model.n_components();
    Ok(Some(
        (0..k)
            .map(|j| {
                let mut col: Vec<f64> = scores.iter().map(|s| s[j]).collect();
                crate::table::order_free_mean(&mut col)
            })
            .collect(),
    ))
}

/// `cat_<category>` image counts for the six featured categories.
pub fn category_counts(listing_assets: &[ImageAsset]) -> Vec<(String, f64)> {
    Category::FEATURED
        .iter()
        .map(|c| {
            let n = listing_assets
                .iter()
                .filter(|a| featured_category(a) == Some(*c))
                .count();
            (format!("cat_{c}"), n as f64)
        })
        .collect()
}

pub fn deep_feature_names(n_emit: usize) -> Vec<String> {
    let mut names: Vec<String> = Category::FEATURED.iter().map(|c| format!("cat_{c}")).collect();
    for c in Category::FEATURED {
        names.extend((1..=n_emit).map(|j| format!("pca_{c}_{j}")));
    }
    names
}

/// Category counts plus the first `n_emit` averaged scores per category.
pub fn listing_deep_features(
    listing_assets: &[ImageAsset],
    index: &EmbeddingIndex,
    pca: &CategoryPca,
    n_emit: usize,
) -> Result<Vec<(String, Cell)>> {
    let mut out: Vec<(String, Cell)> = category_counts(listing_assets)
        .into_iter()
        .map(|(n, v)| (n, Some(v)))
        .collect();
    for c in Category::FEATURED {
        let avg = match pca.model_for(c) {
            Some(m) => category_average(listing_assets, index, m, c)?,
            None => None,
        };
        for j in 1..=n_emit {
            let v = avg.as_ref().and_then(|s| s.get(j - 1).copied());
            out.push((format!("pca_{c}_{j}"), v));
        }
    }
    Ok(out)
}
