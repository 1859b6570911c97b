//! Image manifest: which image files belong to which listing.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::listing::RowError;

pub const MANIFEST_COLUMNS: [&str; 5] = ["listing_id", "path", "image_type", "category", "zoom"];

pub const MIN_ZOOM: u8 = 15;
pub const MAX_ZOOM: u8 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageType {
    Indoor,
    Outdoor,
    Satellite,
}

impl ImageType {
    pub const ALL: [ImageType; 3] = [ImageType::Indoor, ImageType::Outdoor, ImageType::Satellite];

    /// Short tag used in feature names (`ENT_ind_c`, `CG_sat_x_z20`, ...).
    pub fn tag(self) -> &'static str {
        match self {
            ImageType::Indoor => "ind",
            ImageType::Outdoor => "out",
            ImageType::Satellite => "sat",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ImageType::Indoor => "indoor",
            ImageType::Outdoor => "outdoor",
            ImageType::Satellite => "satellite",
        }
    }
}

impl fmt::Display for ImageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ImageType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "indoor" | "ind" => Ok(ImageType::Indoor),
            "outdoor" | "out" => Ok(ImageType::Outdoor),
            "satellite" | "sat" => Ok(ImageType::Satellite),
            other => Err(format!("unknown image_type {other:?}")),
        }
    }
}

/// Indoor room category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Kitchen,
    Bed,
    Bath,
    Living,
    Basement,
    Dinning,
    Other,
}

impl Category {
    /// Categories that produce `cat_` and `pca_` features. `Other` is excluded.
    pub const FEATURED: [Category; 6] = [
        Category::Kitchen,
        Category::Bed,
        Category::Bath,
        Category::Living,
        Category::Basement,
        Category::Dinning,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Kitchen => "kitchen",
            Category::Bed => "bed",
            Category::Bath => "bath",
            Category::Living => "living",
            Category::Basement => "basement",
            Category::Dinning => "dinning",
            Category::Other => "other",
        }
    }

    /// Maps a free-form label onto the vocabulary; unknown labels become `Other`.
    pub fn from_label(label: &str) -> Category {
        match label.trim().to_ascii_lowercase().replace([' ', '-'], "_").as_str() {
            "kitchen" => Category::Kitchen,
            "bed" | "bedroom" => Category::Bed,
            "bath" | "bathroom" => Category::Bath,
            "living" | "living_room" | "livingroom" => Category::Living,
            "basement" => Category::Basement,
            "dinning" | "dining" | "dining_room" | "dinning_room" => Category::Dinning,
            _ => Category::Other,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageAsset {
    pub listing_id: String,
    /// Path relative to the image root, exactly as written in the manifest.
    pub path: String,
    pub image_type: ImageType,
    pub category: Option<Category>,
    pub zoom: Option<u8>,
}

impl ImageAsset {
    /// Identifier used to join embeddings: the manifest path.
    pub fn image_id(&self) -> &str {
        &self.path
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TypeCounts {
    pub indoor: usize,
    pub outdoor: usize,
    pub satellite: usize,
}

impl TypeCounts {
    pub fn total(&self) -> usize {
        self.indoor + self.outdoor + self.satellite
    }

    fn bump(&mut self, t: ImageType) {
        match t {
            ImageType::Indoor => self.indoor += 1,
            ImageType::Outdoor => self.outdoor += 1,
            ImageType::Satellite => self.satellite += 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub root: PathBuf,
    by_listing: BTreeMap<String, Vec<ImageAsset>>,
    pub counts: TypeCounts,
}

impl Manifest {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Manifest {
            root: root.into(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, asset: ImageAsset) {
        self.counts.bump(asset.image_type);
        self.by_listing.entry(asset.listing_id.clone()).or_default().push(asset);
    }

    pub fn assets_for(&self, listing_id: &str) -> &[ImageAsset] {
        self.by_listing.get(listing_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn listings(&self) -> impl Iterator<Item = (&str, &[ImageAsset])> {
        self.by_listing.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn assets(&self) -> impl Iterator<Item = &ImageAsset> {
        self.by_listing.values().flatten()
    }

    pub fn resolve(&self, asset: &ImageAsset) -> PathBuf {
        self.root.join(&asset.path)
    }

    pub fn len(&self) -> usize {
        self.counts.total()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Default)]
pub struct ManifestLoad {
    pub manifest: Manifest,
    pub errors: Vec<RowError>,
}

pub fn load_manifest(manifest_file: impl AsRef<Path>, image_root: impl AsRef<Path>) -> Result<ManifestLoad> {
    let path = manifest_file.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(file, image_root.as_ref(), true)
}

/// Reads manifest rows one at a time. With `check_paths`, rows whose file does
/// not exist under `image_root` are reported instead of loaded.
pub fn parse_manifest<R: Read>(reader: R, image_root: &Path, check_paths: bool) -> Result<ManifestLoad> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index = [0usize; 5];
    for (slot, name) in index.iter_mut().zip(MANIFEST_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Schema(format!("missing column {name}")))?;
    }

    let mut out = ManifestLoad {
        manifest: Manifest::new(image_root),
        errors: Vec::new(),
    };
    let mut row = csv::StringRecord::new();
    while rdr.read_record(&mut row)? {
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let cell = |i: usize| row.get(index[i]).unwrap_or("");
        match parse_asset(cell(0), cell(1), cell(2), cell(3), cell(4)) {
            Ok(asset) => {
                if check_paths && !image_root.join(&asset.path).is_file() {
                    out.errors.push(RowError {
                        line,
                        message: format!("asset error: dangling path {}", asset.path),
                    });
                } else {
                    out.manifest.push(asset);
                }
            }
            Err(message) => out.errors.push(RowError { line, message }),
        }
    }
    Ok(out)
}

fn parse_asset(
    listing_id: &str,
    path: &str,
    image_type: &str,
    category: &str,
    zoom: &str,
) -> std::result::Result<ImageAsset, String> {
    if listing_id.is_empty() {
        return Err("schema error: empty listing_id".into());
    }
    if path.is_empty() {
        return Err("schema error: empty path".into());
    }
    let image_type: ImageType = image_type.parse().map_err(|e| format!("schema error: {e}"))?;
    let category = (!category.is_empty()).then(|| Category::from_label(category));
    let zoom = if zoom.is_empty() {
        None
    } else {
        let z: u8 = zoom
            .parse()
            .map_err(|_| format!("schema error: zoom not an integer: {zoom:?}"))?;
        Some(z)
    };

    if category.is_some() && image_type != ImageType::Indoor {
        return Err(format!("schema error: category on {image_type} image"));
    }
    match (image_type, zoom) {
        (ImageType::Satellite, None) => return Err("schema error: satellite image without zoom".into()),
        (ImageType::Satellite, Some(z)) if !(MIN_ZOOM..=MAX_ZOOM).contains(&z) => {
            return Err(format!("schema error: zoom {z} outside [{MIN_ZOOM}, {MAX_ZOOM}]"))
        }
        (t, Some(_)) if t != ImageType::Satellite => return Err(format!("schema error: zoom on {t} image")),
        _ => {}
    }
    Ok(ImageAsset {
        listing_id: listing_id.to_string(),
        path: path.to_string(),
        image_type,
        category,
        zoom,
    })
}

pub fn write_manifest<'a, W: Write>(writer: W, assets: impl IntoIterator<Item = &'a ImageAsset>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(MANIFEST_COLUMNS)?;
    for a in assets {
        w.write_record([
            a.listing_id.as_str(),
            a.path.as_str(),
            a.image_type.as_str(),
            a.category.map(Category::as_str).unwrap_or(""),
            &a.zoom.map(|z| z.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<manifest>", e))?;
    Ok(())
}
