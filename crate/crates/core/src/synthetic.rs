//! Procedural listing corpus with a known ground truth.
//!
//! Log price depends on floor area, a per-zip effect, yard greenness and a
//! kitchen "style" that is only visible in kitchen photos. Days on market
//! follow threshold and interaction effects with a long right tail, which
//! trees capture and a linear model cannot.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::config::{Paths, RunConfig};
use crate::error::{Error, Result};
use crate::listing::{write_listings, ListingRecord};
use crate::manifest::{write_manifest, Category, ImageAsset, ImageType};
use crate::raster::save_rgb;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub n_listings: usize,
    /// Square image side in pixels.
    pub image_size: u32,
    pub seed: u64,
    /// Listings whose first outdoor image is written as an undecodable file.
    pub corrupt_listings: usize,
    /// Standard deviation of the log-price noise.
    pub price_noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_listings: 500,
            image_size: 64,
            seed: 1,
            corrupt_listings: 0,
            price_noise: 0.05,
        }
    }
}

/// Hidden per-listing factors used to generate the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ListingTruth {
    pub mls_num: String,
    pub greenness: f64,
    pub kitchen_style: f64,
    pub corrupt: bool,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub root: PathBuf,
    pub listings: PathBuf,
    pub manifest: PathBuf,
    pub truth: Vec<ListingTruth>,
    pub n_images: usize,
}

impl SyntheticCorpus {
    /// A run configuration over this corpus writing to `out`.
    pub fn config(&self, out: impl Into<PathBuf>, seed: u64) -> RunConfig {
        let out = out.into();
        let mut cfg = default_config(seed);
        cfg.paths = Paths {
            listings: self.listings.clone(),
            manifest: self.manifest.clone(),
            image_root: self.root.clone(),
            embeddings: Some(out.join("embeddings.csv")),
            out,
        };
        cfg.with_seed(seed)
    }
}

fn default_config(seed: u64) -> RunConfig {
    toml::from_str(&format!(
        "seed = {seed}\njobs = 4\n[paths]\nlistings = \"\"\nmanifest = \"\"\nimage_root = \"\"\nout = \"\"\n"
    ))
    .expect("static config parses")
}

const ZIPS: [(&str, f64); 8] = [
    ("60601", 0.25),
    ("60602", -0.10),
    ("60603", 0.05),
    ("60604", -0.20),
    ("60605", 0.15),
    ("60606", 0.00),
    ("60607", -0.05),
    ("60608", 0.30),
];

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let hp = (h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let to = |u: f64| ((u + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [to(r), to(g), to(b)]
}

fn gray(level: f64) -> [u8; 3] {
    let l = level.round().clamp(0.0, 255.0) as u8;
    [l, l, l]
}

/// Achromatic room with a vertical light gradient and mild texture.
fn room_image(size: u32, rng: &mut ChaCha8Rng) -> RgbImage {
    let base = 120.0 + rng.random_range(-8.0..8.0);
    RgbImage::from_fn(size, size, |_, y| {
        let t = y as f64 / size as f64;
        Rgb(gray(base + 30.0 * (0.5 - t) + rng.random_range(-6.0..6.0)))
    })
}

/// Kitchen whose left/right brightness contrast and cabinet hue encode `style`.
fn kitchen_image(size: u32, style: f64, rng: &mut ChaCha8Rng) -> RgbImage {
    let hue = if style >= 0.0 { 30.0 } else { 210.0 };
    let sat = 0.25 + 0.5 * style.abs();
    RgbImage::from_fn(size, size, |x, y| {
        let left = x < size / 2;
        let level = 128.0 + if left { 80.0 } else { -80.0 } * style;
        let cabinet = y > size / 2 && (x / 4) % 3 != 0;
        if cabinet {
            Rgb(hsv_to_rgb(hue, sat, (level / 255.0).clamp(0.15, 1.0)))
        } else {
            Rgb(gray(level + rng.random_range(-6.0..6.0)))
        }
    })
}

/// Yard photo: sky on top, then grass with probability `green`, else house/pavement.
fn outdoor_image(size: u32, green: f64, rng: &mut ChaCha8Rng) -> RgbImage {
    let horizon = size / 4;
    RgbImage::from_fn(size, size, |_, y| {
        if y < horizon {
            Rgb(hsv_to_rgb(210.0, 0.45, 0.9))
        } else if rng.random::<f64>() < green {
            Rgb(hsv_to_rgb(
                rng.random_range(105.0..125.0),
                rng.random_range(0.5..0.8),
                rng.random_range(0.35..0.7),
            ))
        } else if rng.random::<f64>() < 0.5 {
            Rgb(hsv_to_rgb(25.0, 0.35, rng.random_range(0.35..0.6)))
        } else {
            Rgb(gray(rng.random_range(90.0..150.0)))
        }
    })
}

/// Top-down tile: blocks of vegetation, roofs and roads; higher zoom gives bigger blocks.
fn satellite_image(size: u32, green: f64, zoom: u8, rng: &mut ChaCha8Rng) -> RgbImage {
    let block = 1u32 << (zoom.saturating_sub(15)).min(5);
    let cells = size.div_ceil(block);
    let kinds: Vec<u8> = (0..cells * cells)
        .map(|_| {
            if rng.random::<f64>() < green {
                0
            } else if rng.random::<f64>() < 0.6 {
                1
            } else {
                2
            }
        })
        .collect();
    RgbImage::from_fn(size, size, |x, y| {
        match kinds[((y / block) * cells + x / block) as usize] {
            0 => Rgb(hsv_to_rgb(115.0, 0.6, 0.45)),
            1 => Rgb(hsv_to_rgb(10.0, 0.4, 0.55)),
            _ => Rgb(gray(110.0)),
        }
    })
}

struct PlannedImage {
    asset: ImageAsset,
    kind: ImageKind,
    seed: u64,
}

enum ImageKind {
    Room,
    Kitchen(f64),
    Outdoor(f64),
    Satellite(f64, u8),
    Corrupt,
}

/// Writes `listings.csv`, `manifest.csv` and `images/` under `dir`.
pub fn generate_corpus(dir: impl AsRef<Path>, cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    if cfg.n_listings == 0 || cfg.image_size < 16 {
        return Err(Error::parameter(
            "corpus needs listings and images of at least 16 pixels",
        ));
    }
    let root = dir.as_ref().to_path_buf();
    let img_dir = root.join("images");
    fs::create_dir_all(&img_dir).map_err(|e| Error::io(&img_dir, e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.price_noise).map_err(|e| Error::parameter(e.to_string()))?;
    let dom_noise = Normal::new(0.0, 0.35).expect("valid sd");
    let mut records = Vec::with_capacity(cfg.n_listings);
    let mut truth = Vec::with_capacity(cfg.n_listings);
    let mut planned: Vec<PlannedImage> = Vec::new();

    for i in 0..cfg.n_listings {
        let mls = format!("S{:05}", i + 1);
        let (zip, zip_effect) = ZIPS[rng.random_range(0..ZIPS.len())];
        let sqft: f64 = rng.random_range(800.0f64..4000.0).round();
        let beds = ((sqft / 700.0).floor() as u32 + rng.random_range(0..2)).clamp(1, 6);
        let baths = (1.0 + (sqft / 1200.0).floor() + if rng.random::<bool>() { 0.5 } else { 0.0 }).min(4.5);
        let lotsize: f64 = (sqft * rng.random_range(1.5..4.0)).round();
        let age: u32 = rng.random_range(0..80);
        let garage = rng.random::<f64>() < 0.6;
        let greenness: f64 = rng.random_range(0.0..1.0);
        let neighborhood = (0.6 * greenness + 0.4 * rng.random::<f64>()).clamp(0.0, 1.0);
        let style: f64 = rng.random_range(-1.0..1.0);

        let log_price = 12.2 + 0.7 * (sqft / 2000.0).ln() + zip_effect - 0.002 * age as f64
            + 0.35 * (greenness - 0.5)
            + 0.25 * style
            + noise.sample(&mut rng);
        let slow: f64 = if sqft > 3000.0 && age > 40 { 1.3 } else { 0.0 }
            + if greenness < 0.25 { 1.0 } else { 0.0 }
            + if zip_effect > 0.1 { -0.8 } else { 0.0 }
            + if style < -0.5 { 0.7 } else { 0.0 };
        let dom = (2.6 + slow + dom_noise.sample(&mut rng)).exp().floor().max(0.0) as u32;

        records.push(ListingRecord {
            mls_num: mls.clone(),
            price: log_price.exp().round(),
            dom,
            zip: zip.to_string(),
            beds,
            baths,
            lotsize,
            sqft,
            garage,
            age,
        });
        let corrupt = i < cfg.corrupt_listings;
        truth.push(ListingTruth {
            mls_num: mls.clone(),
            greenness,
            kitchen_style: style,
            corrupt,
        });

        let mut push = |name: String, image_type, category, zoom, kind, rng: &mut ChaCha8Rng| {
            planned.push(PlannedImage {
                asset: ImageAsset {
                    listing_id: mls.clone(),
                    path: format!("images/{mls}_{name}.png"),
                    image_type,
                    category,
                    zoom,
                },
                kind,
                seed: rng.random(),
            });
        };
        let rooms = [
            (Category::Kitchen, 1, 2),
            (Category::Bed, 1, 3),
            (Category::Bath, 1, 2),
            (Category::Living, 0, 1),
            (Category::Basement, 0, 1),
            (Category::Dinning, 0, 1),
            (Category::Other, 0, 1),
        ];
        for (cat, lo, hi) in rooms {
            let n = rng.random_range(lo..=hi);
            for j in 0..n {
                let kind = if cat == Category::Kitchen {
                    ImageKind::Kitchen((style + rng.random_range(-0.1..0.1)).clamp(-1.0, 1.0))
                } else {
                    ImageKind::Room
                };
                push(format!("{cat}{j}"), ImageType::Indoor, Some(cat), None, kind, &mut rng);
            }
        }
        let n_out = rng.random_range(1..=2);
        for j in 0..n_out {
            let kind = if corrupt && j == 0 {
                ImageKind::Corrupt
            } else {
                ImageKind::Outdoor((greenness + rng.random_range(-0.05..0.05)).clamp(0.0, 1.0))
            };
            push(format!("out{j}"), ImageType::Outdoor, None, None, kind, &mut rng);
        }
        for zoom in [16u8, 18, 20] {
            push(
                format!("sat_z{zoom}"),
                ImageType::Satellite,
                None,
                Some(zoom),
                ImageKind::Satellite(neighborhood, zoom),
                &mut rng,
            );
        }
    }

    let size = cfg.image_size;
    planned.par_iter().try_for_each(|p| -> Result<()> {
        let path = root.join(&p.asset.path);
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let img = match p.kind {
            ImageKind::Room => room_image(size, &mut rng),
            ImageKind::Kitchen(s) => kitchen_image(size, s, &mut rng),
            ImageKind::Outdoor(g) => outdoor_image(size, g, &mut rng),
            ImageKind::Satellite(g, z) => satellite_image(size, g, z, &mut rng),
            ImageKind::Corrupt => {
                return fs::write(&path, b"not a png").map_err(|e| Error::io(&path, e));
            }
        };
        save_rgb(&img, &path)
    })?;

    let listings = root.join("listings.csv");
    let f = fs::File::create(&listings).map_err(|e| Error::io(&listings, e))?;
    write_listings(f, &records)?;
    let manifest = root.join("manifest.csv");
    let f = fs::File::create(&manifest).map_err(|e| Error::io(&manifest, e))?;
    write_manifest(f, planned.iter().map(|p| &p.asset))?;

    Ok(SyntheticCorpus {
        root,
        listings,
        manifest,
        truth,
        n_images: planned.len(),
    })
}
