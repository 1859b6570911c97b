//! HSV conversion, k-means dominant-color palettes and green-mask segmentation.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{ImageAsset, ImageType};
use crate::table::order_free_mean;

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
/// Achromatic pixels carry hue 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsvPixel {
    pub hue: f64,
    pub saturation: f64,
    pub value: f64,
}

impl HsvPixel {
    /// Planar embedding `(s·cos h, s·sin h, v)` that removes the 0/360 seam.
    pub fn embed(&self) -> [f64; 3] {
        let (sin, cos) = self.hue.to_radians().sin_cos();
        [self.saturation * cos, self.saturation * sin, self.value]
    }

    pub fn from_embedding(p: [f64; 3]) -> HsvPixel {
        let saturation = p[0].hypot(p[1]).clamp(0.0, 1.0);
        let hue = if saturation > 1e-12 {
            p[1].atan2(p[0]).to_degrees().rem_euclid(360.0)
        } else {
            0.0
        };
        HsvPixel {
            hue: if hue >= 360.0 { 0.0 } else { hue },
            saturation,
            value: p[2].clamp(0.0, 1.0),
        }
    }
}

pub fn rgb_to_hsv(rgb: [u8; 3]) -> HsvPixel {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let saturation = if max == 0.0 { 0.0 } else { delta / max };
    HsvPixel {
        hue: if hue >= 360.0 { hue - 360.0 } else { hue },
        saturation,
        value: max,
    }
}

/// One band of colors counted as vegetation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenRange {
    pub hue_min: f64,
    pub hue_max: f64,
    pub min_saturation: f64,
    pub min_value: f64,
}

impl GreenRange {
    pub fn contains(&self, p: &HsvPixel) -> bool {
        p.hue >= self.hue_min
            && p.hue <= self.hue_max
            && p.saturation >= self.min_saturation
            && p.value >= self.min_value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenMaskSpec {
    pub ranges: Vec<GreenRange>,
}

impl Default for GreenMaskSpec {
    fn default() -> Self {
        GreenMaskSpec {
            ranges: vec![GreenRange {
                hue_min: 60.0,
                hue_max: 170.0,
                min_saturation: 0.2,
                min_value: 0.15,
            }],
        }
    }
}

impl GreenMaskSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ranges.is_empty() {
            return Err(Error::parameter("green mask spec has no ranges"));
        }
        for r in &self.ranges {
            let hue_ok =
                (0.0..360.0).contains(&r.hue_min) && (0.0..360.0).contains(&r.hue_max) && r.hue_min <= r.hue_max;
            let thr_ok = (0.0..=1.0).contains(&r.min_saturation) && (0.0..=1.0).contains(&r.min_value);
            if !hue_ok || !thr_ok {
                return Err(Error::parameter(format!("invalid green range {r:?}")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &HsvPixel) -> bool {
        self.ranges.iter().any(|r| r.contains(p))
    }
}

/// Share of pixels whose HSV color falls in any range of `spec`.
pub fn green_fraction(img: &RgbImage, spec: &GreenMaskSpec) -> Result<f64> {
    spec.validate()?;
    let n = img.width() as usize * img.height() as usize;
    if n == 0 {
        return Err(Error::domain("empty image"));
    }
    let hits = img.pixels().filter(|p| spec.contains(&rgb_to_hsv(p.0))).count();
    Ok(hits as f64 / n as f64)
}

/// Keeps pixels inside the mask and paints the rest black.
pub fn apply_mask(img: &RgbImage, spec: &GreenMaskSpec) -> RgbImage {
    let mut out = img.clone();
    for p in out.pixels_mut() {
        if !spec.contains(&rgb_to_hsv(p.0)) {
            *p = Rgb([0, 0, 0]);
        }
    }
    out
}

/// k-means++ seeding in the embedded HSV space.
pub fn kmeans_init(points: &[[f64; 3]], k: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    if k == 0 {
        return Err(Error::parameter("k must be at least 1"));
    }
    if k > points.len() {
        return Err(Error::parameter(format!(
            "k = {k} exceeds sample size {}",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[idx];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    Ok(centroids)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<[f64; 3]>,
    pub assignments: Vec<usize>,
    /// Within-cluster SSE after every assignment step, ending with the final one.
    pub sse_history: Vec<f64>,
}

impl KMeansFit {
    pub fn sse(&self) -> f64 {
        *self.sse_history.last().expect("at least one assignment step")
    }
}

pub const KMEANS_MAX_ITER: usize = 100;
pub const KMEANS_TOL: f64 = 1e-6;

/// Lloyd iterations from the given centroids until the largest centroid shift
/// is below `tol` or `max_iter` updates have run. Empty clusters keep their centroid.
pub fn lloyd(points: &[[f64; 3]], init: Vec<[f64; 3]>, max_iter: usize, tol: f64) -> KMeansFit {
    let k = init.len();
    let mut centroids = init;
    let mut assignments = vec![0usize; points.len()];
    let mut sse_history = Vec::new();
    for _ in 0..max_iter {
        sse_history.push(assign(points, &centroids, &mut assignments));
        let mut sums = vec![[0.0f64; 3]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for d in 0..3 {
                sums[a][d] += p[d];
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let next = sums[c].map(|s| s / counts[c] as f64);
            shift = shift.max(dist2(&next, &centroids[c]).sqrt());
            centroids[c] = next;
        }
        if shift < tol {
            break;
        }
    }
    sse_history.push(assign(points, &centroids, &mut assignments));
    KMeansFit {
        centroids,
        assignments,
        sse_history,
    }
}

fn assign(points: &[[f64; 3]], centroids: &[[f64; 3]], out: &mut [usize]) -> f64 {
    let mut sse = 0.0;
    for (p, a) in points.iter().zip(out.iter_mut()) {
        let (best, d) = centroids
            .iter()
            .enumerate()
            .map(|(i, c)| (i, dist2(p, c)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        *a = best;
        sse += d;
    }
    sse
}

#[inline]
fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorPalette {
    /// Cluster centers ordered by descending population.
    pub centroids: Vec<HsvPixel>,
    pub counts: Vec<usize>,
    pub seed: u64,
    pub sse: f64,
}

pub fn kmeans_palette(pixels: &[HsvPixel], k: usize, seed: u64) -> Result<ColorPalette> {
    let points: Vec<[f64; 3]> = pixels.iter().map(HsvPixel::embed).collect();
    let init = kmeans_init(&points, k, seed)?;
    let fit = lloyd(&points, init, KMEANS_MAX_ITER, KMEANS_TOL);
    let mut counts = vec![0usize; k];
    for &a in &fit.assignments {
        counts[a] += 1;
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|a, b| counts[*b].cmp(&counts[*a]).then(a.cmp(b)));
    Ok(ColorPalette {
        centroids: order
            .iter()
            .map(|&i| HsvPixel::from_embedding(fit.centroids[i]))
            .collect(),
        counts: order.iter().map(|&i| counts[i]).collect(),
        seed,
        sse: fit.sse(),
    })
}

pub const DEFAULT_PALETTE_K: usize = 8;
pub const MAX_PALETTE_PIXELS: usize = 20_000;

/// HSV pixels of an image, taking every `ceil(n / max_pixels)`-th pixel.
pub fn sample_pixels(img: &RgbImage, max_pixels: usize) -> Vec<HsvPixel> {
    let n = img.width() as usize * img.height() as usize;
    let stride = n.div_ceil(max_pixels.max(1)).max(1);
    img.pixels().step_by(stride).map(|p| rgb_to_hsv(p.0)).collect()
}

/// Palette of one image with the default subsampling.
pub fn image_palette(img: &RgbImage, k: usize, seed: u64) -> Result<ColorPalette> {
    let pixels = sample_pixels(img, MAX_PALETTE_PIXELS);
    kmeans_palette(&pixels, k.min(pixels.len()), seed)
}

/// How palette centroids become mask ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskDerivation {
    /// Hue band in which a centroid counts as green.
    pub green_band: (f64, f64),
    /// Half-width of the hue interval grown around each green centroid.
    pub margin: f64,
    pub min_saturation: f64,
    pub min_value: f64,
}

impl Default for MaskDerivation {
    fn default() -> Self {
        MaskDerivation {
            green_band: (60.0, 170.0),
            margin: 20.0,
            min_saturation: 0.2,
            min_value: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedMasks {
    pub spec: GreenMaskSpec,
    /// True when no green centroid was found and the default spec was returned.
    pub fell_back: bool,
}

const HUE_CEIL: f64 = 360.0 - 1e-9;

/// Grows a hue interval around every green palette centroid and merges overlaps.
pub fn derive_masks(palettes: &[ColorPalette], cfg: &MaskDerivation) -> Result<DerivedMasks> {
    if palettes.is_empty() {
        return Err(Error::parameter("no palettes to derive masks from"));
    }
    let mut intervals: Vec<(f64, f64)> = palettes
        .iter()
        .flat_map(|p| p.centroids.iter())
        .filter(|c| {
            c.hue >= cfg.green_band.0
                && c.hue <= cfg.green_band.1
                && c.saturation >= cfg.min_saturation
                && c.value >= cfg.min_value
        })
        .map(|c| ((c.hue - cfg.margin).max(0.0), (c.hue + cfg.margin).min(HUE_CEIL)))
        .collect();
    if intervals.is_empty() {
        log::warn!("no green palette centroids; using the default green mask");
        return Ok(DerivedMasks {
            spec: GreenMaskSpec::default(),
            fell_back: true,
        });
    }
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    Ok(DerivedMasks {
        spec: GreenMaskSpec {
            ranges: merged
                .into_iter()
                .map(|(hue_min, hue_max)| GreenRange {
                    hue_min,
                    hue_max,
                    min_saturation: cfg.min_saturation,
                    min_value: cfg.min_value,
                })
                .collect(),
        },
        fell_back: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Greenness {
    /// Mean green fraction over outdoor images.
    pub green_mask: Option<f64>,
    /// Mean green fraction over satellite images at the chosen zoom.
    pub green_sat: Option<f64>,
}

/// Aggregates per-image green fractions of one listing.
pub fn listing_greenness<'a>(scored: impl IntoIterator<Item = (&'a ImageAsset, f64)>, sat_zoom: u8) -> Greenness {
    let mut outdoor = Vec::new();
    let mut sat = Vec::new();
    for (asset, f) in scored {
        match asset.image_type {
            ImageType::Outdoor => outdoor.push(f),
            ImageType::Satellite if asset.zoom == Some(sat_zoom) => sat.push(f),
            _ => {}
        }
    }
    let mean = |v: &mut Vec<f64>| (!v.is_empty()).then(|| order_free_mean(v));
    Greenness {
        green_mask: mean(&mut outdoor),
        green_sat: mean(&mut sat),
    }
}
