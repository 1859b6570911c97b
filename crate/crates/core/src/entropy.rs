//! Local Shannon entropy maps and the entropy-weighted center of gravity.
//!
//! Each pixel's entropy is computed from the 256-bin grayscale histogram of the
//! `window × window` neighborhood around it. Coordinates outside the image are
//! clamped to the nearest edge pixel, so the map has the source dimensions.

use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{ImageAsset, ImageType};
use crate::raster;

pub const DEFAULT_WINDOW: usize = 9;

/// Region labels of the 3×3 grid, row by row.
pub const REGION_NAMES: [&str; 9] = ["tl", "tc", "tr", "ml", "c", "mr", "bl", "bc", "br"];

/// 8-bit single-channel image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::domain("image must be at least 1×1"));
        }
        if pixels.len() != width * height {
            return Err(Error::domain(format!(
                "expected {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Converts with the Rec. 601 luma weights, rounded to the nearest level.
pub fn to_grayscale(img: &RgbImage) -> Result<GrayImage> {
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::domain("zero-dimension image"));
    }
    let pixels = img
        .pixels()
        .map(|p| {
            let [r, g, b] = p.0;
            let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(w as usize, h as usize, pixels)
}

/// `H = -Σ p·log2(p)` with `0·log2(0) = 0`.
pub fn shannon_entropy(probabilities: &[f64]) -> Result<f64> {
    if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0)) {
        return Err(Error::domain(format!("negative or NaN probability {p}")));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("probabilities sum to {total}, not 1")));
    }
    let h: f64 = probabilities.iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum();
    Ok(h.max(0.0))
}

/// Per-pixel local entropy in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl EntropyMap {
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::domain("entropy map dimensions do not match values"));
        }
        Ok(EntropyMap { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Writes the map as an 8-bit PNG, scaling `log2(81)` bits to 255.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let scale = 255.0 / 81f64.log2();
        let buf = image::GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let v = self.get(x as usize, y as usize) * scale;
            image::Luma([v.round().clamp(0.0, 255.0) as u8])
        });
        raster::save_luma(&buf, path.as_ref())
    }
}

/// Maximum entropy any pixel can reach for a given window side.
pub fn max_entropy(window: usize) -> f64 {
    ((window * window).min(256) as f64).log2()
}

pub fn local_entropy_map(img: &GrayImage, window: usize) -> Result<EntropyMap> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::parameter(format!("window must be odd and >= 3, got {window}")));
    }
    let (w, h) = (img.width, img.height);
    let r = (window / 2) as isize;
    let area = window * window;
    let n = area as f64;
    // c·log2(c) for every count a bin can reach
    let clog: Vec<f64> = (0..=area)
        .map(|c| if c == 0 { 0.0 } else { c as f64 * (c as f64).log2() })
        .collect();
    let n_log_n = clog[area];
    let upper = max_entropy(window);
    let cx = |x: isize| x.clamp(0, w as isize - 1) as usize;
    let cy = |y: isize| y.clamp(0, h as isize - 1) as usize;

    let mut values = vec![0.0; w * h];
    let mut hist = [0u32; 256];
    let mut rows = Vec::with_capacity(window);
    for y in 0..h {
        rows.clear();
        rows.extend((-r..=r).map(|dy| cy(y as isize + dy)));
        hist.fill(0);
        for dx in -r..=r {
            let col = cx(dx);
            for &ry in &rows {
                hist[img.get(col, ry) as usize] += 1;
            }
        }
        let mut occupied = hist.iter().filter(|c| **c > 0).count();
        let mut s: f64 = hist.iter().map(|&c| clog[c as usize]).sum();
        for x in 0..w {
            if x > 0 {
                let out_col = cx(x as isize - 1 - r);
                let in_col = cx(x as isize + r);
                if out_col != in_col {
                    for &ry in &rows {
                        let b = img.get(out_col, ry) as usize;
                        let c = hist[b] as usize;
                        s += clog[c - 1] - clog[c];
                        hist[b] -= 1;
                        if c == 1 {
                            occupied -= 1;
                        }
                        let b = img.get(in_col, ry) as usize;
                        let c = hist[b] as usize;
                        s += clog[c + 1] - clog[c];
                        hist[b] += 1;
                        if c == 0 {
                            occupied += 1;
                        }
                    }
                }
            }
            values[y * w + x] = if occupied <= 1 {
                0.0
            } else {
                ((n_log_n - s) / n).clamp(0.0, upper)
            };
        }
    }
    Ok(EntropyMap {
        width: w,
        height: h,
        values,
    })
}

/// Mean of all map values.
pub fn global_avg_entropy(map: &EntropyMap) -> f64 {
    bounded_mean(map.values.iter().copied())
}

fn bounded_mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (mut lo, mut hi, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v;
        n += 1;
    }
    (sum / n as f64).clamp(lo, hi)
}

/// Means over the 3×3 grid, in [`REGION_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionalEntropy(pub [f64; 9]);

impl RegionalEntropy {
    pub fn named(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        REGION_NAMES.iter().copied().zip(self.0.iter().copied())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        REGION_NAMES.iter().position(|n| *n == name).map(|i| self.0[i])
    }
}

pub fn regional_avg_entropy(map: &EntropyMap) -> Result<RegionalEntropy> {
    let (w, h) = (map.width, map.height);
    if w < 3 || h < 3 {
        return Err(Error::domain(format!(
            "regional averages need at least 3×3, got {w}×{h}"
        )));
    }
    let mut out = [0.0; 9];
    for i in 0..3 {
        let (y0, y1) = (i * h / 3, (i + 1) * h / 3);
        for j in 0..3 {
            let (x0, x1) = (j * w / 3, (j + 1) * w / 3);
            let cells = (y0..y1).flat_map(|y| (x0..x1).map(move |x| (x, y)));
            out[i * 3 + j] = bounded_mean(cells.map(|(x, y)| map.get(x, y)));
        }
    }
    Ok(RegionalEntropy(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterOfGravity {
    pub x: f64,
    pub y: f64,
    /// Euclidean distance from the geometric center.
    pub distance_raw: f64,
    /// `distance_raw` over the center-to-corner distance.
    pub distance_norm: f64,
    /// Set when the map carries no entropy and the center was substituted.
    pub degenerate: bool,
}

pub fn center_of_gravity(map: &EntropyMap) -> CenterOfGravity {
    let (w, h) = (map.width, map.height);
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let mut col_sums = vec![0.0; w];
    let mut row_sums = vec![0.0; h];
    for y in 0..h {
        for x in 0..w {
            let e = map.get(x, y);
            col_sums[x] += e;
            row_sums[y] += e;
        }
    }
    let total: f64 = col_sums.iter().sum();
    if !(total > 0.0) {
        return CenterOfGravity {
            x: cx,
            y: cy,
            distance_raw: 0.0,
            distance_norm: 0.0,
            degenerate: true,
        };
    }
    let weighted = |sums: &[f64]| {
        let total: f64 = sums.iter().sum();
        sums.iter().enumerate().map(|(i, e)| e * i as f64).sum::<f64>() / total
    };
    let x = weighted(&col_sums).clamp(0.0, w as f64 - 1.0);
    let y = weighted(&row_sums).clamp(0.0, h as f64 - 1.0);
    let distance_raw = (x - cx).hypot(y - cy);
    let corner = cx.hypot(cy);
    let distance_norm = if corner > 0.0 {
        (distance_raw / corner).clamp(0.0, 1.0)
    } else {
        0.0
    };
    CenterOfGravity {
        x,
        y,
        distance_raw,
        distance_norm,
        degenerate: false,
    }
}

/// Feature-name prefix suffix for an asset: `ind`, `out`, or `sat` plus `_z<zoom>`.
fn name_parts(asset: &ImageAsset) -> Result<(&'static str, String)> {
    let suffix = match asset.image_type {
        ImageType::Satellite => {
            let z = asset
                .zoom
                .ok_or_else(|| Error::Schema(format!("satellite image {} has no zoom", asset.path)))?;
            format!("_z{z}")
        }
        _ => String::new(),
    };
    Ok((asset.image_type.tag(), suffix))
}

/// Column names produced by [`entropy_features`] for one image type (and zoom).
pub fn entropy_feature_names(image_type: ImageType, zoom: Option<u8>) -> Vec<String> {
    let tag = image_type.tag();
    let suffix = zoom.map(|z| format!("_z{z}")).unwrap_or_default();
    let mut names = vec![format!("ENT_{tag}_avg{suffix}")];
    names.extend(REGION_NAMES.iter().map(|r| format!("ENT_{tag}_{r}{suffix}")));
    names.extend(["x", "y", "dist"].iter().map(|p| format!("CG_{tag}_{p}{suffix}")));
    names
}

/// Global and regional entropy plus CG for one image, named
/// `ENT_<type>_<region>` and `CG_<type>_{x,y,dist}` (satellite names end in `_z<zoom>`).
pub fn entropy_features(asset: &ImageAsset, img: &RgbImage, window: usize) -> Result<Vec<(String, f64)>> {
    let (tag, suffix) = name_parts(asset)?;
    let gray = to_grayscale(img)?;
    let map = local_entropy_map(&gray, window)?;
    let regions = regional_avg_entropy(&map)?;
    let cg = center_of_gravity(&map);
    let mut out = Vec::with_capacity(13);
    out.push((format!("ENT_{tag}_avg{suffix}"), global_avg_entropy(&map)));
    for (name, v) in regions.named() {
        out.push((format!("ENT_{tag}_{name}{suffix}"), v));
    }
    out.push((format!("CG_{tag}_x{suffix}"), cg.x));
    out.push((format!("CG_{tag}_y{suffix}"), cg.y));
    out.push((format!("CG_{tag}_dist{suffix}"), cg.distance_norm));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent double loop: rebuilds the histogram for every pixel.
    fn brute_force(img: &GrayImage, window: usize) -> Vec<f64> {
        let (w, h) = (img.width() as isize, img.height() as isize);
        let r = window as isize / 2;
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let mut hist = [0usize; 256];
                for dy in -r..=r {
                    for dx in -r..=r {
                        let px = (x + dx).max(0).min(w - 1) as usize;
                        let py = (y + dy).max(0).min(h - 1) as usize;
                        hist[img.get(px, py) as usize] += 1;
                    }
                }
                let n = (window * window) as f64;
                let mut e = 0.0;
                for c in hist.iter().filter(|c| **c > 0) {
                    let p = *c as f64 / n;
                    e -= p * p.log2();
                }
                out.push(e);
            }
        }
        out
    }

    fn random_gray(rng: &mut impl Rng, w: usize, h: usize, levels: u32) -> GrayImage {
        let px = (0..w * h)
            .map(|_| (rng.random_range(0..levels) * (256 / levels)) as u8)
            .collect();
        GrayImage::new(w, h, px).unwrap()
    }

    #[test]
    fn shannon_anchors() {
        assert_eq!(shannon_entropy(&[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(shannon_entropy(&[1.0]).unwrap(), 0.0);
        let u = vec![1.0 / 81.0; 81];
        assert_abs_diff_eq!(shannon_entropy(&u).unwrap(), 81f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(81f64.log2(), 6.33985, epsilon = 1e-5);
        assert_eq!(shannon_entropy(&[0.0, 1.0]).unwrap(), 0.0);
        assert!(shannon_entropy(&[-0.1, 1.1]).is_err());
        assert!(shannon_entropy(&[0.5, 0.4]).is_err());
    }

    #[test]
    fn grayscale_formula() {
        let img = RgbImage::from_fn(2, 2, |x, _| {
            if x == 0 {
                image::Rgb([0, 255, 0])
            } else {
                image::Rgb([255, 255, 255])
            }
        });
        let g = to_grayscale(&img).unwrap();
        // 0.587 * 255 = 149.685
        assert_eq!(g.get(0, 0), 150);
        assert_eq!(g.get(1, 0), 255);
        let gray = RgbImage::from_pixel(3, 3, image::Rgb([128, 128, 128]));
        assert!(to_grayscale(&gray).unwrap().pixels().iter().all(|p| *p == 128));
        assert!(to_grayscale(&RgbImage::new(0, 4)).is_err());
    }

    #[test]
    fn window_must_be_odd() {
        let img = GrayImage::new(4, 4, vec![0; 16]).unwrap();
        assert!(matches!(local_entropy_map(&img, 8), Err(Error::Parameter(_))));
        assert!(matches!(local_entropy_map(&img, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn constant_image_zero_map() {
        let img = GrayImage::new(12, 7, vec![77; 84]).unwrap();
        let map = local_entropy_map(&img, 9).unwrap();
        assert!(map.values().iter().all(|v| *v == 0.0));
        assert_eq!((map.width(), map.height()), (12, 7));
    }

    #[test]
    fn distinct_window_hits_max() {
        let img = GrayImage::new(9, 9, (0..81).map(|i| (i * 3) as u8).collect()).unwrap();
        let map = local_entropy_map(&img, 9).unwrap();
        assert_abs_diff_eq!(map.get(4, 4), 81f64.log2(), epsilon = 1e-9);
    }

    #[test]
    fn matches_brute_force_16x16() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let img = random_gray(&mut rng, 16, 16, 256);
        let fast = local_entropy_map(&img, 9).unwrap();
        for (a, b) in fast.values().iter().zip(brute_force(&img, 9)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn global_and_regional_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vals: Vec<f64> = (0..35).map(|_| rng.random_range(0.0..6.0)).collect();
        let map = EntropyMap::from_values(5, 7, vals.clone()).unwrap();
        let oracle: f64 = vals.iter().sum::<f64>() / 35.0;
        assert_abs_diff_eq!(global_avg_entropy(&map), oracle, epsilon = 1e-12);

        let c = EntropyMap::from_values(4, 4, vec![0.1; 16]).unwrap();
        assert_eq!(global_avg_entropy(&c), 0.1);
        assert!(regional_avg_entropy(&c).unwrap().0.iter().all(|v| *v == 0.1));
        let z = EntropyMap::from_values(4, 4, vec![0.0; 16]).unwrap();
        assert_eq!(global_avg_entropy(&z), 0.0);
    }

    #[test]
    fn regional_quadrants_6x6() {
        // quadrant values 1,2 / 3,4
        let vals: Vec<f64> = (0..36)
            .map(|i| {
                let (x, y) = (i % 6, i / 6);
                match (x < 3, y < 3) {
                    (true, true) => 1.0,
                    (false, true) => 2.0,
                    (true, false) => 3.0,
                    (false, false) => 4.0,
                }
            })
            .collect();
        let map = EntropyMap::from_values(6, 6, vals.clone()).unwrap();
        let got = regional_avg_entropy(&map).unwrap();
        // explicit index-range oracle: bounds 0,2,4,6
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                let mut n = 0.0;
                for y in (2 * i)..(2 * i + 2) {
                    for x in (2 * j)..(2 * j + 2) {
                        s += vals[y * 6 + x];
                        n += 1.0;
                    }
                }
                assert_abs_diff_eq!(got.0[i * 3 + j], s / n, epsilon = 1e-12);
            }
        }
        assert_eq!(got.get("c"), Some(2.5));
        assert!(regional_avg_entropy(&EntropyMap::from_values(2, 5, vec![0.0; 10]).unwrap()).is_err());
    }

    #[test]
    fn cg_anchors() {
        let sym = EntropyMap::from_values(5, 7, vec![2.0; 35]).unwrap();
        let cg = center_of_gravity(&sym);
        assert!(cg.distance_norm <= 1e-9);
        assert_abs_diff_eq!(cg.x, 2.0);
        assert_abs_diff_eq!(cg.y, 3.0);

        let mut v = vec![0.0; 35];
        v[0] = 4.0;
        let corner = EntropyMap::from_values(5, 7, v).unwrap();
        let cg = center_of_gravity(&corner);
        assert_eq!((cg.x, cg.y), (0.0, 0.0));
        assert_abs_diff_eq!(cg.distance_norm, 1.0, epsilon = 1e-9);

        let zero = EntropyMap::from_values(5, 7, vec![0.0; 35]).unwrap();
        let cg = center_of_gravity(&zero);
        assert!(cg.degenerate);
        assert_eq!(cg.distance_norm, 0.0);
    }

    #[test]
    fn cg_matches_weighted_centroid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let vals: Vec<f64> = (0..35).map(|_| rng.random_range(0.0..6.0)).collect();
        let map = EntropyMap::from_values(5, 7, vals.clone()).unwrap();
        let cg = center_of_gravity(&map);
        let (mut sx, mut sy, mut s) = (0.0, 0.0, 0.0);
        for y in 0..7 {
            for x in 0..5 {
                let e = vals[y * 5 + x];
                sx += e * x as f64;
                sy += e * y as f64;
                s += e;
            }
        }
        assert_abs_diff_eq!(cg.x, sx / s, epsilon = 1e-9);
        assert_abs_diff_eq!(cg.y, sy / s, epsilon = 1e-9);
    }

    #[test]
    fn feature_names() {
        let img = RgbImage::from_fn(20, 20, |x, y| image::Rgb([(x * 12) as u8, (y * 12) as u8, 0]));
        let asset = ImageAsset {
            listing_id: "L".into(),
            path: "a.png".into(),
            image_type: ImageType::Indoor,
            category: None,
            zoom: None,
        };
        let f = entropy_features(&asset, &img, 9).unwrap();
        assert_eq!(f.iter().filter(|(n, _)| n.starts_with("ENT_ind_")).count(), 10);
        assert_eq!(f.iter().filter(|(n, _)| n.starts_with("CG_ind_")).count(), 3);
        let names: Vec<_> = f.iter().map(|(n, _)| n.clone()).collect();
        assert_eq!(names, entropy_feature_names(ImageType::Indoor, None));

        let sat = ImageAsset {
            image_type: ImageType::Satellite,
            zoom: Some(20),
            ..asset.clone()
        };
        let f = entropy_features(&sat, &img, 9).unwrap();
        assert!(f.iter().all(|(n, _)| n.ends_with("_z20")));
        assert!(f.iter().any(|(n, _)| n == "ENT_sat_c_z20"));
        let no_zoom = ImageAsset { zoom: None, ..sat };
        assert!(entropy_features(&no_zoom, &img, 9).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn oracle_equivalence(seed in any::<u64>(), w in 1usize..=32, h in 1usize..=32, levels in prop::sample::select(vec![2u32, 8, 64, 256])) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = random_gray(&mut rng, w, h, levels);
            let map = local_entropy_map(&img, 9).unwrap();
            let oracle = brute_force(&img, 9);
            for (a, b) in map.values().iter().zip(&oracle) {
                prop_assert!((a - b).abs() <= 1e-9);
                prop_assert!(*a >= 0.0 && *a <= 81f64.log2());
            }
        }

        #[test]
        fn bijective_relabeling_invariance(seed in any::<u64>(), w in 3usize..20, h in 3usize..20, shift in 1u8..=255) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = random_gray(&mut rng, w, h, 16);
            let relabeled = GrayImage::new(w, h, img.pixels().iter().map(|p| p.wrapping_add(shift) ^ 0x5a).collect()).unwrap();
            let a = local_entropy_map(&img, 5).unwrap();
            let b = local_entropy_map(&relabeled, 5).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }

        #[test]
        fn cg_properties(seed in any::<u64>(), w in 1usize..16, h in 1usize..16) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..w * h).map(|_| rng.random_range(0.0..6.0)).collect();
            let map = EntropyMap::from_values(w, h, vals.clone()).unwrap();
            let cg = center_of_gravity(&map);
            prop_assert!(cg.x >= 0.0 && cg.x <= (w - 1) as f64);
            prop_assert!(cg.y >= 0.0 && cg.y <= (h - 1) as f64);
            prop_assert!((0.0..=1.0).contains(&cg.distance_norm));
            let g = global_avg_entropy(&map);
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(g >= lo && g <= hi);

            // 180° rotation reflects the CG through the center
            let rotated: Vec<f64> = vals.iter().rev().copied().collect();
            let rc = center_of_gravity(&EntropyMap::from_values(w, h, rotated).unwrap());
            prop_assert!((rc.x - ((w - 1) as f64 - cg.x)).abs() <= 1e-9);
            prop_assert!((rc.y - ((h - 1) as f64 - cg.y)).abs() <= 1e-9);
            prop_assert!((rc.distance_norm - cg.distance_norm).abs() <= 1e-9);
        }
    }
}
