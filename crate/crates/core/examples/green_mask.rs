//! Dominant colors of a yard photo, a green mask derived from them, and the
//! resulting green fraction.
//!
//!     cargo run --example green_mask -- [IMAGE]

use estate_vision::color::{apply_mask, derive_masks, green_fraction, image_palette, GreenMaskSpec, MaskDerivation};
use estate_vision::raster::{load_rgb, save_rgb};
use image::{Rgb, RgbImage};

fn yard() -> RgbImage {
    RgbImage::from_fn(120, 90, |x, y| match (y < 25, (x / 10 + y / 10) % 3) {
        (true, _) => Rgb([150, 190, 235]),
        (false, 0) => Rgb([120, 110, 100]),
        _ => Rgb([50, 140, 60]),
    })
}

fn main() -> estate_vision::Result<()> {
    let img = match std::env::args().nth(1) {
        Some(p) => load_rgb(p)?,
        None => yard(),
    };
    let palette = image_palette(&img, 6, 42)?;
    println!("palette (hue°, sat, val, pixels):");
    for (c, n) in palette.centroids.iter().zip(&palette.counts) {
        println!("  {:6.1} {:.2} {:.2} {n}", c.hue, c.saturation, c.value);
    }
    let derived = derive_masks(&[palette], &MaskDerivation::default())?;
    for r in &derived.spec.ranges {
        println!("green hue range [{:.1}, {:.1}]", r.hue_min, r.hue_max);
    }
    println!("derived mask fraction {:.4}", green_fraction(&img, &derived.spec)?);
    println!(
        "default mask fraction {:.4}",
        green_fraction(&img, &GreenMaskSpec::default())?
    );
    save_rgb(&apply_mask(&img, &derived.spec), "green_mask.png")?;
    println!("wrote green_mask.png");
    Ok(())
}
