//! Local entropy map of one image, with regional averages and the center of gravity.
//!
//!     cargo run --example entropy_map -- [IMAGE] [OUT.png]
//!
//! Without arguments a test card is generated: flat on the left, noisy on the right.

use estate_vision::entropy::{
    center_of_gravity, global_avg_entropy, local_entropy_map, max_entropy, regional_avg_entropy, to_grayscale,
    DEFAULT_WINDOW,
};
use estate_vision::raster::load_rgb;
use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};

fn test_card() -> RgbImage {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    RgbImage::from_fn(256, 192, |x, _| {
        if x < 128 {
            Rgb([90, 90, 90])
        } else {
            let v = rng.random::<u8>();
            Rgb([v, v, v])
        }
    })
}

fn main() -> estate_vision::Result<()> {
    let mut args = std::env::args().skip(1);
    let img = match args.next() {
        Some(path) => load_rgb(path)?,
        None => test_card(),
    };
    let out = args.next().unwrap_or_else(|| "entropy_map.png".into());

    let start = std::time::Instant::now();
    let map = local_entropy_map(&to_grayscale(&img)?, DEFAULT_WINDOW)?;
    println!(
        "{}x{} map in {:.1?}, max possible {:.4} bits",
        map.width(),
        map.height(),
        start.elapsed(),
        max_entropy(DEFAULT_WINDOW)
    );
    println!("global average {:.4}", global_avg_entropy(&map));
    for (region, v) in regional_avg_entropy(&map)?.named() {
        println!("  {region:>2} {v:.4}");
    }
    let cg = center_of_gravity(&map);
    println!(
        "CG ({:.1}, {:.1}), normalized distance {:.4}",
        cg.x, cg.y, cg.distance_norm
    );
    map.save_png(&out)?;
    println!("wrote {out}");
    Ok(())
}
