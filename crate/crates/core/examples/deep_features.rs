//! Embeddings to listing features: PCA over categorized indoor images, then
//! per-category averages of the leading components and image counts.
//!
//!     cargo run --example deep_features

use estate_vision::deep::{
    fit_category_pca, listing_deep_features, toy_embed, EmbeddingIndex, EmbeddingRecord, PcaScope, PcaTarget,
};
use estate_vision::manifest::{Category, ImageAsset, ImageType};
use image::{Rgb, RgbImage};

fn room(brightness: u8, tint: [u8; 3]) -> RgbImage {
    RgbImage::from_fn(32, 32, |x, _| if x < 16 { Rgb([brightness; 3]) } else { Rgb(tint) })
}

fn main() -> estate_vision::Result<()> {
    let mut assets = Vec::new();
    let mut records = Vec::new();
    for l in 0..12u8 {
        for (j, cat) in [Category::Kitchen, Category::Bed, Category::Bath]
            .into_iter()
            .enumerate()
        {
            let asset = ImageAsset {
                listing_id: format!("L{l:02}"),
                path: format!("L{l:02}/{cat}.png"),
                image_type: ImageType::Indoor,
                category: Some(cat),
                zoom: None,
            };
            let img = room(40 + 15 * l, [200, 120 + 10 * j as u8, 60 + 12 * l]);
            records.push(EmbeddingRecord {
                image_id: asset.path.clone(),
                vector: toy_embed(&img)?,
            });
            assets.push(asset);
        }
    }
    let index = EmbeddingIndex::from_records(records)?;
    let pca = fit_category_pca(&assets, &index, PcaScope::Pooled, PcaTarget::default())?;
    let model = pca.pooled.as_ref().expect("enough images");
    println!(
        "{}-d embeddings -> {} components, explained ratio {:?}",
        index.dim(),
        model.n_components(),
        model
            .explained_variance_ratio
            .iter()
            .map(|r| (r * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>()
    );
    let first: Vec<ImageAsset> = assets.iter().filter(|a| a.listing_id == "L00").cloned().collect();
    for (name, v) in listing_deep_features(&first, &index, &pca, 2)? {
        match v {
            Some(v) => println!("  {name:<18} {v:.4}"),
            None => println!("  {name:<18} -"),
        }
    }
    Ok(())
}
