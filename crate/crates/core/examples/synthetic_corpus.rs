//! Writes a procedural corpus and a matching `estate.toml`, ready for the CLI:
//!
//!     cargo run --example synthetic_corpus -- demo 500
//!     estate-vision --config demo/estate.toml embed
//!     estate-vision --config demo/estate.toml extract

use std::path::PathBuf;

use estate_vision::synthetic::{generate_corpus, SyntheticConfig};

fn main() -> estate_vision::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "demo".into()));
    let n_listings = args.next().and_then(|n| n.parse().ok()).unwrap_or(500);
    let corpus = generate_corpus(
        &dir,
        &SyntheticConfig {
            n_listings,
            ..Default::default()
        },
    )?;
    let mut cfg = corpus.config(dir.join("out"), 7);
    // keep the written config relative to its own directory
    cfg.paths.listings = "listings.csv".into();
    cfg.paths.manifest = "manifest.csv".into();
    cfg.paths.image_root = ".".into();
    cfg.paths.embeddings = Some("out/embeddings.csv".into());
    cfg.paths.out = "out".into();
    let path = dir.join("estate.toml");
    std::fs::write(&path, cfg.to_toml()?).map_err(|e| estate_vision::Error::io(&path, e))?;
    println!(
        "{} listings, {} images, config at {}",
        n_listings,
        corpus.n_images,
        path.display()
    );
    Ok(())
}
