//! End to end on a generated corpus: embed, extract, fit, evaluate,
//! importance, select and the feature-combination experiment.
//!
//!     cargo run --release --example pipeline -- [WORKDIR] [N_LISTINGS]

use std::path::PathBuf;
use std::time::Instant;

use estate_vision::commands::run_pipeline;
use estate_vision::synthetic::{generate_corpus, SyntheticConfig};

fn main() -> estate_vision::Result<()> {
    let mut args = std::env::args().skip(1);
    let work = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("estate-vision-demo"));
    let n_listings = args.next().and_then(|n| n.parse().ok()).unwrap_or(500);

    let start = Instant::now();
    let corpus = generate_corpus(
        work.join("corpus"),
        &SyntheticConfig {
            n_listings,
            ..Default::default()
        },
    )?;
    println!(
        "generated {} listings, {} images in {:.1?}",
        n_listings,
        corpus.n_images,
        start.elapsed()
    );

    let cfg = corpus.config(work.join("out"), 7);
    let report = run_pipeline(&cfg)?;
    print!("{}", report.to_csv());
    println!(
        "artifacts in {} ({:.1?} total)",
        cfg.paths.out.display(),
        start.elapsed()
    );
    Ok(())
}
