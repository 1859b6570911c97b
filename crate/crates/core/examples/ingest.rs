//! Loads a listing CSV and an image manifest and reports rejected rows.
//!
//!     cargo run --example ingest -- LISTINGS.csv MANIFEST.csv IMAGE_ROOT

use estate_vision::listing::load_listings;
use estate_vision::manifest::load_manifest;

fn main() -> estate_vision::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() != 3 {
        eprintln!("usage: ingest LISTINGS.csv MANIFEST.csv IMAGE_ROOT");
        std::process::exit(2);
    }
    let listings = load_listings(&args[0])?;
    println!(
        "{} listings, {} rejected rows",
        listings.records.len(),
        listings.errors.len()
    );
    for e in listings.errors.iter().take(10) {
        println!("  {e}");
    }
    let m = load_manifest(&args[1], &args[2])?;
    let c = m.manifest.counts;
    println!(
        "{} images ({} indoor, {} outdoor, {} satellite), {} rejected rows",
        c.total(),
        c.indoor,
        c.outdoor,
        c.satellite,
        m.errors.len()
    );
    for e in m.errors.iter().take(10) {
        println!("  {e}");
    }
    Ok(())
}
