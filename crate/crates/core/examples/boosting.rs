//! Gradient-boosted trees on a nonlinear target: stage-wise training error,
//! gain importance and top-n selection.
//!
//!     cargo run --release --example boosting

use estate_vision::gbdt::{gbdt_fit, select_top_n, GbdtPreset};
use estate_vision::table::DesignMatrix;
use rand::{Rng, SeedableRng};

fn main() -> estate_vision::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let names: Vec<String> = (0..8).map(|i| format!("x{i}")).collect();
    let rows: Vec<Vec<f64>> = (0..800)
        .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    // only x0, x1 and x2 matter
    let y: Vec<f64> = rows
        .iter()
        .map(|r| (3.0 * r[0]).sin() + if r[1] > 0.2 { 1.0 } else { 0.0 } * r[2] + 0.05 * rng.random::<f64>())
        .collect();
    let x = DesignMatrix::from_rows(names, &rows)?;

    for preset in [GbdtPreset::Xgb, GbdtPreset::Lgb, GbdtPreset::Cat] {
        let m = gbdt_fit(&x, &y, &preset.params(1))?;
        let mse = &m.stage_train_mse;
        println!(
            "{:>3}: {} trees, train MSE {:.4} -> {:.4}",
            preset.as_str(),
            m.trees.len(),
            mse[0],
            mse[mse.len() - 1]
        );
        if preset == GbdtPreset::Lgb {
            for (name, gain) in m.feature_importance() {
                println!("     {name} {:.3}", gain / m.total_gain);
            }
            println!("     top 3: {:?}", select_top_n(&m.feature_importance(), 3)?);
        }
    }
    Ok(())
}
