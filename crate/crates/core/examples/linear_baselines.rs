//! OLS and ridge on a design with two nearly collinear columns.
//!
//!     cargo run --example linear_baselines

use estate_vision::linear::{ols_fit, ridge_fit, rss};
use estate_vision::table::DesignMatrix;
use rand::{Rng, SeedableRng};

fn main() -> estate_vision::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let rows: Vec<Vec<f64>> = (0..60)
        .map(|_| {
            let a: f64 = rng.random_range(0.0..10.0);
            vec![a, a + rng.random_range(-0.01..0.01), rng.random_range(0.0..5.0)]
        })
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| 2.0 + r[0] + 0.5 * r[2] + rng.random_range(-0.5..0.5))
        .collect();
    let x = DesignMatrix::from_rows(vec!["a".into(), "a_copy".into(), "b".into()], &rows)?;

    let ols = ols_fit(&x, &y)?;
    println!(
        "ols        b0 {:7.3}  beta {:?}  rss {:.4}",
        ols.intercept,
        rounded(&ols.coefficients),
        rss(&ols, &x, &y)?
    );
    for lambda in [1e-8, 1.0, 100.0] {
        let m = ridge_fit(&x, &y, lambda)?;
        println!(
            "ridge {lambda:<5} b0 {:7.3}  beta {:?}  rss {:.4}",
            m.intercept,
            rounded(&m.coefficients),
            rss(&m, &x, &y)?
        );
    }
    Ok(())
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().map(|c| (c * 1000.0).round() / 1000.0).collect()
}
