//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use estate_vision::color::{
    green_fraction, image_palette, kmeans_init, lloyd, GreenMaskSpec, KMEANS_MAX_ITER, KMEANS_TOL,
};
use estate_vision::commands::run_pipeline;
use estate_vision::deep::{pca_fit, PcaTarget};
use estate_vision::entropy::{center_of_gravity, local_entropy_map, shannon_entropy, EntropyMap, GrayImage};
use estate_vision::eval::{mae, r_squared};
use estate_vision::experiment::MetricReport;
use estate_vision::gbdt::{gbdt_fit, GbdtParams, Node};
use estate_vision::linear::{ols_fit, ridge_fit, rss};
use estate_vision::model::Target;
use estate_vision::synthetic::{generate_corpus, SyntheticConfig};
use estate_vision::table::DesignMatrix;
use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_gray(rng: &mut ChaCha8Rng, w: usize, h: usize, levels: u32) -> GrayImage {
    let px = (0..w * h).map(|_| rng.random_range(0..levels) as u8).collect();
    GrayImage::new(w, h, px).unwrap()
}

fn entropy_oracle_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let windows = [3, 5, 7, 9];
    let mut worst = 0.0f64;
    for i in 0..100 {
        let (w, h) = (rng.random_range(1..=32), rng.random_range(1..=32));
        let levels = if i % 2 == 0 { 256 } else { 6 };
        let img = random_gray(&mut rng, w, h, levels);
        let win = windows[i % windows.len()];
        let fast = local_entropy_map(&img, win).map_err(|e| e.to_string())?;
        let slow = common::brute_entropy(&img, win);
        for (a, b) in fast.values().iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    let big = random_gray(&mut rng, 1024, 1024, 256);
    let start = Instant::now();
    local_entropy_map(&big, 9).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(took <= Duration::from_secs(5), || {
        format!("1024x1024 map took {took:.2?}")
    })?;
    Ok(format!("max deviation {worst:.1e}, 1024x1024 in {took:.2?}"))
}

fn analytic_anchors() -> Outcome {
    let uniform = shannon_entropy(&[1.0 / 81.0; 81]).map_err(|e| e.to_string())?;
    ensure((uniform - 81f64.log2()).abs() <= 1e-9, || {
        format!("uniform 81: {uniform}")
    })?;
    ensure((uniform - 6.33985).abs() <= 1e-5, || format!("uniform 81: {uniform}"))?;

    // 81 distinct levels in one 9x9 window
    let img = GrayImage::new(9, 9, (0..81).map(|v| v as u8 * 3).collect()).unwrap();
    let center = local_entropy_map(&img, 9).unwrap().get(4, 4);
    ensure((center - 81f64.log2()).abs() <= 1e-9, || {
        format!("9x9 window center {center}")
    })?;

    let flat = local_entropy_map(&GrayImage::new(20, 15, vec![77; 300]).unwrap(), 9).unwrap();
    ensure(flat.values().iter().all(|v| *v == 0.0), || {
        "constant image gave nonzero entropy".into()
    })?;

    let (w, h) = (11, 7);
    let sym: Vec<f64> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64 - 5.0, (i / w) as f64 - 3.0);
            1.0 + x * x + y * y
        })
        .collect();
    let cg = center_of_gravity(&EntropyMap::from_values(w, h, sym).unwrap());
    ensure(cg.distance_norm <= 1e-9, || {
        format!("symmetric map distance_norm {}", cg.distance_norm)
    })?;

    let mut corner = vec![0.0; w * h];
    corner[w * h - 1] = 3.0;
    let cg = center_of_gravity(&EntropyMap::from_values(w, h, corner).unwrap());
    ensure((cg.distance_norm - 1.0).abs() <= 1e-9, || {
        format!("corner map distance_norm {}", cg.distance_norm)
    })?;
    Ok(format!("log2 81 = {uniform:.9}"))
}

fn segmentation_suite() -> Outcome {
    let spec = GreenMaskSpec::default();
    let green = RgbImage::from_pixel(16, 16, Rgb([40, 180, 50]));
    let gray = RgbImage::from_pixel(16, 16, Rgb([128, 128, 128]));
    let half = RgbImage::from_fn(16, 16, |x, _| {
        if x < 8 {
            Rgb([40, 180, 50])
        } else {
            Rgb([128, 128, 128])
        }
    });
    let fr = |img: &RgbImage| green_fraction(img, &spec).map_err(|e| e.to_string());
    let (g, a, h) = (fr(&green)?, fr(&gray)?, fr(&half)?);
    ensure(g == 1.0 && a == 0.0 && h == 0.5, || format!("fractions {g} {a} {h}"))?;

    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(20..200);
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.0..1.0),
                ]
            })
            .collect();
        let k = rng.random_range(2..9);
        let init = kmeans_init(&pts, k, seed).map_err(|e| e.to_string())?;
        let fit = lloyd(&pts, init, KMEANS_MAX_ITER, KMEANS_TOL);
        for pair in fit.sse_history.windows(2) {
            ensure(pair[1] <= pair[0] * (1.0 + 1e-12), || {
                format!("instance {seed}: SSE rose {} -> {}", pair[0], pair[1])
            })?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let img = RgbImage::from_fn(40, 30, |_, _| Rgb([rng.random(), rng.random(), rng.random()]));
    let runs: Vec<_> = (0..3)
        .map(|_| image_palette(&img, 8, 9))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(runs[0] == runs[1] && runs[1] == runs[2], || {
        "palettes differ across runs".into()
    })?;
    Ok("fractions 1/0/0.5, 100 SSE histories monotone, 3 identical palettes".into())
}

fn pca_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (n, d) in [(50, 10), (20, 60)] {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let m = pca_fit(&rows, PcaTarget::Components(n.min(d) - 1)).map_err(|e| e.to_string())?;
        for (i, a) in m.components.iter().enumerate() {
            for (j, b) in m.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                ensure((dot - want).abs() <= 1e-8, || format!("{n}x{d}: <c{i}, c{j}> = {dot}"))?;
            }
        }
    }

    let dir: Vec<f64> = (0..8).map(|i| (i as f64 + 1.0).sqrt()).collect();
    let rank1: Vec<Vec<f64>> = (0..30)
        .map(|_| {
            let t = rng.random_range(-2.0..2.0);
            dir.iter().enumerate().map(|(j, v)| 0.5 * j as f64 + t * v).collect()
        })
        .collect();
    let m = pca_fit(&rank1, PcaTarget::Components(2)).map_err(|e| e.to_string())?;
    let ratio = m.explained_variance_ratio[0];
    ensure((ratio - 1.0).abs() <= 1e-9, || format!("rank-1 first ratio {ratio}"))?;

    let mut worst = 0.0f64;
    for _ in 0..20 {
        let scales: Vec<f64> = (0..10).map(|j| 4.0 * 0.6f64.powi(j)).collect();
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| scales.iter().map(|s| s * rng.random_range(-1.0..1.0)).collect())
            .collect();
        let m = pca_fit(&rows, PcaTarget::Components(3)).map_err(|e| e.to_string())?;
        for (k, (_, v)) in common::power_iteration(common::covariance(&rows), 3).iter().enumerate() {
            let c = &m.components[k];
            let sign = c.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().signum();
            for (a, b) in c.iter().zip(v) {
                worst = worst.max((sign * a - b).abs());
            }
        }
    }
    ensure(worst <= 1e-6, || format!("power iteration deviation {worst:e}"))?;
    Ok(format!(
        "rank-1 ratio {ratio:.12}, power iteration deviation {worst:.1e}"
    ))
}

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

fn gbdt_suite() -> Outcome {
    let params = GbdtParams {
        n_trees: 40,
        learning_rate: 0.1,
        max_depth: 3,
        min_samples_leaf: 5,
        n_bins: 32,
        seed: 0,
        subsample: 1.0,
    };
    for inst in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(inst);
        let n = rng.random_range(40..150);
        let p = rng.random_range(1..6);
        let mut rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        // one constant column that can never be split
        rows.iter_mut().for_each(|r| r.push(1.0));
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r[0].sin() * 2.0 + r[p - 1] + rng.random_range(-0.5..0.5))
            .collect();
        let x = DesignMatrix::from_rows(names(p + 1), &rows).unwrap();
        let m = gbdt_fit(&x, &y, &GbdtParams { seed: inst, ..params }).map_err(|e| e.to_string())?;
        for pair in m.stage_train_mse.windows(2) {
            ensure(pair[1] <= pair[0], || {
                format!("instance {inst}: MSE rose {} -> {}", pair[0], pair[1])
            })?;
        }
        let sum: f64 = m.feature_gain.iter().sum();
        ensure(
            (sum - m.total_gain).abs() <= 1e-6 * m.total_gain.abs().max(f64::MIN_POSITIVE),
            || format!("instance {inst}: importance sum {sum} vs total gain {}", m.total_gain),
        )?;
        let mut used = vec![false; p + 1];
        for t in &m.trees {
            for node in &t.nodes {
                if let Node::Split { feature, .. } = node {
                    used[*feature] = true;
                }
            }
        }
        for (f, (u, g)) in used.iter().zip(&m.feature_gain).enumerate() {
            ensure(*u || *g == 0.0, || {
                format!("instance {inst}: never-split feature {f} scored {g}")
            })?;
        }
        ensure(m.feature_gain[p] == 0.0, || {
            format!("instance {inst}: constant column scored")
        })?;
    }

    let stump = GbdtParams {
        n_trees: 1,
        learning_rate: 1.0,
        max_depth: 1,
        min_samples_leaf: 1,
        n_bins: 64,
        seed: 0,
        subsample: 1.0,
    };
    // levels and split sizes keep every mean exactly representable
    for (n, cut, lo, hi) in [(10, 5, 0.0, 1.0), (32, 16, -1.0, 2.5), (32, 8, 3.0, -0.25)] {
        let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..n).map(|i| if i < cut { lo } else { hi }).collect();
        let m = gbdt_fit(&DesignMatrix::from_rows(names(1), &xs).unwrap(), &y, &stump).map_err(|e| e.to_string())?;
        let last = *m.stage_train_mse.last().unwrap();
        ensure(last == 0.0, || format!("step {lo}/{hi} at {cut} of {n}: MSE {last}"))?;
    }
    Ok("50 monotone MSE curves, step fit exact, gain sums consistent".into())
}

fn baseline_ordering() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..30u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, p) = (rng.random_range(15..80), rng.random_range(1..8));
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().sum::<f64>() + rng.random_range(-1.0..1.0))
            .collect();
        let x = DesignMatrix::from_rows(names(p), &rows).unwrap();
        let ols = ols_fit(&x, &y).map_err(|e| e.to_string())?;
        let ridge = ridge_fit(&x, &y, 1.0).map_err(|e| e.to_string())?;
        let (a, b) = (rss(&ols, &x, &y).unwrap(), rss(&ridge, &x, &y).unwrap());
        ensure(a <= b * (1.0 + 1e-12), || {
            format!("seed {seed}: OLS RSS {a} > ridge RSS {b}")
        })?;
        let tiny = ridge_fit(&x, &y, 1e-8).map_err(|e| e.to_string())?;
        for (c, d) in ols.coefficients.iter().zip(&tiny.coefficients) {
            worst = worst.max((c - d).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("ridge(1e-8) deviates from OLS by {worst:e}"))?;
    Ok(format!("30 designs, ridge(1e-8) within {worst:.1e} of OLS"))
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..100);
        let t: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let p: Vec<f64> = t.iter().map(|v| v + rng.random_range(-3.0..3.0)).collect();
        let a = (mae(&t, &p).unwrap() - common::mae_oracle(&t, &p)).abs();
        let b = (r_squared(&t, &p).unwrap() - common::r2_oracle(&t, &p)).abs();
        worst = worst.max(a).max(b);
        let mean = t.iter().sum::<f64>() / n as f64;
        let r2 = r_squared(&t, &vec![mean; n]).unwrap();
        ensure(r2.abs() <= 1e-12, || format!("mean predictor R2 {r2}"))?;
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("1000 vectors, max deviation {worst:.1e}"))
}

fn r2(report: &MetricReport, combo: &str, model: &str, target: Target) -> Result<f64, String> {
    report
        .get(combo, model, target)
        .map(|r| r.r_squared)
        .ok_or_else(|| format!("report has no row for {combo}/{model}/{target}"))
}

fn synthetic_end_to_end(work: &Path) -> Outcome {
    let start = Instant::now();
    let corpus = generate_corpus(
        work.join("corpus"),
        &SyntheticConfig {
            n_listings: 500,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let cfg = corpus.config(work.join("run_a"), 7);
    let report = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let took = start.elapsed();

    let mut notes = Vec::new();
    for model in ["lgb", "ols"] {
        let base = r2(&report, "base_2", model, Target::Price)?;
        let full = r2(&report, "base_2+image", model, Target::Price)?;
        ensure(full >= base + 0.05, || {
            format!("{model} price R2: base_2 {base:.4}, base_2+image {full:.4}")
        })?;
        notes.push(format!("{model} price R2 {base:.3} -> {full:.3}"));
    }
    let lgb = r2(&report, "base_2+image", "lgb", Target::Dom)?;
    let ols = r2(&report, "base_2+image", "ols", Target::Dom)?;
    ensure(lgb > ols, || format!("dom R2: lgb {lgb:.4} vs ols {ols:.4}"))?;
    notes.push(format!("dom R2 lgb {lgb:.3} vs ols {ols:.3}"));
    ensure(took <= Duration::from_secs(300), || format!("took {took:.1?}"))?;
    notes.push(format!("{took:.1?}"));
    Ok(notes.join(", "))
}

fn determinism(work: &Path) -> Outcome {
    // same corpus as criterion 8, second run on a different worker count
    let corpus = generate_corpus(
        work.join("corpus"),
        &SyntheticConfig {
            n_listings: 500,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let a = corpus.config(work.join("run_a"), 7);
    if !a.out("report.csv").exists() {
        run_pipeline(&a).map_err(|e| e.to_string())?;
    }
    let mut b = corpus.config(work.join("run_b"), 7);
    b.jobs = if a.jobs == 1 { 2 } else { 1 };
    run_pipeline(&b).map_err(|e| e.to_string())?;
    let files = [
        "embeddings.csv",
        "features.csv",
        "pca.json",
        "masks.json",
        "extract_errors.csv",
        "model.json",
        "evaluation.csv",
        "importance.csv",
        "importance.svg",
        "selected.txt",
        "report.csv",
        "report.svg",
    ];
    for f in files {
        let (x, y) = (std::fs::read(a.out(f)), std::fs::read(b.out(f)));
        match (x, y) {
            (Ok(x), Ok(y)) => ensure(x == y, || format!("{f} differs between runs"))?,
            _ => return Err(format!("{f} missing from a run")),
        }
    }
    Ok(format!(
        "{} artifacts byte-identical (jobs {} vs {})",
        files.len(),
        a.jobs,
        b.jobs
    ))
}

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let work = tempfile::tempdir().expect("temp dir");
    let w = work.path().to_path_buf();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1 entropy oracle", Box::new(entropy_oracle_suite)),
        ("2 analytic anchors", Box::new(analytic_anchors)),
        ("3 segmentation", Box::new(segmentation_suite)),
        ("4 pca", Box::new(pca_suite)),
        ("5 gbdt", Box::new(gbdt_suite)),
        ("6 baseline ordering", Box::new(baseline_ordering)),
        ("7 metric oracles", Box::new(metric_oracles)),
        (
            "8 synthetic end-to-end",
            Box::new({
                let w = w.clone();
                move || synthetic_end_to_end(&w)
            }),
        ),
        ("9 determinism", Box::new(move || determinism(&w))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
