//! Batch commands. Each reads the configuration and earlier artifacts from
//! disk and writes its own outputs under the configured output directory.
//!
//! | command      | reads                          | writes                                   |
//! |--------------|--------------------------------|------------------------------------------|
//! | `embed`      | manifest, images               | `embeddings.csv`                         |
//! | `extract`    | listings, manifest, embeddings | `features.csv`, `pca.json`, `masks.json`, `extract_errors.csv` |
//! | `fit`        | `features.csv`                 | `model.json`                             |
//! | `evaluate`   | `features.csv`, `model.json`   | `evaluation.csv`                         |
//! | `importance` | `model.json`                   | `importance.csv`, `importance.svg`       |
//! | `select`     | `model.json`                   | `selected.txt`                           |
//! | `experiment` | `features.csv`                 | `report.csv`, `report.svg`               |

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::chart;
use crate::color::{derive_masks, green_fraction, image_palette, listing_greenness, GreenMaskSpec};
use crate::config::RunConfig;
use crate::deep::{
    deep_feature_names, fit_category_pca, listing_deep_features, load_embeddings, toy_embed, write_embeddings,
    CategoryPca, EmbeddingIndex, EmbeddingRecord,
};
use crate::entropy::{entropy_feature_names, entropy_features};
use crate::error::{Error, Result};
use crate::eval::{mae, r_squared, stratified_bootstrap, train_test_split, TrainTest};
use crate::experiment::{resolve_features, run_experiment, MetricReport, LOG_SCALE_NOTE};
use crate::gbdt::{select_top_n, GbdtModel};
use crate::listing::{load_listings, ListingRecord, BASIC_FEATURES};
use crate::manifest::{parse_manifest, ImageAsset, ImageType, Manifest};
use crate::model::{FittedModel, ModelFile, Target};
use crate::raster::load_rgb;
use crate::table::{assemble_features, DesignMatrix, FeatureTable, ImageFeatures, ListingFeatures};

pub const FEATURES_FILE: &str = "features.csv";
pub const PCA_FILE: &str = "pca.json";
pub const MASKS_FILE: &str = "masks.json";
pub const EXTRACT_ERRORS_FILE: &str = "extract_errors.csv";
pub const MODEL_FILE: &str = "model.json";
pub const EVALUATION_FILE: &str = "evaluation.csv";
pub const IMPORTANCE_CSV: &str = "importance.csv";
pub const IMPORTANCE_SVG: &str = "importance.svg";
pub const SELECTED_FILE: &str = "selected.txt";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_SVG: &str = "report.svg";

/// Offset mixed into the run seed for the dom bootstrap in `fit`.
const FIT_BOOTSTRAP_OFFSET: u64 = 0x5851_f42d_4c95_7f2d;

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

fn ensure_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.paths.out).map_err(|e| Error::io(&cfg.paths.out, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn load_manifest_lenient(cfg: &RunConfig) -> Result<Manifest> {
    let path = &cfg.paths.manifest;
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    // missing files surface later as per-listing errors
    let load = parse_manifest(f, &cfg.paths.image_root, false)?;
    for e in &load.errors {
        log::warn!("manifest {e}");
    }
    Ok(load.manifest)
}

/// Writes toy embeddings for every indoor image. Unreadable images are skipped.
pub fn cmd_embed(cfg: &RunConfig) -> Result<PathBuf> {
    ensure_out(cfg)?;
    let manifest = load_manifest_lenient(cfg)?;
    let indoor: Vec<&ImageAsset> = manifest
        .assets()
        .filter(|a| a.image_type == ImageType::Indoor)
        .collect();
    let records: Vec<Option<EmbeddingRecord>> = with_pool(cfg.jobs, || {
        Ok(indoor
            .par_iter()
            .map(
                |a| match load_rgb(manifest.resolve(a)).and_then(|img| toy_embed(&img)) {
                    Ok(vector) => Some(EmbeddingRecord {
                        image_id: a.image_id().to_string(),
                        vector,
                    }),
                    Err(e) => {
                        log::warn!("skipping {}: {e}", a.path);
                        None
                    }
                },
            )
            .collect())
    })?;
    let records: Vec<EmbeddingRecord> = records.into_iter().flatten().collect();
    if records.is_empty() {
        return Err(Error::Assembly("no indoor image could be embedded".into()));
    }
    let path = cfg.embeddings_path();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_embeddings(f, &records)?;
    log::info!("embedded {} indoor images", records.len());
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractSummary {
    pub table: PathBuf,
    pub listings: usize,
    pub images: usize,
    /// (listing id or input line, message) for every rejected listing.
    pub errors: Vec<(String, String)>,
    pub mask_fell_back: bool,
}

#[derive(Serialize)]
struct MaskRecord<'a> {
    spec: &'a GreenMaskSpec,
    derived: bool,
    fell_back: bool,
}

struct ImageResult {
    features: ImageFeatures,
    green: Option<f64>,
}

fn process_image(
    cfg: &RunConfig,
    manifest: &Manifest,
    asset: &ImageAsset,
    mask: &GreenMaskSpec,
) -> Result<ImageResult> {
    let img = load_rgb(manifest.resolve(asset))?;
    let values = entropy_features(asset, &img, cfg.entropy.window)?;
    let scored = match asset.image_type {
        ImageType::Outdoor => true,
        ImageType::Satellite => asset.zoom == Some(cfg.green.satellite_zoom),
        ImageType::Indoor => false,
    };
    let green = if scored {
        Some(green_fraction(&img, mask)?)
    } else {
        None
    };
    Ok(ImageResult {
        features: ImageFeatures {
            listing_id: asset.listing_id.clone(),
            image_id: asset.image_id().to_string(),
            values,
        },
        green,
    })
}

fn choose_mask(
    cfg: &RunConfig,
    manifest: &Manifest,
    listings: &[ListingRecord],
) -> Result<(GreenMaskSpec, bool, bool)> {
    if let Some(spec) = &cfg.green.mask {
        return Ok((spec.clone(), false, false));
    }
    let outdoor: Vec<&ImageAsset> = listings
        .iter()
        .flat_map(|l| manifest.assets_for(&l.mls_num))
        .filter(|a| a.image_type == ImageType::Outdoor)
        .take(cfg.green.palette_images)
        .collect();
    let palettes: Vec<_> = outdoor
        .par_iter()
        .enumerate()
        .filter_map(|(i, a)| {
            let img = load_rgb(manifest.resolve(a)).ok()?;
            image_palette(&img, cfg.green.k, cfg.seed.wrapping_add(i as u64)).ok()
        })
        .collect();
    if palettes.is_empty() {
        log::warn!("no outdoor palettes available; using the default green mask");
        return Ok((GreenMaskSpec::default(), true, true));
    }
    let derived = derive_masks(&palettes, &cfg.green.derivation)?;
    Ok((derived.spec, true, derived.fell_back))
}

/// Full column schema, so every table has the same columns whatever the inputs.
fn extract_schema(cfg: &RunConfig) -> Vec<String> {
    let mut names = entropy_feature_names(ImageType::Indoor, None);
    names.extend(entropy_feature_names(ImageType::Outdoor, None));
    for z in &cfg.entropy.zooms {
        names.extend(entropy_feature_names(ImageType::Satellite, Some(*z)));
    }
    names.push("GREEN_mask".into());
    names.push("GREEN_sat".into());
    names.extend(deep_feature_names(cfg.deep.emit));
    names
}

/// Computes per-listing features and writes the feature table. A listing with
/// any failing image is left out and logged; the run fails only when no
/// listing succeeds.
pub fn cmd_extract(cfg: &RunConfig) -> Result<ExtractSummary> {
    cfg.validate()?;
    ensure_out(cfg)?;
    with_pool(cfg.jobs, || extract_inner(cfg))
}

fn extract_inner(cfg: &RunConfig) -> Result<ExtractSummary> {
    let load = load_listings(&cfg.paths.listings)?;
    let mut errors: Vec<(String, String)> = load
        .errors
        .iter()
        .map(|e| (format!("line {}", e.line), e.message.clone()))
        .collect();
    let mut listings = load.records;
    listings.sort_by(|a, b| a.mls_num.cmp(&b.mls_num));
    let manifest = load_manifest_lenient(cfg)?;

    let (mask, derived, fell_back) = choose_mask(cfg, &manifest, &listings)?;
    write_json(
        &cfg.out(MASKS_FILE),
        &MaskRecord {
            spec: &mask,
            derived,
            fell_back,
        },
    )?;

    let keep = |a: &&ImageAsset| {
        a.image_type != ImageType::Satellite || a.zoom.is_some_and(|z| cfg.entropy.zooms.contains(&z))
    };
    let assets: Vec<&ImageAsset> = listings
        .iter()
        .flat_map(|l| manifest.assets_for(&l.mls_num))
        .filter(keep)
        .collect();
    let results: Vec<Result<ImageResult>> = assets
        .par_iter()
        .map(|a| process_image(cfg, &manifest, a, &mask))
        .collect();

    let mut by_listing: BTreeMap<&str, Vec<(&ImageAsset, ImageResult)>> = BTreeMap::new();
    let mut failed: BTreeMap<&str, String> = BTreeMap::new();
    for (a, r) in assets.iter().zip(results) {
        match r {
            Ok(r) => by_listing.entry(a.listing_id.as_str()).or_default().push((a, r)),
            Err(e) => {
                failed
                    .entry(a.listing_id.as_str())
                    .or_insert_with(|| format!("{}: {e}", a.path));
            }
        }
    }
    for (id, msg) in &failed {
        log::warn!("quarantined listing {id}: {msg}");
        errors.push((id.to_string(), msg.clone()));
    }
    let ok: Vec<ListingRecord> = listings
        .into_iter()
        .filter(|l| !failed.contains_key(l.mls_num.as_str()))
        .collect();
    write_errors(&cfg.out(EXTRACT_ERRORS_FILE), &errors)?;
    if ok.is_empty() {
        return Err(Error::Assembly(format!(
            "no listing was extracted successfully ({} errors, see {EXTRACT_ERRORS_FILE})",
            errors.len()
        )));
    }

    let ok_assets: Vec<ImageAsset> = ok
        .iter()
        .flat_map(|l| manifest.assets_for(&l.mls_num).iter().cloned())
        .collect();
    let index = load_index(cfg, &ok_assets)?;
    let pca = fit_category_pca(&ok_assets, &index, cfg.deep.scope, cfg.deep.pca)?;
    write_json(&cfg.out(PCA_FILE), &pca)?;

    let per_image: Vec<ImageFeatures> = by_listing
        .values()
        .flatten()
        .filter(|(a, _)| !failed.contains_key(a.listing_id.as_str()))
        .map(|(_, r)| r.features.clone())
        .collect();
    let aggregates: Vec<ListingFeatures> = ok
        .par_iter()
        .map(|l| listing_aggregates(cfg, &manifest, l, by_listing.get(l.mls_num.as_str()), &index, &pca))
        .collect::<Result<_>>()?;

    let table = assemble_features(&ok, &per_image, &aggregates, &extract_schema(cfg))?;
    let path = cfg.out(FEATURES_FILE);
    table.save(&path)?;
    log::info!(
        "wrote {} listings × {} columns to {}",
        table.n_rows(),
        table.n_cols(),
        path.display()
    );
    Ok(ExtractSummary {
        table: path,
        listings: table.n_rows(),
        images: per_image.len(),
        errors,
        mask_fell_back: fell_back,
    })
}

fn listing_aggregates(
    cfg: &RunConfig,
    manifest: &Manifest,
    listing: &ListingRecord,
    images: Option<&Vec<(&ImageAsset, ImageResult)>>,
    index: &EmbeddingIndex,
    pca: &CategoryPca,
) -> Result<ListingFeatures> {
    let scored = images
        .into_iter()
        .flatten()
        .filter_map(|(a, r)| r.green.map(|g| (*a, g)));
    let green = listing_greenness(scored, cfg.green.satellite_zoom);
    let mut values = vec![
        ("GREEN_mask".to_string(), green.green_mask),
        ("GREEN_sat".to_string(), green.green_sat),
    ];
    values.extend(listing_deep_features(
        manifest.assets_for(&listing.mls_num),
        index,
        pca,
        cfg.deep.emit,
    )?);
    Ok(ListingFeatures {
        listing_id: listing.mls_num.clone(),
        values,
    })
}

fn load_index(cfg: &RunConfig, assets: &[ImageAsset]) -> Result<EmbeddingIndex> {
    let path = cfg.embeddings_path();
    if !path.is_file() {
        log::warn!("no embeddings at {}; deep features will be empty", path.display());
        return Ok(EmbeddingIndex::default());
    }
    let mut index = EmbeddingIndex::from_records(load_embeddings(&path)?)?;
    index.retain_known(assets.iter().map(|a| a.image_id()));
    Ok(index)
}

fn write_errors(path: &Path, errors: &[(String, String)]) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["listing", "error"])?;
    for (id, msg) in errors {
        w.write_record([id, msg])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Training rows for `target`: the shared split, bootstrapped within strata for dom.
fn training_rows(cfg: &RunConfig, split: &TrainTest, y: &[f64], target: Target) -> Result<Vec<usize>> {
    if target == Target::Dom && cfg.experiment.bootstrap_dom {
        let ty: Vec<f64> = split.train.iter().map(|r| y[*r]).collect();
        Ok(
            stratified_bootstrap(&ty, cfg.experiment.n_strata, cfg.seed ^ FIT_BOOTSTRAP_OFFSET)?
                .into_iter()
                .map(|i| split.train[i])
                .collect(),
        )
    } else {
        Ok(split.train.clone())
    }
}

/// Fits the configured model on the training side of the split.
pub fn cmd_fit(cfg: &RunConfig) -> Result<ModelFile> {
    ensure_out(cfg)?;
    with_pool(cfg.jobs, || {
        let table = FeatureTable::load(cfg.out(FEATURES_FILE))?;
        let names = resolve_features(&cfg.fit.features, &table)?;
        let target = cfg.fit.target;
        let y = target.values(&table)?;
        let split = train_test_split(table.n_rows(), cfg.fit.ratio, cfg.seed)?;
        let rows = training_rows(cfg, &split, &y, target)?;
        let x = DesignMatrix::from_table(&table, &names, Some(&rows))?;
        let ty: Vec<f64> = rows.iter().map(|r| y[*r]).collect();
        let model = cfg.fit.model.fit(&x, &ty, &cfg.gbdt, cfg.seed)?;
        let file = ModelFile::new(cfg.fit.model, target, &table, model);
        file.save(cfg.out(MODEL_FILE))?;
        Ok(file)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub target: Target,
    pub model: String,
    pub train_mae: f64,
    pub train_r_squared: f64,
    pub test_mae: f64,
    pub test_r_squared: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Scores the saved model on both sides of the split. Refuses a table whose
/// schema differs from the one the model was trained on.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<Evaluation> {
    ensure_out(cfg)?;
    let table = FeatureTable::load(cfg.out(FEATURES_FILE))?;
    let file = ModelFile::load(cfg.out(MODEL_FILE))?;
    file.check_schema(&table)?;
    let y = file.target.values(&table)?;
    let split = train_test_split(table.n_rows(), cfg.fit.ratio, cfg.seed)?;
    let score = |rows: &[usize]| -> Result<(f64, f64)> {
        let x = DesignMatrix::from_table(&table, file.model.feature_names(), Some(rows))?;
        let t: Vec<f64> = rows.iter().map(|r| y[*r]).collect();
        let p = file.model.predict(&x)?;
        Ok((mae(&t, &p)?, r_squared(&t, &p)?))
    };
    let (train_mae, train_r_squared) = score(&split.train)?;
    let (test_mae, test_r_squared) = score(&split.test)?;
    let ev = Evaluation {
        target: file.target,
        model: file.choice.to_string(),
        train_mae,
        train_r_squared,
        test_mae,
        test_r_squared,
        n_train: split.train.len(),
        n_test: split.test.len(),
    };
    let text = format!(
        "{LOG_SCALE_NOTE}\ntarget,model,split,rows,MAE,R2\n{t},{m},train,{},{:.6},{:.6}\n{t},{m},test,{},{:.6},{:.6}\n",
        ev.n_train,
        ev.train_mae,
        ev.train_r_squared,
        ev.n_test,
        ev.test_mae,
        ev.test_r_squared,
        t = ev.target,
        m = ev.model,
    );
    write_text(&cfg.out(EVALUATION_FILE), &text)?;
    Ok(ev)
}

fn boosted(file: &ModelFile) -> Result<&GbdtModel> {
    match &file.model {
        FittedModel::Gbdt(m) => Ok(m),
        FittedModel::Linear(_) => Err(Error::parameter(format!(
            "gain importance needs a boosted model, but {} is linear",
            file.choice
        ))),
    }
}

/// Gain importance, highest first (ties by name).
pub fn ranked_importance(model: &GbdtModel) -> Vec<(String, f64)> {
    let mut imp = model.feature_importance();
    imp.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    imp
}

/// Writes the importance table and a bar chart with MLS columns outlined.
pub fn cmd_importance(cfg: &RunConfig) -> Result<Vec<(String, f64)>> {
    ensure_out(cfg)?;
    let file = ModelFile::load(cfg.out(MODEL_FILE))?;
    let imp = ranked_importance(boosted(&file)?);
    let mut csv = String::from("feature,gain,mls\n");
    for (name, gain) in &imp {
        let mls = BASIC_FEATURES.contains(&name.as_str()) as u8;
        csv.push_str(&format!("{name},{gain},{mls}\n"));
    }
    write_text(&cfg.out(IMPORTANCE_CSV), &csv)?;
    let items: Vec<(String, f64, bool)> = imp
        .iter()
        .map(|(n, g)| (n.clone(), *g, BASIC_FEATURES.contains(&n.as_str())))
        .collect();
    write_text(
        &cfg.out(IMPORTANCE_SVG),
        &chart::importance_bars(&format!("Gain importance ({} target)", file.target), &items),
    )?;
    Ok(imp)
}

/// Writes the `n` most important feature names, one per line.
pub fn cmd_select(cfg: &RunConfig) -> Result<Vec<String>> {
    ensure_out(cfg)?;
    let file = ModelFile::load(cfg.out(MODEL_FILE))?;
    let selected = select_top_n(&boosted(&file)?.feature_importance(), cfg.select.n)?;
    let path = cfg.out(SELECTED_FILE);
    let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    for name in &selected {
        writeln!(f, "{name}").map_err(|e| Error::io(&path, e))?;
    }
    Ok(selected)
}

/// Runs the configured feature-combination experiment.
pub fn cmd_experiment(cfg: &RunConfig) -> Result<MetricReport> {
    ensure_out(cfg)?;
    with_pool(cfg.jobs, || {
        let table = FeatureTable::load(cfg.out(FEATURES_FILE))?;
        let mut spec = cfg.experiment.clone();
        spec.seed = cfg.seed;
        let report = run_experiment(&spec, &table)?;
        report.save_csv(cfg.out(REPORT_CSV))?;
        write_text(&cfg.out(REPORT_SVG), &report.to_svg())?;
        Ok(report)
    })
}

/// `embed`, `extract`, `fit`, `evaluate` and `experiment` in order, plus
/// `importance` and `select` when the fitted model is boosted.
pub fn run_pipeline(cfg: &RunConfig) -> Result<MetricReport> {
    cmd_embed(cfg)?;
    cmd_extract(cfg)?;
    let file = cmd_fit(cfg)?;
    cmd_evaluate(cfg)?;
    if let FittedModel::Gbdt(m) = &file.model {
        cmd_importance(cfg)?;
        if cfg.select.n <= m.n_features() {
            cmd_select(cfg)?;
        }
    }
    cmd_experiment(cfg)
}
