//! Listing-indexed feature tables with explicit missing cells.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::listing::{ListingRecord, BASIC_FEATURES, DOM_COLUMN, PRICE_COLUMN};

/// Target columns carried in every assembled table. They are never treated as predictors.
pub const TARGET_COLUMNS: [&str; 2] = [DOM_COLUMN, PRICE_COLUMN];

/// A cell is `None` when the value is missing.
pub type Cell = Option<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    ids: Vec<String>,
    columns: Vec<String>,
    cells: Vec<Cell>,
}

impl FeatureTable {
    /// Creates an all-missing table. Columns are sorted; duplicates are rejected.
    pub fn new(ids: Vec<String>, columns: Vec<String>) -> Result<Self> {
        let mut sorted = columns;
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Assembly(format!("duplicate feature name {}", w[0])));
        }
        let mut seen = BTreeSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Assembly(format!("duplicate listing_id {id}")));
            }
        }
        let cells = vec![None; ids.len() * sorted.len()];
        Ok(FeatureTable {
            ids,
            columns: sorted,
            cells,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.binary_search_by(|c| c.as_str().cmp(name)).ok()
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|r| r == id)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_index(name).is_some()
    }

    pub fn get(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.columns.len() + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Cell) {
        let n = self.columns.len();
        self.cells[row * n + col] = value;
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        let n = self.columns.len();
        &self.cells[row * n..(row + 1) * n]
    }

    pub fn column(&self, name: &str) -> Result<Vec<Cell>> {
        let c = self
            .column_index(name)
            .ok_or_else(|| Error::Schema(format!("missing column {name}")))?;
        Ok((0..self.n_rows()).map(|r| self.get(r, c)).collect())
    }

    /// Columns usable as predictors (everything except the target columns).
    pub fn feature_columns(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| !TARGET_COLUMNS.contains(&c.as_str()))
            .cloned()
            .collect()
    }

    /// Short digest of the column schema.
    pub fn schema_hash(&self) -> String {
        schema_hash(&self.columns)
    }

    /// Adds indicator columns `<prefix><value>` for every distinct value of `column`.
    /// The source column is kept. Missing source cells stay missing in the indicators.
    pub fn one_hot(&self, column: &str, prefix: &str) -> Result<FeatureTable> {
        let values = self.column(column)?;
        let distinct: BTreeSet<u64> = values.iter().flatten().map(|v| v.to_bits()).collect();
        let mut levels: Vec<f64> = distinct.into_iter().map(f64::from_bits).collect();
        levels.sort_by(f64::total_cmp);
        let new_cols: Vec<String> = levels.iter().map(|v| format!("{prefix}{v}")).collect();
        let mut columns = self.columns.clone();
        columns.extend(new_cols.iter().cloned());
        let mut out = FeatureTable::new(self.ids.clone(), columns)?;
        for r in 0..self.n_rows() {
            for (c, name) in self.columns.iter().enumerate() {
                let oc = out.column_index(name).expect("copied column");
                out.set(r, oc, self.get(r, c));
            }
            for (level, name) in levels.iter().zip(&new_cols) {
                let oc = out.column_index(name).expect("new column");
                out.set(r, oc, values[r].map(|v| if v == *level { 1.0 } else { 0.0 }));
            }
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = Vec::with_capacity(self.n_cols() + 1);
        header.push("listing_id".to_string());
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (r, id) in self.ids.iter().enumerate() {
            let mut rec = Vec::with_capacity(self.n_cols() + 1);
            rec.push(id.clone());
            rec.extend(self.row(r).iter().map(|c| match c {
                Some(v) => format!("{v}"),
                None => String::new(),
            }));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<feature table>", e))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<FeatureTable> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("listing_id") {
            return Err(Error::Format("feature table must start with listing_id".into()));
        }
        let file_cols: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != file_cols.len() + 1 {
                return Err(Error::Row {
                    line,
                    message: format!("expected {} cells, found {}", file_cols.len() + 1, rec.len()),
                });
            }
            ids.push(rec[0].to_string());
            let mut cells = Vec::with_capacity(file_cols.len());
            for s in rec.iter().skip(1) {
                cells.push(if s.is_empty() {
                    None
                } else {
                    Some(s.parse::<f64>().map_err(|_| Error::Row {
                        line,
                        message: format!("not a number: {s:?}"),
                    })?)
                });
            }
            rows.push(cells);
        }
        let mut table = FeatureTable::new(ids, file_cols.clone())?;
        let map: Vec<usize> = file_cols
            .iter()
            .map(|c| table.column_index(c).expect("column present"))
            .collect();
        for (r, cells) in rows.into_iter().enumerate() {
            for (fc, v) in cells.into_iter().enumerate() {
                table.set(r, map[fc], v);
            }
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<FeatureTable> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file)
    }
}

pub fn schema_hash(columns: &[String]) -> String {
    let mut h = Sha256::new();
    for c in columns {
        h.update(c.as_bytes());
        h.update(b"\n");
    }
    hex::encode(&h.finalize()[..8])
}

/// Features computed from one image.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImageFeatures {
    pub listing_id: String,
    pub image_id: String,
    pub values: Vec<(String, f64)>,
}

/// Features computed once per listing (greenness, category counts, PCA averages).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ListingFeatures {
    pub listing_id: String,
    pub values: Vec<(String, Cell)>,
}

/// Builds one row per listing (sorted by listing id) holding the basic MLS
/// predictors, the raw targets, per-image features averaged over the listing's
/// images, and per-listing aggregates. `schema` lists additional columns that
/// must exist even if no listing produced them.
pub fn assemble_features(
    listings: &[ListingRecord],
    per_image: &[ImageFeatures],
    aggregates: &[ListingFeatures],
    schema: &[String],
) -> Result<FeatureTable> {
    let known: HashMap<&str, &ListingRecord> = listings.iter().map(|l| (l.mls_num.as_str(), l)).collect();
    if known.len() != listings.len() {
        return Err(Error::Assembly("duplicate listing in input".into()));
    }
    let check = |id: &str| {
        if known.contains_key(id) {
            Ok(())
        } else {
            Err(Error::Assembly(format!("features for unknown listing {id}")))
        }
    };

    let base: BTreeSet<&str> = BASIC_FEATURES.iter().chain(TARGET_COLUMNS.iter()).copied().collect();

    // (listing, feature) -> values from each image
    let mut image_values: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    let mut image_names: BTreeSet<&str> = BTreeSet::new();
    for rec in per_image {
        check(&rec.listing_id)?;
        let mut local = BTreeSet::new();
        for (name, v) in &rec.values {
            if !local.insert(name.as_str()) {
                return Err(Error::Assembly(format!(
                    "duplicate feature name {name} in image {}",
                    rec.image_id
                )));
            }
            if base.contains(name.as_str()) {
                return Err(Error::Assembly(format!("duplicate feature name {name}")));
            }
            image_names.insert(name);
            image_values
                .entry((rec.listing_id.as_str(), name.as_str()))
                .or_default()
                .push(*v);
        }
    }

    let mut agg_values: BTreeMap<(&str, &str), Cell> = BTreeMap::new();
    let mut agg_names: BTreeSet<&str> = BTreeSet::new();
    for rec in aggregates {
        check(&rec.listing_id)?;
        for (name, v) in &rec.values {
            if base.contains(name.as_str()) || image_names.contains(name.as_str()) {
                return Err(Error::Assembly(format!("duplicate feature name {name}")));
            }
            if agg_values
                .insert((rec.listing_id.as_str(), name.as_str()), *v)
                .is_some()
            {
                return Err(Error::Assembly(format!(
                    "duplicate feature name {name} for listing {}",
                    rec.listing_id
                )));
            }
            agg_names.insert(name);
        }
    }

    let mut columns: BTreeSet<String> = base.iter().map(|s| s.to_string()).collect();
    columns.extend(image_names.iter().map(|s| s.to_string()));
    columns.extend(agg_names.iter().map(|s| s.to_string()));
    columns.extend(schema.iter().cloned());

    let mut ids: Vec<String> = listings.iter().map(|l| l.mls_num.clone()).collect();
    ids.sort();
    let mut table = FeatureTable::new(ids, columns.into_iter().collect())?;

    for r in 0..table.n_rows() {
        let id = table.ids[r].clone();
        let listing = known[id.as_str()];
        for name in &base {
            let c = table.column_index(name).expect("base column");
            table.set(r, c, listing.feature(name));
        }
    }
    for ((id, name), mut values) in image_values {
        let r = table.row_index(id).expect("checked listing");
        let c = table.column_index(name).expect("collected column");
        table.set(r, c, Some(order_free_mean(&mut values)));
    }
    for ((id, name), v) in agg_values {
        let r = table.row_index(id).expect("checked listing");
        let c = table.column_index(name).expect("collected column");
        table.set(r, c, v);
    }
    Ok(table)
}

/// Mean whose result does not depend on the input order.
pub(crate) fn order_free_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Column-major numeric design with missing cells, as consumed by the models.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub columns: Vec<Vec<Cell>>,
    pub n_rows: usize,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, columns: Vec<Vec<Cell>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Schema("name/column count mismatch".into()));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::Schema("ragged design matrix".into()));
        }
        Ok(DesignMatrix { names, columns, n_rows })
    }

    /// Fully observed design from row-major values.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = names.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for row in rows {
            if row.len() != p {
                return Err(Error::Schema("row length does not match names".into()));
            }
            for (c, v) in row.iter().enumerate() {
                columns[c].push(Some(*v));
            }
        }
        let mut m = DesignMatrix::new(names, columns)?;
        m.n_rows = rows.len();
        Ok(m)
    }

    /// Selects `names` (by name) and `rows` (by index, repeats allowed) from a table.
    pub fn from_table(table: &FeatureTable, names: &[String], rows: Option<&[usize]>) -> Result<Self> {
        let all: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all = (0..table.n_rows()).collect();
                &all
            }
        };
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            let c = table
                .column_index(name)
                .ok_or_else(|| Error::Schema(format!("missing column {name}")))?;
            columns.push(rows.iter().map(|&r| table.get(r, c)).collect());
        }
        let mut m = DesignMatrix::new(names.to_vec(), columns)?;
        m.n_rows = rows.len();
        Ok(m)
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn value(&self, row: usize, feature: usize) -> Cell {
        self.columns[feature][row]
    }
}

/// Train/test membership of one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

/// A feature table paired with a transformed target and a split assignment.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub table: FeatureTable,
    pub target: Vec<f64>,
    pub split: Vec<Split>,
}

impl Dataset {
    pub fn new(table: FeatureTable, target: Vec<f64>, split: Vec<Split>) -> Result<Self> {
        if target.len() != table.n_rows() || split.len() != table.n_rows() {
            return Err(Error::Schema("dataset lengths disagree".into()));
        }
        Ok(Dataset { table, target, split })
    }

    pub fn rows(&self, side: Split) -> Vec<usize> {
        self.split
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == side)
            .map(|(i, _)| i)
            .collect()
    }
}
