//! MLS listing metadata: the seven basic predictors and the two targets.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names of the metadata file, in canonical order.
pub const LISTING_COLUMNS: [&str; 10] = [
    "MLSNUM",
    "SOLDPRICE",
    "DOM",
    "ZIP",
    "BEDS",
    "BATHS",
    "LOTSIZE",
    "SQFT",
    "GARAGE",
    "AGE",
];

/// The basic numeric predictors as they appear in a feature table.
pub const BASIC_FEATURES: [&str; 7] = ["ZIP", "LOTSIZE", "AGE", "BEDS", "BATHS", "GARAGE", "SQFT"];

/// Feature-table columns holding the raw targets.
pub const PRICE_COLUMN: &str = "SOLDPRICE";
pub const DOM_COLUMN: &str = "DOM";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListingRecord {
    pub mls_num: String,
    pub price: f64,
    pub dom: u32,
    pub zip: String,
    pub beds: u32,
    pub baths: f64,
    pub lotsize: f64,
    pub sqft: f64,
    pub garage: bool,
    pub age: u32,
}

impl ListingRecord {
    /// Numeric code for the postal code: the leading digit run, e.g. "02116-1234" -> 2116.
    pub fn zip_code(&self) -> Option<f64> {
        let digits: String = self.zip.trim().chars().take_while(|c| c.is_ascii_digit()).collect();
        if digits.is_empty() {
            None
        } else {
            digits.parse::<f64>().ok()
        }
    }

    /// Value of one of [`BASIC_FEATURES`] or a target column.
    pub fn feature(&self, name: &str) -> Option<f64> {
        match name {
            "ZIP" => self.zip_code(),
            "LOTSIZE" => Some(self.lotsize),
            "AGE" => Some(self.age as f64),
            "BEDS" => Some(self.beds as f64),
            "BATHS" => Some(self.baths),
            "GARAGE" => Some(if self.garage { 1.0 } else { 0.0 }),
            "SQFT" => Some(self.sqft),
            PRICE_COLUMN => Some(self.price),
            DOM_COLUMN => Some(self.dom as f64),
            _ => None,
        }
    }
}

/// A rejected input row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Default)]
pub struct ListingLoad {
    pub records: Vec<ListingRecord>,
    pub errors: Vec<RowError>,
}

pub fn load_listings(path: impl AsRef<Path>) -> Result<ListingLoad> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_listings(file)
}

/// Parses a metadata CSV. Header problems fail the whole load; bad rows are
/// collected in [`ListingLoad::errors`].
pub fn parse_listings<R: Read>(reader: R) -> Result<ListingLoad> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index = [0usize; 10];
    for (slot, name) in index.iter_mut().zip(LISTING_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Schema(format!("missing column {name}")))?;
    }

    let mut out = ListingLoad::default();
    let mut seen = HashSet::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let cell = |i: usize| row.get(index[i]).unwrap_or("");
        match parse_row(&cell) {
            Ok(rec) => {
                if !seen.insert(rec.mls_num.clone()) {
                    out.errors.push(RowError {
                        line,
                        message: format!("duplicate MLSNUM {}", rec.mls_num),
                    });
                } else {
                    out.records.push(rec);
                }
            }
            Err(message) => out.errors.push(RowError { line, message }),
        }
    }
    Ok(out)
}

fn parse_row<'a>(cell: &impl Fn(usize) -> &'a str) -> std::result::Result<ListingRecord, String> {
    let mls_num = cell(0).to_string();
    if mls_num.is_empty() {
        return Err("empty MLSNUM".into());
    }
    let price = number(cell(1), "SOLDPRICE")?;
    if !(price > 0.0) {
        return Err(format!("SOLDPRICE must be positive, got {price}"));
    }
    let dom = count(cell(2), "DOM")?;
    let zip = cell(3).to_string();
    let beds = count(cell(4), "BEDS")?;
    let baths = non_negative(cell(5), "BATHS")?;
    let lotsize = non_negative(cell(6), "LOTSIZE")?;
    let sqft = number(cell(7), "SQFT")?;
    if !(sqft > 0.0) {
        return Err(format!("SQFT must be positive, got {sqft}"));
    }
    let garage = parse_flag(cell(8)).ok_or_else(|| format!("GARAGE: unrecognized value {:?}", cell(8)))?;
    let age = count(cell(9), "AGE")?;
    Ok(ListingRecord {
        mls_num,
        price,
        dom,
        zip,
        beds,
        baths,
        lotsize,
        sqft,
        garage,
        age,
    })
}

fn number(s: &str, column: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("{column}: not a number: {s:?}")),
    }
}

fn non_negative(s: &str, column: &str) -> std::result::Result<f64, String> {
    let v = number(s, column)?;
    if v < 0.0 {
        return Err(format!("{column} must be non-negative, got {v}"));
    }
    Ok(v)
}

fn count(s: &str, column: &str) -> std::result::Result<u32, String> {
    let v = non_negative(s, column)?;
    if v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(format!("{column} must be a non-negative integer, got {s:?}"));
    }
    Ok(v as u32)
}

/// Accepts 0/1 and yes/no/true/false (any case).
pub fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "yes" | "y" | "true" => Some(true),
        "0" | "no" | "n" | "false" => Some(false),
        _ => None,
    }
}

pub fn write_listings<W: Write>(writer: W, records: &[ListingRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(LISTING_COLUMNS)?;
    for r in records {
        w.write_record([
            r.mls_num.clone(),
            r.price.to_string(),
            r.dom.to_string(),
            r.zip.clone(),
            r.beds.to_string(),
            r.baths.to_string(),
            r.lotsize.to_string(),
            r.sqft.to_string(),
            (r.garage as u8).to_string(),
            r.age.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<listings>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "MLSNUM,SOLDPRICE,DOM,ZIP,BEDS,BATHS,LOTSIZE,SQFT,GARAGE,AGE\n";

    #[test]
    fn three_valid_rows() {
        let text = format!(
            "{HEADER}A1,500000,12,02116,3,2.5,4000,1800,yes,40\n\
             A2,350000,0,02118,2,1,0,900,0,12\n\
             A3,1200000,90,02445,5,3.5,12000,3500,TRUE,5\n"
        );
        let load = parse_listings(text.as_bytes()).unwrap();
        assert_eq!(load.records.len(), 3);
        assert!(load.errors.is_empty());
        assert_eq!(load.records[0].baths, 2.5);
        assert!(load.records[0].garage);
        assert!(!load.records[1].garage);
        assert_eq!(load.records[1].dom, 0);
        assert_eq!(load.records[0].zip_code(), Some(2116.0));
    }

    #[test]
    fn non_numeric_price_is_reported_with_line() {
        let text = format!("{HEADER}A1,N/A,12,02116,3,2,4000,1800,1,40\nA2,1,1,1,1,1,1,1,0,1\n");
        let load = parse_listings(text.as_bytes()).unwrap();
        assert_eq!(load.records.len(), 1);
        assert_eq!(load.errors.len(), 1);
        assert_eq!(load.errors[0].line, 2);
        assert!(load.errors[0].message.contains("SOLDPRICE"));
    }

    #[test]
    fn missing_column_names_it() {
        let text = "MLSNUM,SOLDPRICE,DOM,ZIP,BEDS,BATHS,LOTSIZE,GARAGE,AGE\n";
        let err = parse_listings(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("SQFT"), "{err}");
    }

    #[test]
    fn invariant_violations_rejected() {
        let text = format!(
            "{HEADER}A1,100,-1,1,1,1,1,1,0,1\nA2,100,1,1,1,1,1,0,0,1\nA3,100,1,1,1,1,1,1,maybe,1\nA4,100,1,1,1,1,1,1,0,1\nA4,100,1,1,1,1,1,1,0,1\n"
        );
        let load = parse_listings(text.as_bytes()).unwrap();
        assert_eq!(load.records.len(), 1);
        let lines: Vec<u64> = load.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 6]);
    }

    #[test]
    fn write_then_parse() {
        let text = format!("{HEADER}A1,500000,12,02116,3,2.5,4000,1800,1,40\n");
        let load = parse_listings(text.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_listings(&mut buf, &load.records).unwrap();
        let again = parse_listings(buf.as_slice()).unwrap();
        assert_eq!(again.records, load.records);
    }
}
