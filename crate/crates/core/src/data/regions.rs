use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, Result};

/// 2018 adult (15-49) HIV prevalence for eight world regions.
pub const BUNDLED_REGIONS_CSV: &str = include_str!("../../data/unaids_2018.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub region: String,
    pub prevalence: f64,
}

/// Reads a `region,prevalence` CSV file. Extra trailing columns are ignored.
pub fn load_regions(path: impl AsRef<Path>) -> Result<Vec<RegionRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    parse_regions(file)
}

pub fn bundled_regions() -> Vec<RegionRecord> {
    parse_regions(BUNDLED_REGIONS_CSV.as_bytes()).expect("bundled region file is valid")
}

pub fn parse_regions(input: impl Read) -> Result<Vec<RegionRecord>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers().map_err(|e| csv_error(&e, 1))?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names.len() < 2 || names[0] != "region" || names[1] != "prevalence" {
        return Err(DataError::Parse {
            line: 1,
            message: format!("expected header `region,prevalence`, found `{}`", names.join(",")),
        });
    }

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(&e, 0))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() < 2 {
            return Err(DataError::Parse { line, message: "expected 2 fields".into() });
        }
        let region = row[0].trim().to_string();
        let raw = row[1].trim();
        let prevalence: f64 = raw.parse().map_err(|_| DataError::Parse {
            line,
            message: format!("prevalence `{raw}` is not a number"),
        })?;
        if !(prevalence > 0.0 && prevalence < 1.0) {
            return Err(DataError::Domain {
                line,
                message: format!("prevalence {prevalence} is outside (0, 1)"),
            });
        }
        if !seen.insert(region.clone()) {
            return Err(DataError::Domain { line, message: format!("duplicate region `{region}`") });
        }
        records.push(RegionRecord { region, prevalence });
    }
    Ok(records)
}

fn csv_error(err: &csv::Error, fallback_line: u64) -> DataError {
    let line = err.position().map_or(fallback_line, |p| p.line());
    DataError::Parse { line, message: err.to_string() }
}
