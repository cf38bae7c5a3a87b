use serde::{Deserialize, Serialize};

use super::{DataError, RegionRecord, Result};
use crate::diagnostics::{ppv_n_positives, DiseaseModel, TestProfile};

/// Default number of decimals in rendered tables.
pub const DEFAULT_PRECISION: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub region: String,
    pub prevalence: f64,
    /// `ppv[n - 1]` is the posterior after `n` positive results, unrounded.
    pub ppv: Vec<f64>,
}

/// Posterior probability of disease after 1..=N positive tests, per region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub sensitivity: f64,
    pub specificity: f64,
    pub max_positives: u32,
    /// Decimal places used when rendering.
    pub precision: usize,
    pub rows: Vec<TableRow>,
}

pub fn build_table(
    records: &[RegionRecord],
    profile: &TestProfile,
    max_positives: u32,
) -> Result<TableReport> {
    if records.is_empty() {
        return Err(DataError::EmptyTable);
    }
    if max_positives == 0 {
        return Err(DataError::ZeroColumns);
    }
    let rows = records
        .iter()
        .map(|record| {
            let attribute = |source| DataError::Row { region: record.region.clone(), source };
            let disease = DiseaseModel::new(record.prevalence).map_err(attribute)?;
            let ppv = (1..=max_positives)
                .map(|n| ppv_n_positives(profile, &disease, n).map_err(attribute))
                .collect::<Result<Vec<f64>>>()?;
            Ok(TableRow { region: record.region.clone(), prevalence: record.prevalence, ppv })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TableReport {
        sensitivity: profile.sensitivity(),
        specificity: profile.specificity(),
        max_positives,
        precision: DEFAULT_PRECISION,
        rows,
    })
}
