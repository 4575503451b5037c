use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{mean_sq_errors, EstimateRecord, LevelError, SlopeFit};
use crate::error::{Error, Result};
use crate::params::ExperimentPlan;

/// JSON artifact written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub plan: ExperimentPlan,
    pub fit: Option<SlopeFit>,
    pub levels: Vec<LevelError>,
}

impl Summary {
    pub fn new(plan: &ExperimentPlan, records: &[EstimateRecord], fit: Option<SlopeFit>) -> Result<Self> {
        Ok(Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            plan: plan.clone(),
            fit,
            levels: mean_sq_errors(records)?,
        })
    }
}

pub fn emit_csv(records: &[EstimateRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    writer
        .write_record(super::CSV_HEADER.split(','))
        .map_err(csv_err)?;
    for rec in records {
        writer.serialize(rec).map_err(csv_err)?;
    }
    writer.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<EstimateRecord>> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    csv::Reader::from_path(path)
        .map_err(csv_err)?
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)
}

pub fn emit_json(summary: &Summary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(summary)
        .map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    fs::write(path, text + "\n").map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Reads a bare plan or the `plan` field of a summary.
pub fn load_plan(path: impl AsRef<Path>) -> Result<ExperimentPlan> {
    let path = path.as_ref();
    let json_err = |source| Error::Json { path: path.to_path_buf(), source };
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
    if let Some(plan) = value.get_mut("plan") {
        value = plan.take();
    }
    let plan: ExperimentPlan = serde_json::from_value(value).map_err(json_err)?;
    plan.validate()?;
    Ok(plan)
}
