use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EstimateRecord;
use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Mean squared error over the runs of one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelError {
    pub k: u32,
    #[serde(rename = "M")]
    pub sample_size: usize,
    pub runs: usize,
    pub mean_sq_error: f64,
}

/// Least-squares line through `(log2 M, log2 mean_sq_error)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub k_min: u32,
    pub k_max: u32,
}

pub fn mean_sq_errors(records: &[EstimateRecord]) -> Result<Vec<LevelError>> {
    let mut by_k: BTreeMap<u32, (usize, Vec<f64>)> = BTreeMap::new();
    for rec in records {
        let entry = by_k.entry(rec.k).or_insert((rec.sample_size, Vec::new()));
        if entry.0 != rec.sample_size {
            return Err(Error::Slope(format!(
                "level k={} mixes sample sizes {} and {}",
                rec.k, entry.0, rec.sample_size
            )));
        }
        entry.1.push(rec.sq_error);
    }
    Ok(by_k
        .into_iter()
        .map(|(k, (m, errs))| LevelError {
            k,
            sample_size: m,
            runs: errs.len(),
            mean_sq_error: errs.iter().copied().collect::<NeumaierSum>().value() / errs.len() as f64,
        })
        .collect())
}

pub fn fit_slope(records: &[EstimateRecord]) -> Result<SlopeFit> {
    let levels = mean_sq_errors(records)?;
    if levels.len() < 3 {
        return Err(Error::Slope(format!("need at least 3 levels, got {}", levels.len())));
    }
    if let Some(z) = levels.iter().find(|l| l.mean_sq_error.is_nan() || l.mean_sq_error <= 0.0 || l.mean_sq_error.is_infinite()) {
        return Err(Error::Slope(format!(
            "mean squared error at k={} is {}; log undefined",
            z.k, z.mean_sq_error
        )));
    }
    let points: Vec<(f64, f64)> = levels
        .iter()
        .map(|l| ((l.sample_size as f64).log2(), l.mean_sq_error.log2()))
        .collect();
    let (slope, intercept, r_squared) = fit_points(&points)?;
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        points: points.len(),
        k_min: levels[0].k,
        k_max: levels[levels.len() - 1].k,
    })
}

/// Ordinary least squares `y = slope x + intercept`; returns `(slope, intercept, R^2)`.
pub fn fit_points(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(Error::Slope("need at least 2 points".into()));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Slope("all sample sizes are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // a perfect horizontal line explains everything
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, intercept, r_squared))
}
