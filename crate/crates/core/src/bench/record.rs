use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str =
    "function,d,N,k,L,r,M,t,run,estimate_re,estimate_im,sq_error,seed,wall_ms";

/// One estimate at one level and run. `L` and `r` are zero for the baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub function: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub modulus: u64,
    pub k: u32,
    #[serde(rename = "L")]
    pub half_width: usize,
    pub r: f64,
    /// Samples per estimate, repetitions excluded.
    #[serde(rename = "M")]
    pub sample_size: usize,
    pub t: usize,
    pub run: usize,
    pub estimate_re: f64,
    pub estimate_im: f64,
    pub sq_error: f64,
    pub seed: u64,
    pub wall_ms: f64,
}

impl EstimateRecord {
    /// Copy with the timing column zeroed, for replay comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_ms: 0.0,
            ..self.clone()
        }
    }
}
