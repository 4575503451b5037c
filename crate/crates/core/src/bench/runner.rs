use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use super::EstimateRecord;
use crate::error::{Error, Result};
use crate::estimator::{complex_median, monte_carlo_estimate, plain_lattice_estimate, FilterEstimator};
use crate::integrands::{corpus, Integrand};
use crate::params::{ExperimentPlan, Method};
use crate::rng::{RngStream, StreamKey};

/// Runs every level of `plan`, sorted by `(k, run)`.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<EstimateRecord>> {
    let mut records = Vec::new();
    run_experiment_into(plan, &mut records)?;
    Ok(records)
}

/// Like [`run_experiment`] but appends level by level, so `records` keeps the
/// completed levels when a later one fails.
pub fn run_experiment_into(plan: &ExperimentPlan, records: &mut Vec<EstimateRecord>) -> Result<()> {
    plan.validate()?;
    let f = corpus(&plan.function, plan.d, plan.seed)?;
    let exact = f.exact_integral().ok_or_else(|| {
        Error::InvalidParams(format!("integrand `{}` has no stored exact integral", plan.function))
    })?;
    for k in plan.levels() {
        records.extend(run_level(plan, k, &*f, exact)?);
    }
    Ok(())
}

/// All runs of one level, in run order.
pub fn run_level<F: Integrand + ?Sized>(
    plan: &ExperimentPlan,
    k: u32,
    f: &F,
    exact: Complex64,
) -> Result<Vec<EstimateRecord>> {
    let level = plan.level(k)?;
    let filter = match plan.method {
        Method::Filter => Some(FilterEstimator::new(plan.params(k)?)?),
        _ => None,
    };
    (0..plan.runs)
        .into_par_iter()
        .map(|run| {
            let stream = RngStream::new(plan.seed, StreamKey::new(k as u64, run as u64, 0));
            let start = Instant::now();
            let value = match &filter {
                Some(est) => est.median_estimate(f, &stream)?.value,
                None => median_baseline(plan, level.sample_size, f, &stream)?,
            };
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            Ok(EstimateRecord {
                function: plan.function.clone(),
                d: plan.d,
                modulus: plan.modulus,
                k,
                half_width: level.half_width,
                r: level.scale,
                sample_size: level.sample_size,
                t: plan.t,
                run,
                estimate_re: value.re,
                estimate_im: value.im,
                sq_error: (value - exact).norm_sqr(),
                seed: plan.seed,
                wall_ms,
            })
        })
        .collect()
}

fn median_baseline<F: Integrand + ?Sized>(
    plan: &ExperimentPlan,
    samples: usize,
    f: &F,
    stream: &RngStream,
) -> Result<Complex64> {
    let values: Vec<Complex64> = (0..plan.t as u64)
        .into_par_iter()
        .map(|j| {
            let s = stream.repetition(j);
            match plan.method {
                Method::MonteCarlo => monte_carlo_estimate(f, samples, &s),
                _ => plain_lattice_estimate(f, samples as u64, &s, true),
            }
        })
        .collect::<Result<_>>()?;
    complex_median(&values)
}
