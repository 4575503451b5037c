//! Randomized integration on `[0,1)^d` with hashed prime-modulus lattice nodes,
//! a truncated periodic Gaussian filter window, per-node jitter and median
//! amplification, plus baselines, brute-force checks and a benchmark runner.

pub mod bench;
pub mod error;
pub mod estimator;
pub mod integrands;
pub mod lattice;
pub mod oracle;
pub mod params;
pub mod rng;
pub mod sum;
pub mod window;

pub use error::{Error, Result};
pub use estimator::{
    complex_median, estimate_once, guarded_estimate, median_estimate, monte_carlo_estimate,
    periodize, plain_lattice_estimate, CompactSupport, Estimate, FilterEstimator, Periodized,
    SupportedFunction,
};
pub use integrands::{corpus, Integrand};
pub use lattice::{LatticeDraw, GridNode};
pub use params::{is_prime, make_params, next_prime, ExperimentPlan, Method, Params};
pub use rng::{RngStream, StreamKey};
pub use window::{build_window, window_mass, Window};

pub use num_complex::Complex64;
