//! Run parameters, experiment plans and primality utilities for the modulus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus accepted anywhere in the crate.
pub const MAX_MODULUS: u64 = (1 << 63) - 1;

// Strong-pseudoprime witnesses; exact for every n < 3.3e24.
const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality test for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `>= n` that still fits in 63 bits.
pub fn next_prime(n: u64) -> Result<u64> {
    if n <= 2 {
        return Ok(2);
    }
    let mut candidate = n | 1;
    while candidate <= MAX_MODULUS {
        if is_prime(candidate) {
            return Ok(candidate);
        }
        candidate += 2;
    }
    Err(Error::PrimeOverflow(n))
}

/// Validated parameters for one filter estimate: dimension, prime modulus,
/// window half-width and scale, median repetitions and master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    dim: usize,
    modulus: u64,
    half_width: usize,
    scale: f64,
    repetitions: usize,
    seed: u64,
}

impl Params {
    pub fn new(
        dim: usize,
        modulus: u64,
        half_width: usize,
        scale: f64,
        repetitions: usize,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be positive".into()));
        }
        if modulus > MAX_MODULUS {
            return Err(Error::ModulusTooLarge(modulus));
        }
        if modulus < 3 || !is_prime(modulus) {
            return Err(Error::NotPrime(modulus));
        }
        if repetitions == 0 || repetitions.is_multiple_of(2) {
            return Err(Error::EvenRepetitions(repetitions));
        }
        if half_width == 0 {
            return Err(Error::InvalidParams("half-width L must be positive".into()));
        }
        if !scale.is_finite() || scale <= 1.0 {
            return Err(Error::InvalidParams(format!("scale r={scale} must exceed 1")));
        }
        if scale >= half_width as f64 {
            return Err(Error::InvalidParams(format!(
                "scale r={scale} must be below half-width L={half_width}"
            )));
        }
        if 2 * half_width as u128 >= modulus as u128 {
            return Err(Error::InvalidParams(format!(
                "2L={} must be below N={modulus}",
                2 * half_width as u128
            )));
        }
        Ok(Self {
            dim,
            modulus,
            half_width,
            scale,
            repetitions,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sample size M = 2L+1 of one estimate (repetitions excluded).
    pub fn sample_size(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Gaussian tail level implied by the truncation, exp(-(L/r)^2 / 2).
    pub fn window_epsilon(&self) -> f64 {
        let ratio = self.half_width as f64 / self.scale;
        (-0.5 * ratio * ratio).exp()
    }

    /// Diagnostic band parameter r / sqrt(log(1/eps)). Never used by the estimator.
    pub fn implied_band(&self) -> f64 {
        self.scale / (1.0 / self.window_epsilon()).ln().sqrt()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Free-function form of [`Params::new`].
pub fn make_params(
    dim: usize,
    modulus: u64,
    half_width: usize,
    scale: f64,
    repetitions: usize,
    seed: u64,
) -> Result<Params> {
    Params::new(dim, modulus, half_width, scale, repetitions, seed)
}

/// Which estimator an experiment drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Gaussian-filtered hashed lattice with median over `t` repetitions.
    #[default]
    Filter,
    /// Plain Monte Carlo with M = 2^k points.
    MonteCarlo,
    /// Equal-weight random lattice with M = next_prime(2^k) points.
    PlainLattice,
}

fn default_r_shift() -> i32 {
    1
}

/// A convergence experiment: one estimate per (k, run) for every k in `k_range`.
///
/// For the filter method level k uses `L = 2^k` and `r = c * 2^(k - r_shift)`.
/// The default `r_shift = 1` pairs `L = 2^(j+1)` with `r = c * 2^j`, which is the
/// schedule behind the published convergence plots; `r_shift = 0` gives `r = c * L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub function: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub modulus: u64,
    pub k_range: [u32; 2],
    pub c: f64,
    #[serde(default = "default_r_shift")]
    pub r_shift: i32,
    pub t: usize,
    pub runs: usize,
    pub seed: u64,
    #[serde(default)]
    pub method: Method,
}

/// Derived sizes for one level of a plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub k: u32,
    pub half_width: usize,
    pub scale: f64,
    pub sample_size: usize,
}

impl ExperimentPlan {
    pub fn levels(&self) -> impl Iterator<Item = u32> {
        self.k_range[0]..=self.k_range[1]
    }

    pub fn level(&self, k: u32) -> Result<Level> {
        if k > 40 {
            return Err(Error::InvalidParams(format!("level k={k} too large")));
        }
        let pow = 1usize << k;
        match self.method {
            Method::Filter => Ok(Level {
                k,
                half_width: pow,
                scale: self.c * 2f64.powi(k as i32 - self.r_shift),
                sample_size: 2 * pow + 1,
            }),
            Method::MonteCarlo => Ok(Level {
                k,
                half_width: 0,
                scale: 0.0,
                sample_size: pow,
            }),
            Method::PlainLattice => Ok(Level {
                k,
                half_width: 0,
                scale: 0.0,
                sample_size: next_prime(pow as u64)? as usize,
            }),
        }
    }

    /// Params for level `k` (filter method only).
    pub fn params(&self, k: u32) -> Result<Params> {
        let level = self.level(k)?;
        Params::new(
            self.d,
            self.modulus,
            level.half_width,
            level.scale,
            self.t,
            self.seed,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_range[0] > self.k_range[1] {
            return Err(Error::InvalidParams(format!(
                "empty k range {}..={}",
                self.k_range[0], self.k_range[1]
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidParams("runs must be positive".into()));
        }
        if self.d == 0 {
            return Err(Error::InvalidParams("dimension must be positive".into()));
        }
        if self.t == 0 || self.t.is_multiple_of(2) {
            return Err(Error::EvenRepetitions(self.t));
        }
        for k in self.levels() {
            match self.method {
                Method::Filter => {
                    self.params(k)?;
                }
                Method::MonteCarlo | Method::PlainLattice => {
                    self.level(k)?;
                }
            }
        }
        Ok(())
    }
}

/// Odd repetition count of order (s + 1/2) log L, the size suggested by the
/// error analysis for smoothness `s`. Informational; plans default to 63.
pub fn suggested_repetitions(smoothness: f64, half_width: usize) -> usize {
    let t = ((smoothness + 0.5) * (half_width.max(2) as f64).ln()).ceil() as usize;
    t.max(1) | 1
}
