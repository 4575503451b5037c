//! Test integrands on `[0,1)^d` and the tent transform.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A pure function on `[0,1)^d`. Implementations must tolerate concurrent calls.
pub trait Integrand: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> Complex64;

    /// Known value of the integral over the unit cube, if any.
    fn exact_integral(&self) -> Option<Complex64> {
        None
    }
}

impl<T: Integrand + ?Sized> Integrand for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        (**self).eval(x)
    }

    fn exact_integral(&self) -> Option<Complex64> {
        (**self).exact_integral()
    }
}

impl<T: Integrand + ?Sized> Integrand for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        (**self).eval(x)
    }

    fn exact_integral(&self) -> Option<Complex64> {
        (**self).exact_integral()
    }
}

/// Adapter turning a closure into an [`Integrand`].
pub struct FnIntegrand<F> {
    dim: usize,
    exact: Option<Complex64>,
    f: F,
}

impl<F> FnIntegrand<F>
where
    F: Fn(&[f64]) -> Complex64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, exact: None, f }
    }

    pub fn with_exact(mut self, exact: Complex64) -> Self {
        self.exact = Some(exact);
        self
    }
}

impl<F> Integrand for FnIntegrand<F>
where
    F: Fn(&[f64]) -> Complex64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        (self.f)(x)
    }

    fn exact_integral(&self) -> Option<Complex64> {
        self.exact
    }
}

/// Constant integrand.
pub struct Constant {
    pub dim: usize,
    pub value: Complex64,
}

impl Integrand for Constant {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _x: &[f64]) -> Complex64 {
        self.value
    }

    fn exact_integral(&self) -> Option<Complex64> {
        Some(self.value)
    }
}

/// Bernoulli polynomial of degree 4.
#[inline]
pub fn bernoulli_b4(x: f64) -> f64 {
    let x2 = x * x;
    x2 * x2 - 2.0 * x2 * x + x2 - 1.0 / 30.0
}

/// Componentwise `1 - |2x - 1|`.
pub fn tent_transform(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| tent(v)).collect()
}

#[inline]
pub fn tent(v: f64) -> f64 {
    1.0 - (2.0 * v - 1.0).abs()
}

/// `prod_j [1 + B4(x_j) / j^4]`, integral 1.
pub struct BernoulliProduct {
    weights: Vec<f64>,
}

impl BernoulliProduct {
    pub fn new(dim: usize) -> Self {
        Self {
            weights: (1..=dim).map(|j| 1.0 / (j as f64).powi(4)).collect(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(x)
            .map(|(w, &xi)| 1.0 + w * bernoulli_b4(xi))
            .product()
    }
}

impl Integrand for BernoulliProduct {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.value(x), 0.0)
    }

    fn exact_integral(&self) -> Option<Complex64> {
        Some(Complex64::new(1.0, 0.0))
    }
}

/// `prod_j [1 + (|4 x_j - 2| - 1) / j^2] - 1`, integral 0.
pub struct KinkProduct {
    weights: Vec<f64>,
}

impl KinkProduct {
    pub fn new(dim: usize) -> Self {
        Self {
            weights: (1..=dim).map(|j| 1.0 / (j as f64).powi(2)).collect(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let p: f64 = self
            .weights
            .iter()
            .zip(x)
            .map(|(w, &xi)| 1.0 + w * ((4.0 * xi - 2.0).abs() - 1.0))
            .product();
        p - 1.0
    }
}

impl Integrand for KinkProduct {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.value(x), 0.0)
    }

    fn exact_integral(&self) -> Option<Complex64> {
        Some(Complex64::ZERO)
    }
}

/// Indicator of `sum_i x_i >= d/2`, integral 1/2; optionally composed with the tent map.
pub struct HalfSpaceIndicator {
    dim: usize,
    tent: bool,
}

impl HalfSpaceIndicator {
    pub fn new(dim: usize) -> Self {
        Self { dim, tent: false }
    }

    pub fn with_tent(dim: usize) -> Self {
        Self { dim, tent: true }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let s: f64 = if self.tent {
            x.iter().map(|&v| tent(v)).sum()
        } else {
            x.iter().sum()
        };
        if s >= self.dim as f64 / 2.0 {
            1.0
        } else {
            0.0
        }
    }
}

impl Integrand for HalfSpaceIndicator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.value(x), 0.0)
    }

    fn exact_integral(&self) -> Option<Complex64> {
        Some(Complex64::new(0.5, 0.0))
    }
}

/// Any integrand composed with the tent map; the integral is unchanged.
pub struct TentTransformed<I>(pub I);

impl<I: Integrand> Integrand for TentTransformed<I> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        self.0.eval(&tent_transform(x))
    }

    fn exact_integral(&self) -> Option<Complex64> {
        self.0.exact_integral()
    }
}

/// Trigonometric polynomial `a0 + sum_j a_j exp(2 pi i w_j . x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTrig {
    dim: usize,
    pub mean: Complex64,
    pub frequencies: Vec<Vec<i64>>,
    pub coefficients: Vec<Complex64>,
}

impl SparseTrig {
    pub fn new(
        dim: usize,
        mean: Complex64,
        frequencies: Vec<Vec<i64>>,
        coefficients: Vec<Complex64>,
    ) -> Result<Self> {
        if frequencies.len() != coefficients.len() {
            return Err(Error::InvalidParams("one coefficient per frequency".into()));
        }
        if let Some(w) = frequencies.iter().find(|w| w.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: w.len() });
        }
        Ok(Self { dim, mean, frequencies, coefficients })
    }

    pub fn l1_norm(&self) -> f64 {
        self.coefficients.iter().map(|a| a.norm()).sum()
    }
}

impl Integrand for SparseTrig {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        let mut acc = self.mean;
        for (w, a) in self.frequencies.iter().zip(&self.coefficients) {
            let phase: f64 = w.iter().zip(x).map(|(&wi, &xi)| wi as f64 * xi).sum();
            acc += a * Complex64::cis(2.0 * PI * phase);
        }
        acc
    }

    fn exact_integral(&self) -> Option<Complex64> {
        Some(self.mean)
    }
}

/// Random member of the sparse-frequency class: `k` distinct nonzero frequencies
/// in `(-max_freq, max_freq)^d`, coefficient magnitudes proportional to `1/j`
/// with uniform phases, scaled so that `sum |a_j| = l1`.
pub fn synth_sparse<R: Rng + ?Sized>(
    k: usize,
    max_freq: u32,
    l1: f64,
    dim: usize,
    mean: Complex64,
    rng: &mut R,
) -> Result<SparseTrig> {
    if max_freq == 0 || dim == 0 {
        return Err(Error::InvalidParams("need max_freq >= 1 and d >= 1".into()));
    }
    let side = 2.0 * max_freq as f64 - 1.0;
    let available = side.powi(dim as i32) - 1.0;
    if k as f64 > available {
        return Err(Error::InvalidParams(format!(
            "{k} frequencies requested but only {available} nonzero ones exist"
        )));
    }
    let bound = max_freq as i64 - 1;
    let mut frequencies: Vec<Vec<i64>> = Vec::with_capacity(k);
    let mut seen = std::collections::HashSet::new();
    while frequencies.len() < k {
        let w: Vec<i64> = (0..dim).map(|_| rng.random_range(-bound..=bound)).collect();
        if w.iter().all(|&c| c == 0) || !seen.insert(w.clone()) {
            continue;
        }
        frequencies.push(w);
    }
    let raw: Vec<Complex64> = (1..=k)
        .map(|j| Complex64::from_polar(1.0 / j as f64, 2.0 * PI * rng.random::<f64>()))
        .collect();
    let total: f64 = raw.iter().map(|a| a.norm()).sum();
    let coefficients = raw.into_iter().map(|a| a * (l1 / total)).collect();
    SparseTrig::new(dim, mean, frequencies, coefficients)
}

/// Integrand by CLI name: `f1`, `f2`, `f3`, `f3-tent`, or
/// `sparse:K=..,M=..,l1=..[,a0=..]` (the seed drives the sparse draw).
pub fn corpus(name: &str, dim: usize, seed: u64) -> Result<Box<dyn Integrand>> {
    if dim == 0 {
        return Err(Error::InvalidParams("dimension must be positive".into()));
    }
    match name {
        "f1" => Ok(Box::new(BernoulliProduct::new(dim))),
        "f2" => Ok(Box::new(KinkProduct::new(dim))),
        "f3" => Ok(Box::new(HalfSpaceIndicator::new(dim))),
        "f3-tent" => Ok(Box::new(HalfSpaceIndicator::with_tent(dim))),
        _ => {
            let spec = name
                .strip_prefix("sparse:")
                .ok_or_else(|| Error::UnknownIntegrand(name.to_string()))?;
            let (mut k, mut m, mut l1, mut a0) = (None, None, None, 1.0);
            for part in spec.split(',').filter(|p| !p.is_empty()) {
                let (key, value) = part
                    .split_once('=')
                    .ok_or_else(|| Error::UnknownIntegrand(name.to_string()))?;
                let bad = || Error::UnknownIntegrand(name.to_string());
                match key.trim() {
                    "K" => k = Some(value.trim().parse::<usize>().map_err(|_| bad())?),
                    "M" => m = Some(value.trim().parse::<u32>().map_err(|_| bad())?),
                    "l1" => l1 = Some(value.trim().parse::<f64>().map_err(|_| bad())?),
                    "a0" => a0 = value.trim().parse::<f64>().map_err(|_| bad())?,
                    _ => return Err(bad()),
                }
            }
            let (k, m, l1) = match (k, m, l1) {
                (Some(k), Some(m), Some(l1)) => (k, m, l1),
                _ => return Err(Error::UnknownIntegrand(name.to_string())),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7370_6172_7365);
            Ok(Box::new(synth_sparse(k, m, l1, dim, Complex64::new(a0, 0.0), &mut rng)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // n-point Gauss-Legendre on [0,1] by Newton iteration on P_n.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        let mut nodes = Vec::with_capacity(n);
        for i in 1..=n {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes.push(((x + 1.0) / 2.0, w / 2.0));
        }
        nodes
    }

    fn integrate(f: impl Fn(f64) -> f64, pieces: usize) -> f64 {
        let rule = gauss_legendre(16);
        let h = 1.0 / pieces as f64;
        (0..pieces)
            .map(|p| rule.iter().map(|&(x, w)| w * h * f((p as f64 + x) * h)).sum::<f64>())
            .sum()
    }

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli_b4(0.0), -1.0 / 30.0);
        assert_eq!(bernoulli_b4(1.0), -1.0 / 30.0);
        assert!(integrate(bernoulli_b4, 1).abs() < 1e-15);
        assert!(integrate(bernoulli_b4, 7).abs() < 1e-15);
    }

    #[test]
    fn f1_values() {
        let f = BernoulliProduct::new(1);
        assert!((f.value(&[0.0]) - 29.0 / 30.0).abs() < 1e-15);
        let f = BernoulliProduct::new(2);
        let expected = (29.0 / 30.0) * (1.0 - 1.0 / (30.0 * 16.0));
        assert!((f.value(&[0.0, 0.0]) - expected).abs() < 1e-15);
    }

    #[test]
    fn f1_integral_by_quadrature_and_sampling() {
        let f = BernoulliProduct::new(3);
        // tensor quadrature is exact for the degree-4 factors
        let rule = gauss_legendre(8);
        let mut total = 0.0;
        for &(x, wx) in &rule {
            for &(y, wy) in &rule {
                for &(z, wz) in &rule {
                    total += wx * wy * wz * f.value(&[x, y, z]);
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mc: f64 = (0..n)
            .map(|_| f.value(&[rng.random(), rng.random(), rng.random()]))
            .sum::<f64>()
            / n as f64;
        // sd of f1 around 1 is below 0.02 here
        assert!((mc - 1.0).abs() < 5.0 * 0.02 / (n as f64).sqrt());
    }

    #[test]
    fn f2_values_and_integral() {
        let f = KinkProduct::new(1);
        assert_eq!(f.value(&[0.5]), -1.0);
        assert_eq!(f.value(&[0.0]), 1.0);
        // kink at 1/2: integrate on two pieces
        let g = |x: f64| (4.0 * x - 2.0).abs() - 1.0;
        assert!(integrate(g, 2).abs() < 1e-15);
    }

    #[test]
    fn f3_values() {
        let f = HalfSpaceIndicator::new(2);
        assert_eq!(f.value(&[0.5, 0.5]), 1.0);
        assert_eq!(HalfSpaceIndicator::new(1).value(&[0.49]), 0.0);
        assert_eq!(f.exact_integral(), Some(Complex64::new(0.5, 0.0)));
        let t = HalfSpaceIndicator::with_tent(2);
        assert_eq!(t.value(&[0.25, 0.75]), 1.0);
        assert_eq!(t.value(&[0.1, 0.9]), 0.0);
    }

    #[test]
    fn tent_values_and_measure() {
        assert_eq!(tent_transform(&[0.25, 0.0, 0.5]), vec![0.5, 0.0, 1.0]);
        let g = |u: f64| (3.0 * u).sin() + u * u * u;
        let direct = integrate(g, 1);
        let pulled = integrate(|x| g(tent(x)), 2);
        assert!((direct - pulled).abs() < 1e-14);
    }

    #[test]
    fn sparse_respects_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..10 {
            let f = synth_sparse(k, 3, 2.5, 4, Complex64::new(0.3, 0.0), &mut rng).unwrap();
            assert!(f.l1_norm() <= 2.5 + 1e-12);
            if k > 0 {
                assert!((f.l1_norm() - 2.5).abs() < 1e-12);
            }
            for w in &f.frequencies {
                assert!(w.iter().any(|&c| c != 0));
                assert!(w.iter().all(|&c| c.abs() < 3));
            }
        }
        let k0 = synth_sparse(0, 3, 1.0, 2, Complex64::new(0.7, 0.0), &mut rng).unwrap();
        assert_eq!(k0.eval(&[0.1, 0.2]), Complex64::new(0.7, 0.0));
        assert!(synth_sparse(3, 2, 1.0, 1, Complex64::ZERO, &mut rng).is_err());
        assert!(synth_sparse(2, 2, 1.0, 1, Complex64::ZERO, &mut rng).is_ok());
    }

    #[test]
    fn corpus_names() {
        for name in ["f1", "f2", "f3", "f3-tent", "sparse:K=3,M=4,l1=1"] {
            let f = corpus(name, 5, 1).unwrap();
            assert_eq!(f.dim(), 5);
            assert!(f.exact_integral().is_some());
            assert!(f.eval(&[0.1, 0.2, 0.3, 0.4, 0.5]).re.is_finite());
        }
        assert!(matches!(corpus("f9", 2, 0), Err(Error::UnknownIntegrand(_))));
        assert!(corpus("sparse:K=3", 2, 0).is_err());
        let a = corpus("sparse:K=3,M=4,l1=1,a0=0.25", 3, 9).unwrap();
        let b = corpus("sparse:K=3,M=4,l1=1,a0=0.25", 3, 9).unwrap();
        assert_eq!(a.eval(&[0.3, 0.1, 0.9]), b.eval(&[0.3, 0.1, 0.9]));
        assert_eq!(a.exact_integral(), Some(Complex64::new(0.25, 0.0)));
    }
}
