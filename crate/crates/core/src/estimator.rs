//! Filter estimator, median amplification, the guarded periodized variant and
//! two baselines.
//!
//! One estimate draws a shift `H` and anchor `z`, visits the `2L+1` nodes
//! `(z - l H) mod N`, jitters each inside its grid cell and returns
//! `sum_l G_l f(x_l)`. Medians are taken componentwise over `t` independent
//! estimates.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrands::Integrand;
use crate::lattice::{cell_point, LatticeDraw};
use crate::params::{is_prime, Params};
use crate::rng::{JitterSource, RngStream, StreamKey};
use crate::sum::ComplexSum;
use crate::window::Window;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: Complex64,
    /// Number of integrand calls.
    pub evaluations: u64,
    /// The sample guard fired and the value was forced to zero.
    pub aborted: bool,
    pub seed: u64,
    pub key: StreamKey,
}

/// Walks the nodes `l = -L ..= L` of one draw, yielding jittered points.
struct NodeWalk<'a> {
    draw: &'a LatticeDraw,
    modulus: u64,
    coords: Vec<u64>,
    point: Vec<f64>,
}

impl<'a> NodeWalk<'a> {
    fn new(draw: &'a LatticeDraw, modulus: u64, first: i64) -> Self {
        let coords = draw
            .anchor
            .iter()
            .zip(&draw.shift)
            .map(|(&z, &h)| crate::lattice::node_coordinate(z, h, first, modulus))
            .collect();
        Self {
            draw,
            modulus,
            coords,
            point: vec![0.0; draw.dim()],
        }
    }

    /// Fills `point` for the current node.
    #[inline]
    fn fill(&mut self, jitter: Option<&mut JitterSource>) {
        let n = self.modulus;
        match jitter {
            Some(src) => {
                for (x, &m) in self.point.iter_mut().zip(&self.coords) {
                    *x = cell_point(m, src.next_unit(), n);
                }
            }
            None => {
                for (x, &m) in self.point.iter_mut().zip(&self.coords) {
                    *x = cell_point(m, 0.0, n);
                }
            }
        }
    }

    /// Moves from node `l` to `l + 1`: `m <- (m - H) mod N`.
    #[inline]
    fn advance(&mut self) {
        let n = self.modulus;
        for (m, &h) in self.coords.iter_mut().zip(&self.draw.shift) {
            *m = if *m >= h { *m - h } else { *m + (n - h) };
        }
    }
}

fn check_finite(value: Complex64, node: i64) -> Result<Complex64> {
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteIntegrand {
            value: value.to_string(),
            node,
        })
    }
}

/// Filter sum for a fixed draw. Jitter is taken from `jitter` in node order
/// (node index `l + L`, then coordinate), or disabled when `None`.
pub fn filter_sum<F: Integrand + ?Sized>(
    f: &F,
    window: &Window,
    draw: &LatticeDraw,
    mut jitter: Option<&mut JitterSource>,
) -> Result<Complex64> {
    if f.dim() != draw.dim() {
        return Err(Error::DimensionMismatch {
            expected: draw.dim(),
            actual: f.dim(),
        });
    }
    let half = window.half_width() as i64;
    if let Some(src) = jitter.as_deref_mut() {
        src.seek_node(0);
    }
    let mut walk = NodeWalk::new(draw, window.modulus(), -half);
    let mut acc = ComplexSum::new();
    for (l, &g) in window.offsets().zip(window.weights()) {
        walk.fill(jitter.as_deref_mut());
        let value = check_finite(f.eval(&walk.point), l)?;
        acc.add(value * g);
        walk.advance();
    }
    Ok(acc.value())
}

/// Filter estimator bound to validated parameters and a matching window.
#[derive(Debug, Clone)]
pub struct FilterEstimator {
    params: Params,
    window: Window,
    jitter: bool,
    guard_threshold: Option<u64>,
}

impl FilterEstimator {
    pub fn new(params: Params) -> Result<Self> {
        let window = Window::new(params.half_width(), params.scale(), params.modulus())?;
        Ok(Self {
            params,
            window,
            jitter: true,
            guard_threshold: None,
        })
    }

    /// Reuses a prebuilt window; it must match `(L, r, N)` of `params`.
    pub fn with_window(params: Params, window: Window) -> Result<Self> {
        if window.half_width() != params.half_width()
            || window.scale() != params.scale()
            || window.modulus() != params.modulus()
        {
            return Err(Error::InvalidParams("window does not match parameters".into()));
        }
        Ok(Self {
            params,
            window,
            jitter: true,
            guard_threshold: None,
        })
    }

    /// Disables jitter so nodes sit exactly on the grid.
    pub fn without_jitter(mut self) -> Self {
        self.jitter = false;
        self
    }

    /// Overrides the default guard threshold of `200L + 100` candidates.
    pub fn with_guard_threshold(mut self, threshold: u64) -> Self {
        self.guard_threshold = Some(threshold);
        self
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn guard_threshold(&self) -> u64 {
        self.guard_threshold
            .unwrap_or(200 * self.params.half_width() as u64 + 100)
    }

    fn draw(&self, stream: &RngStream) -> LatticeDraw {
        LatticeDraw::draw(self.params.modulus(), self.params.dim(), &mut stream.draws())
    }

    fn jitter_source(&self, stream: &RngStream) -> Option<JitterSource> {
        self.jitter.then(|| stream.jitter(self.params.dim()))
    }

    fn check_dim<F: Integrand + ?Sized>(&self, f: &F) -> Result<()> {
        if f.dim() != self.params.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.params.dim(),
                actual: f.dim(),
            });
        }
        Ok(())
    }

    /// One estimate with fresh `H`, `z` and jitter from `stream`.
    pub fn estimate_once<F: Integrand + ?Sized>(&self, f: &F, stream: &RngStream) -> Result<Estimate> {
        self.check_dim(f)?;
        let draw = self.draw(stream);
        let mut jitter = self.jitter_source(stream);
        let value = filter_sum(f, &self.window, &draw, jitter.as_mut())?;
        Ok(Estimate {
            value,
            evaluations: self.params.sample_size() as u64,
            aborted: false,
            seed: stream.seed(),
            key: stream.key(),
        })
    }

    /// Componentwise median of `t` independent estimates; repetition `j`
    /// uses `stream` with its repetition index set to `j`.
    pub fn median_estimate<F: Integrand + ?Sized>(&self, f: &F, stream: &RngStream) -> Result<Estimate> {
        self.median_of(stream, |s| self.estimate_once(f, s))
    }

    /// Median over `t` repetitions of the guarded periodized estimator.
    pub fn median_guarded_estimate(&self, f: &Periodized, stream: &RngStream) -> Result<Estimate> {
        self.median_of(stream, |s| self.guarded_estimate(f, s))
    }

    fn median_of<E>(&self, stream: &RngStream, once: E) -> Result<Estimate>
    where
        E: Fn(&RngStream) -> Result<Estimate> + Sync,
    {
        let t = self.params.repetitions();
        let reps: Vec<Estimate> = (0..t as u64)
            .into_par_iter()
            .map(|j| once(&stream.repetition(j)))
            .collect::<Result<_>>()?;
        let values: Vec<Complex64> = reps.iter().map(|e| e.value).collect();
        Ok(Estimate {
            value: complex_median(&values)?,
            evaluations: reps.iter().map(|e| e.evaluations).sum(),
            aborted: reps.iter().any(|e| e.aborted),
            seed: stream.seed(),
            key: stream.key().with_repetition(0),
        })
    }

    /// Estimate of the integral of a compactly supported function through its
    /// periodization. Candidate points are counted first without evaluating
    /// the function; above the guard threshold the result is zero.
    pub fn guarded_estimate(&self, f: &Periodized, stream: &RngStream) -> Result<Estimate> {
        self.check_dim(f)?;
        let draw = self.draw(stream);
        let mut jitter = self.jitter_source(stream);
        let half = self.params.half_width() as i64;
        let threshold = self.guard_threshold();
        let d = self.params.dim();

        let mut points = Vec::with_capacity(self.params.sample_size() * d);
        let mut walk = NodeWalk::new(&draw, self.params.modulus(), -half);
        let mut candidates = 0u64;
        let mut aborted = false;
        for _ in self.window.offsets() {
            walk.fill(jitter.as_mut());
            candidates += f.count_candidates(&walk.point, threshold + 1 - candidates);
            if candidates > threshold {
                aborted = true;
                break;
            }
            points.extend_from_slice(&walk.point);
            walk.advance();
        }
        if aborted {
            return Ok(Estimate {
                value: Complex64::ZERO,
                evaluations: 0,
                aborted: true,
                seed: stream.seed(),
                key: stream.key(),
            });
        }
        let mut acc = ComplexSum::new();
        let mut evaluations = 0u64;
        for ((l, &g), x) in self
            .window
            .offsets()
            .zip(self.window.weights())
            .zip(points.chunks_exact(d))
        {
            let (value, calls) = f.eval_counted(x);
            evaluations += calls;
            acc.add(check_finite(value, l)? * g);
        }
        debug_assert_eq!(evaluations, candidates);
        Ok(Estimate {
            value: acc.value(),
            evaluations,
            aborted: false,
            seed: stream.seed(),
            key: stream.key(),
        })
    }
}

pub fn estimate_once<F: Integrand + ?Sized>(
    f: &F,
    params: &Params,
    window: &Window,
    stream: &RngStream,
) -> Result<Estimate> {
    FilterEstimator::with_window(params.clone(), window.clone())?.estimate_once(f, stream)
}

pub fn median_estimate<F: Integrand + ?Sized>(
    f: &F,
    params: &Params,
    window: &Window,
    stream: &RngStream,
) -> Result<Estimate> {
    FilterEstimator::with_window(params.clone(), window.clone())?.median_estimate(f, stream)
}

pub fn guarded_estimate(
    f: &Periodized,
    params: &Params,
    window: &Window,
    stream: &RngStream,
) -> Result<Estimate> {
    FilterEstimator::with_window(params.clone(), window.clone())?.guarded_estimate(f, stream)
}

fn median_real(values: &mut [f64]) -> f64 {
    let mid = values.len() / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    *m
}

/// Median of the real parts plus `i` times the median of the imaginary parts.
pub fn complex_median(values: &[Complex64]) -> Result<Complex64> {
    if values.len().is_multiple_of(2) {
        return Err(Error::EvenMedianLength(values.len()));
    }
    let mut re: Vec<f64> = values.iter().map(|z| z.re).collect();
    let mut im: Vec<f64> = values.iter().map(|z| z.im).collect();
    Ok(Complex64::new(median_real(&mut re), median_real(&mut im)))
}

/// Equal-weight random lattice rule `(1/M) sum_{0 <= l < M} f((z - l H) / M)`
/// with `M` prime and per-node jitter.
pub fn plain_lattice_estimate<F: Integrand + ?Sized>(
    f: &F,
    modulus: u64,
    stream: &RngStream,
    jitter: bool,
) -> Result<Complex64> {
    if modulus < 2 || !is_prime(modulus) {
        return Err(Error::NotPrime(modulus));
    }
    let d = f.dim();
    let draw = LatticeDraw::draw(modulus, d, &mut stream.draws());
    let mut src = jitter.then(|| stream.jitter(d));
    let mut walk = NodeWalk::new(&draw, modulus, 0);
    let mut acc = ComplexSum::new();
    for l in 0..modulus as i64 {
        walk.fill(src.as_mut());
        acc.add(check_finite(f.eval(&walk.point), l)?);
        walk.advance();
    }
    Ok(acc.value() / modulus as f64)
}

/// Plain Monte Carlo mean over `samples` iid uniform points.
pub fn monte_carlo_estimate<F: Integrand + ?Sized>(
    f: &F,
    samples: usize,
    stream: &RngStream,
) -> Result<Complex64> {
    if samples == 0 {
        return Err(Error::InvalidParams("Monte Carlo needs at least one sample".into()));
    }
    let mut src = stream.uniforms();
    let mut x = vec![0.0; f.dim()];
    let mut acc = ComplexSum::new();
    for i in 0..samples {
        for xi in x.iter_mut() {
            *xi = src.next_unit();
        }
        acc.add(check_finite(f.eval(&x), i as i64)?);
    }
    Ok(acc.value() / samples as f64)
}

type Membership = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
type Function = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// Bounding box `[lo, hi)` plus a membership test for the support set.
/// The support is assumed to have volume 1.
#[derive(Clone)]
pub struct CompactSupport {
    lo: Vec<f64>,
    hi: Vec<f64>,
    membership: Membership,
}

impl std::fmt::Debug for CompactSupport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompactSupport")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish_non_exhaustive()
    }
}

impl CompactSupport {
    /// The support is the box itself.
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Self::new(lo, hi, |_| true)
    }

    /// The support is `{x in box : member(x)}`.
    pub fn new(
        lo: Vec<f64>,
        hi: Vec<f64>,
        member: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidParams("box bounds must have equal, positive length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::InvalidParams("box needs finite lo < hi on every axis".into()));
        }
        Ok(Self {
            lo,
            hi,
            membership: Arc::new(member),
        })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&a, &b))| v >= a && v < b)
            && (self.membership)(x)
    }

    /// Integer shift range `[first, last]` on `axis` with `k + x` inside the box.
    fn shift_range(&self, axis: usize, x: f64) -> (i64, i64) {
        let first = (self.lo[axis] - x).ceil() as i64;
        let last = (self.hi[axis] - x).ceil() as i64 - 1;
        (first, last)
    }

    fn max_shifts(&self, axis: usize) -> u64 {
        (self.hi[axis] - self.lo[axis]).ceil() as u64 + 1
    }
}

/// A function supported on a compact set, given on all of `R^d`.
#[derive(Clone)]
pub struct SupportedFunction {
    pub support: CompactSupport,
    f: Function,
    exact: Option<Complex64>,
}

impl SupportedFunction {
    pub fn new(
        support: CompactSupport,
        f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            support,
            f: Arc::new(f),
            exact: None,
        }
    }

    pub fn with_exact(mut self, exact: Complex64) -> Self {
        self.exact = Some(exact);
        self
    }
}

/// Default cap on integer shifts per axis admitted by a support box.
pub const DEFAULT_SHIFT_CAP: u64 = 4096;

/// Periodization `F(x) = sum_k f(k + x)` over the shifts that land in the support.
#[derive(Clone)]
pub struct Periodized {
    inner: SupportedFunction,
}

pub fn periodize(f: SupportedFunction, shift_cap: u64) -> Result<Periodized> {
    for axis in 0..f.support.dim() {
        let shifts = f.support.max_shifts(axis);
        if shifts > shift_cap {
            return Err(Error::TooManyShifts {
                axis,
                shifts,
                cap: shift_cap,
            });
        }
    }
    Ok(Periodized { inner: f })
}

impl Periodized {
    /// Calls `visit` on every `k + x` inside the support, stopping early when
    /// `visit` returns `false`.
    fn for_each_candidate(&self, x: &[f64], mut visit: impl FnMut(&[f64]) -> bool) {
        let support = &self.inner.support;
        let d = support.dim();
        let mut ranges = Vec::with_capacity(d);
        for (axis, &xi) in x.iter().enumerate() {
            let (first, last) = support.shift_range(axis, xi);
            if first > last {
                return;
            }
            ranges.push((first, last));
        }
        let mut shift: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        let mut y: Vec<f64> = x.iter().zip(&shift).map(|(&xi, &k)| xi + k as f64).collect();
        loop {
            if support.contains(&y) && !visit(&y) {
                return;
            }
            // odometer over the shift box
            let mut axis = 0;
            loop {
                if axis == d {
                    return;
                }
                if shift[axis] < ranges[axis].1 {
                    shift[axis] += 1;
                    y[axis] = x[axis] + shift[axis] as f64;
                    break;
                }
                shift[axis] = ranges[axis].0;
                y[axis] = x[axis] + shift[axis] as f64;
                axis += 1;
            }
        }
    }

    /// Number of support points `k + x`, counting at most `limit`.
    pub fn count_candidates(&self, x: &[f64], limit: u64) -> u64 {
        let mut count = 0u64;
        self.for_each_candidate(x, |_| {
            count += 1;
            count < limit
        });
        count
    }

    /// `F(x)` and the number of calls to the underlying function.
    pub fn eval_counted(&self, x: &[f64]) -> (Complex64, u64) {
        let mut acc = ComplexSum::new();
        let mut calls = 0;
        self.for_each_candidate(x, |y| {
            acc.add((self.inner.f)(y));
            calls += 1;
            true
        });
        (acc.value(), calls)
    }
}

impl Integrand for Periodized {
    fn dim(&self) -> usize {
        self.inner.support.dim()
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        self.eval_counted(x).0
    }

    fn exact_integral(&self) -> Option<Complex64> {
        self.inner.exact
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::atomic::{AtomicU64, Ordering};

    use proptest::prelude::*;

    use super::*;
    use crate::integrands::{Constant, FnIntegrand};
    use crate::oracle::{exhaustive_estimator_stats, moments, SmallInstance};

    fn params(d: usize, n: u64, l: usize, r: f64, t: usize) -> Params {
        Params::new(d, n, l, r, t, 7).unwrap()
    }

    fn stream(run: u64) -> RngStream {
        RngStream::new(42, StreamKey::new(3, run, 0))
    }

    #[test]
    fn constant_is_scaled_by_mass() {
        let est = FilterEstimator::new(params(3, 101, 8, 3.0, 5)).unwrap();
        let c = Complex64::new(1.5, -0.25);
        let f = Constant { dim: 3, value: c };
        for run in 0..20 {
            let e = est.estimate_once(&f, &stream(run)).unwrap();
            assert!((e.value - c * est.window().mass()).norm() < 1e-12);
            assert_eq!(e.evaluations, 17);
            assert!(!e.aborted);
            let m = est.median_estimate(&f, &stream(run)).unwrap();
            assert!((m.value - c * est.window().mass()).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_exhaustive_oracle() {
        let window = Window::new(3, 2.0, 11).unwrap();
        let inst = SmallInstance::new(11, 1, 3, 2.0).unwrap();
        let f = FnIntegrand::new(1, |x: &[f64]| Complex64::cis(2.0 * PI * x[0]));
        let mut values = Vec::new();
        for h in 1..11 {
            for z in 0..11 {
                let draw = LatticeDraw { shift: vec![h], anchor: vec![z] };
                values.push(filter_sum(&f, &window, &draw, None).unwrap());
            }
        }
        let ours = moments(&values);
        let oracle = exhaustive_estimator_stats(&f, &inst).unwrap();
        assert_eq!(ours.cases, 110);
        assert!((ours.mean - oracle.mean).norm() < 1e-12);
        assert!((ours.variance - oracle.variance).abs() < 1e-12);
    }

    #[test]
    fn linear_on_shared_stream() {
        let est = FilterEstimator::new(params(2, 1009, 16, 5.0, 1)).unwrap();
        let f = FnIntegrand::new(2, |x: &[f64]| Complex64::new(x[0] * x[1], x[0]));
        let g = FnIntegrand::new(2, |x: &[f64]| Complex64::cis(2.0 * PI * (x[0] - 3.0 * x[1])));
        let a = Complex64::new(0.5, 2.0);
        let h = FnIntegrand::new(2, |x: &[f64]| a * f.eval(x) + g.eval(x));
        for run in 0..10 {
            let s = stream(run);
            let lhs = est.estimate_once(&h, &s).unwrap().value;
            let rhs = a * est.estimate_once(&f, &s).unwrap().value + est.estimate_once(&g, &s).unwrap().value;
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn replays_and_single_repetition_median() {
        let est = FilterEstimator::new(params(4, 1009, 16, 5.0, 1)).unwrap();
        let f = crate::integrands::BernoulliProduct::new(4);
        let s = stream(0);
        let once = est.estimate_once(&f, &s).unwrap();
        assert_eq!(once, est.estimate_once(&f, &s).unwrap());
        let median = est.median_estimate(&f, &s).unwrap();
        assert_eq!(median.value, once.value);
        assert_ne!(once.value, est.estimate_once(&f, &stream(1)).unwrap().value);
    }

    #[test]
    fn jittered_estimate_is_unbiased() {
        let est = FilterEstimator::new(params(1, 101, 4, 1.5, 1)).unwrap();
        let f = FnIntegrand::new(1, |x: &[f64]| Complex64::new(x[0], 0.0));
        let runs = 4000;
        let mean: f64 = (0..runs)
            .map(|run| est.estimate_once(&f, &stream(run)).unwrap().value.re)
            .sum::<f64>()
            / runs as f64;
        let expected = 0.5 * est.window().mass();
        // single-estimate sd < 0.3
        assert!((mean - expected).abs() < 5.0 * 0.3 / (runs as f64).sqrt(), "{mean} vs {expected}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let est = FilterEstimator::new(params(2, 101, 4, 1.5, 3)).unwrap();
        let wrong_dim = Constant { dim: 3, value: Complex64::ONE };
        assert!(matches!(
            est.estimate_once(&wrong_dim, &stream(0)),
            Err(Error::DimensionMismatch { .. })
        ));
        let nan = FnIntegrand::new(2, |_: &[f64]| Complex64::new(f64::NAN, 0.0));
        assert!(matches!(
            est.estimate_once(&nan, &stream(0)),
            Err(Error::NonFiniteIntegrand { .. })
        ));
    }

    #[test]
    fn median_examples() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(complex_median(&[c(3.0, 0.0)]).unwrap(), c(3.0, 0.0));
        assert_eq!(
            complex_median(&[c(1.0, 2.0), c(3.0, 0.0), c(2.0, 5.0)]).unwrap(),
            c(2.0, 2.0)
        );
        let reals: Vec<_> = [-1.0, 0.0, 1.0, 2.0, 5.0].iter().map(|&x| c(x, 0.0)).collect();
        assert_eq!(complex_median(&reals).unwrap(), c(1.0, 0.0));
        assert!(matches!(complex_median(&[]), Err(Error::EvenMedianLength(0))));
        assert!(matches!(complex_median(&reals[..4]), Err(Error::EvenMedianLength(4))));
    }

    proptest! {
        #[test]
        fn median_permutation_and_shift(
            mut xs in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 1..40usize),
            shift in (-100.0f64..100.0, -100.0f64..100.0),
            seed in any::<u64>(),
        ) {
            if xs.len() % 2 == 0 {
                xs.pop();
            }
            let values: Vec<Complex64> = xs.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            let m = complex_median(&values).unwrap();
            let mut shuffled = values.clone();
            use rand::{seq::SliceRandom, SeedableRng};
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(complex_median(&shuffled).unwrap(), m);
            let s = Complex64::new(shift.0, shift.1);
            let moved: Vec<Complex64> = values.iter().map(|v| v + s).collect();
            let ms = complex_median(&moved).unwrap();
            prop_assert!((ms - (m + s)).norm() < 1e-9);
            let below = values.iter().filter(|v| v.re < m.re).count();
            let above = values.iter().filter(|v| v.re > m.re).count();
            prop_assert!(below <= values.len() / 2 && above <= values.len() / 2);
        }
    }

    fn one(_: &[f64]) -> Complex64 {
        Complex64::ONE
    }

    #[test]
    fn periodize_unit_cube_is_identity() {
        let support = CompactSupport::boxed(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let f = SupportedFunction::new(support, |x: &[f64]| Complex64::new(x[0] + 2.0 * x[1], 0.0));
        let p = periodize(f, DEFAULT_SHIFT_CAP).unwrap();
        for x in [[0.0, 0.0], [0.3, 0.9], [0.999, 0.5]] {
            let (v, calls) = p.eval_counted(&x);
            assert_eq!(calls, 1);
            assert_eq!(v.re, x[0] + 2.0 * x[1]);
        }
    }

    #[test]
    fn periodize_translated_cell_tiles() {
        let support = CompactSupport::boxed(vec![0.5], vec![1.5]).unwrap();
        let p = periodize(SupportedFunction::new(support, one), DEFAULT_SHIFT_CAP).unwrap();
        for i in 0..100 {
            let x = i as f64 / 100.0;
            assert_eq!(p.eval_counted(&[x]), (Complex64::ONE, 1));
        }
    }

    #[test]
    fn periodize_split_box() {
        let support = CompactSupport::boxed(vec![-0.5], vec![0.5]).unwrap();
        let f = SupportedFunction::new(support, |x: &[f64]| Complex64::new(x[0], 0.0));
        let p = periodize(f, DEFAULT_SHIFT_CAP).unwrap();
        assert_eq!(p.eval(&[0.25]).re, 0.25);
        assert_eq!(p.eval(&[0.75]).re, 0.75 - 1.0);
        assert_eq!(p.eval(&[0.5]).re, -0.5);
        assert_eq!(p.eval(&[0.0]).re, 0.0);
    }

    #[test]
    fn periodize_shift_cap() {
        let support = CompactSupport::boxed(vec![0.0, 0.0], vec![1.0, 1e5]).unwrap();
        assert!(matches!(
            periodize(SupportedFunction::new(support, one), DEFAULT_SHIFT_CAP),
            Err(Error::TooManyShifts { axis: 1, .. })
        ));
        assert!(CompactSupport::boxed(vec![0.0], vec![0.0]).is_err());
        assert!(CompactSupport::boxed(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn guard_never_fires_on_unit_cube() {
        let est = FilterEstimator::new(params(3, 101, 8, 3.0, 3)).unwrap();
        let support = CompactSupport::boxed(vec![0.0; 3], vec![1.0; 3]).unwrap();
        let p = periodize(
            SupportedFunction::new(support, |x: &[f64]| Complex64::new(x[0] * x[1] * x[2], 0.0)),
            DEFAULT_SHIFT_CAP,
        )
        .unwrap();
        for run in 0..50 {
            let g = est.guarded_estimate(&p, &stream(run)).unwrap();
            assert!(!g.aborted);
            assert_eq!(g.evaluations, 17);
            assert_eq!(g.value, est.estimate_once(&p, &stream(run)).unwrap().value);
        }
        assert_eq!(est.guard_threshold(), 200 * 8 + 100);
    }

    #[test]
    fn guard_aborts_before_evaluating() {
        let calls = Arc::new(AtomicU64::new(0));
        let counter = Arc::clone(&calls);
        let support = CompactSupport::boxed(vec![0.0, 0.0], vec![1.0, 1000.0]).unwrap();
        let f = SupportedFunction::new(support, move |_: &[f64]| {
            counter.fetch_add(1, Ordering::Relaxed);
            Complex64::ONE
        });
        let p = periodize(f, DEFAULT_SHIFT_CAP).unwrap();
        for l in [2, 4, 32] {
            let est = FilterEstimator::new(params(2, 1009, l, l as f64 / 2.0 + 0.5, 3)).unwrap();
            for run in 0..5 {
                let g = est.median_guarded_estimate(&p, &stream(run)).unwrap();
                assert!(g.aborted);
                assert_eq!(g.value, Complex64::ZERO);
                assert_eq!(g.evaluations, 0);
            }
        }
        assert_eq!(calls.load(Ordering::Relaxed), 0);
    }

    #[test]
    fn thin_slab_candidate_counts() {
        let support = CompactSupport::boxed(vec![0.0, 0.0], vec![1e-3, 1e3]).unwrap();
        let p = periodize(SupportedFunction::new(support, one), DEFAULT_SHIFT_CAP).unwrap();
        assert_eq!(p.count_candidates(&[0.0005, 0.3], u64::MAX), 1000);
        assert_eq!(p.count_candidates(&[0.5, 0.3], u64::MAX), 0);
        assert_eq!(p.count_candidates(&[0.0005, 0.3], 10), 10);
    }

    #[test]
    fn plain_lattice_examples() {
        let c = Constant { dim: 4, value: Complex64::new(2.0, 1.0) };
        for run in 0..5 {
            let v = plain_lattice_estimate(&c, 101, &stream(run), true).unwrap();
            assert!((v - c.value).norm() < 1e-14);
        }
        let e = FnIntegrand::new(1, |x: &[f64]| Complex64::cis(2.0 * PI * x[0]));
        for run in 0..20 {
            let v = plain_lattice_estimate(&e, 5, &stream(run), false).unwrap();
            assert!(v.norm() < 1e-15, "{v}");
        }
        assert!(matches!(plain_lattice_estimate(&e, 6, &stream(0), false), Err(Error::NotPrime(6))));
    }

    #[test]
    fn monte_carlo_examples() {
        let c = Constant { dim: 3, value: Complex64::new(-1.0, 0.5) };
        assert_eq!(monte_carlo_estimate(&c, 17, &stream(0)).unwrap(), c.value);
        let calls = AtomicU64::new(0);
        let f = FnIntegrand::new(2, |x: &[f64]| {
            calls.fetch_add(1, Ordering::Relaxed);
            Complex64::new(x[0], x[1])
        });
        let v = monte_carlo_estimate(&f, 1, &stream(0)).unwrap();
        assert_eq!(calls.load(Ordering::Relaxed), 1);
        assert!((0.0..1.0).contains(&v.re) && (0.0..1.0).contains(&v.im));
        assert!(monte_carlo_estimate(&f, 0, &stream(0)).is_err());
    }
}
