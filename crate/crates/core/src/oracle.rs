//! Brute-force reference computations on small instances.
//!
//! Nothing here reuses the production window or node code: Gaussian weights,
//! node coordinates and phases are recomputed from scratch so the checks stay
//! independent of the path they validate.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrands::Integrand;

/// Maximum number of exhaustive cases per oracle call.
pub const CASE_CAP: u128 = 10_000_000;

fn check_cap(cases: u128) -> Result<()> {
    if cases > CASE_CAP {
        return Err(Error::CaseCap { cases, cap: CASE_CAP });
    }
    Ok(())
}

/// Error-free two-sum accumulator (double-double).
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    pub fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (x - bp);
        let lo = self.lo + err;
        self.hi = s + lo;
        self.lo = lo - (self.hi - s);
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }

    /// `value - 1` without cancellation.
    pub fn minus_one(&self) -> f64 {
        (self.hi - 1.0) + self.lo
    }
}

/// A small problem size that exhaustive loops can afford.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallInstance {
    pub modulus: u64,
    pub dim: usize,
    pub half_width: usize,
    pub scale: f64,
}

impl SmallInstance {
    pub fn new(modulus: u64, dim: usize, half_width: usize, scale: f64) -> Result<Self> {
        if modulus > 101 || !crate::params::is_prime(modulus) {
            return Err(Error::InvalidParams(format!(
                "oracle modulus must be a prime <= 101, got {modulus}"
            )));
        }
        if dim == 0 || dim > 3 {
            return Err(Error::InvalidParams(format!("oracle dimension must be 1..=3, got {dim}")));
        }
        if 2 * half_width as u64 >= modulus || scale.is_nan() || scale <= 0.0 {
            return Err(Error::InvalidParams("oracle window needs 2L < N and r > 0".into()));
        }
        Ok(Self { modulus, dim, half_width, scale })
    }
}

fn density(x: f64, r: f64) -> f64 {
    1.0 / (r * (2.0 * PI).sqrt()) * (-x * x / (2.0 * r * r)).exp()
}

/// Truncated periodic Gaussian weight: density summed over images `l + kN`
/// with `|l + kN| <= L`, found by scanning `k` directly.
pub fn truncated_weight(l: i64, half_width: usize, scale: f64, modulus: u64) -> f64 {
    let n = modulus as i64;
    let lim = half_width as i64;
    let mut acc = DoubleDouble::default();
    let reach = lim / n + 2;
    for k in -reach..=reach {
        let x = l + k * n;
        if x.abs() <= lim {
            acc.add(density(x as f64, scale));
        }
    }
    acc.value()
}

/// Untruncated periodic Gaussian weight, images `|k| <= K` with the neglected
/// tail below 1e-16 relative.
pub fn periodic_weight(l: i64, scale: f64, modulus: u64) -> f64 {
    let n = modulus as f64;
    // exp(-x^2 / 2r^2) < 1e-18 once |x| > 9.1 r
    let reach = ((9.1 * scale) / n).ceil() as i64 + 1;
    let mut acc = DoubleDouble::default();
    for k in -reach..=reach {
        acc.add(density(l as f64 + k as f64 * n, scale));
    }
    acc.value()
}

/// High-precision total weight of the truncated window, returned as `mass - 1`.
pub fn window_mass_deficit(half_width: usize, scale: f64) -> f64 {
    let mut acc = DoubleDouble::default();
    // small terms first
    for l in (1..=half_width as i64).rev() {
        let g = density(l as f64, scale);
        acc.add(g);
        acc.add(g);
    }
    acc.add(density(0.0, scale));
    acc.minus_one()
}

/// Largest gap between truncated and untruncated periodic weights over `|l| <= L`.
pub fn window_truncation_gap(half_width: usize, scale: f64, modulus: u64) -> Result<f64> {
    if 2 * half_width as u128 >= modulus as u128 {
        return Err(Error::InvalidParams(format!(
            "truncation gap needs 2L < N (L={half_width}, N={modulus})"
        )));
    }
    let lim = half_width as i64;
    Ok((-lim..=lim)
        .map(|l| (truncated_weight(l, half_width, scale, modulus) - periodic_weight(l, scale, modulus)).abs())
        .fold(0.0, f64::max))
}

/// Closed form `sum_k exp(-2 (pi r (k + w/N))^2)` of the periodic Gaussian's
/// character sum.
pub fn periodic_character_sum(freq: i64, scale: f64, modulus: u64) -> f64 {
    let theta = freq.rem_euclid(modulus as i64) as f64 / modulus as f64;
    let mut acc = DoubleDouble::default();
    for k in -40i64..=40 {
        let u = PI * scale * (k as f64 + theta);
        acc.add((-2.0 * u * u).exp());
    }
    acc.value()
}

/// Direct `sum_{l in Z_N} G_{r,l} exp(2 pi i w l / N)` with untruncated weights.
pub fn periodic_response(freq: i64, scale: f64, modulus: u64) -> Complex64 {
    let n = modulus as i64;
    let mut re = DoubleDouble::default();
    let mut im = DoubleDouble::default();
    for l in 0..n {
        let g = periodic_weight(l, scale, modulus);
        let phase = 2.0 * PI * ((freq * l).rem_euclid(n) as f64) / n as f64;
        re.add(g * phase.cos());
        im.add(g * phase.sin());
    }
    Complex64::new(re.value(), im.value())
}

/// Direct truncated response `sum_{|l| <= L} G_{L,r,l} exp(2 pi i w l / N)`.
pub fn truncated_response(freq: i64, half_width: usize, scale: f64, modulus: u64) -> Complex64 {
    let n = modulus as i64;
    let lim = half_width as i64;
    let mut re = DoubleDouble::default();
    let mut im = DoubleDouble::default();
    for l in -lim..=lim {
        let g = truncated_weight(l, half_width, scale, modulus);
        let phase = 2.0 * PI * ((freq * l).rem_euclid(n) as f64) / n as f64;
        re.add(g * phase.cos());
        im.add(g * phase.sin());
    }
    Complex64::new(re.value(), im.value())
}

/// Exhaustive out-of-band statistics of the truncated window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BandRejection {
    /// max |truncated response| over frequencies at circular distance > `min_distance`.
    pub max_response: f64,
    /// Triangle-inequality bound: untruncated response + dropped periodic mass
    /// + truncation gap, maximised over the same frequencies.
    pub bound: f64,
    pub mass: f64,
}

pub fn band_rejection(
    half_width: usize,
    scale: f64,
    modulus: u64,
    min_distance: u64,
) -> Result<BandRejection> {
    check_cap(modulus as u128 * modulus as u128)?;
    let n = modulus as i64;
    let lim = half_width as i64;
    let dropped: f64 = (0..n)
        .filter(|&l| {
            let c = l.min(n - l);
            c > lim
        })
        .map(|l| periodic_weight(l, scale, modulus))
        .sum();
    let gap_total: f64 = (-lim..=lim)
        .map(|l| (truncated_weight(l, half_width, scale, modulus) - periodic_weight(l, scale, modulus)).abs())
        .sum();
    let mut max_response = 0.0f64;
    let mut bound = 0.0f64;
    for w in 0..n {
        if (w.min(n - w) as u64) <= min_distance {
            continue;
        }
        max_response = max_response.max(truncated_response(w, half_width, scale, modulus).norm());
        let untruncated = periodic_character_sum(w, scale, modulus).abs();
        bound = bound.max(untruncated + dropped + gap_total);
    }
    let mass = truncated_response(0, half_width, scale, modulus).re;
    Ok(BandRejection { max_response, bound, mass })
}

/// `(1/N^d) sum_{m in Z_N^d} f(m/N) exp(-2 pi i w . m / N)`.
pub fn dft_coefficient<F: Integrand + ?Sized>(f: &F, freq: &[i64], modulus: u64) -> Result<Complex64> {
    let d = f.dim();
    if freq.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: freq.len() });
    }
    let cases = (modulus as u128).pow(d as u32);
    check_cap(cases)?;
    let n = modulus as i64;
    let mut m = vec![0i64; d];
    let mut x = vec![0.0; d];
    let mut re = DoubleDouble::default();
    let mut im = DoubleDouble::default();
    for _ in 0..cases {
        for (xi, &mi) in x.iter_mut().zip(&m) {
            *xi = mi as f64 / n as f64;
        }
        let dot: i64 = freq.iter().zip(&m).map(|(&w, &mi)| w * mi).sum::<i64>().rem_euclid(n);
        let v = f.eval(&x) * Complex64::cis(-2.0 * PI * dot as f64 / n as f64);
        re.add(v.re);
        im.add(v.im);
        odometer(&mut m, n);
    }
    Ok(Complex64::new(re.value(), im.value()) / cases as f64)
}

fn odometer(digits: &mut [i64], base: i64) {
    for digit in digits.iter_mut() {
        *digit += 1;
        if *digit < base {
            return;
        }
        *digit = 0;
    }
}

/// Exact probability over `H` uniform on `[1,N)^d` that `H . w mod N` lies
/// in the closed band `[-N/B, N/B] (mod N)`.
pub fn dispersion_table(freq: &[i64], modulus: u64, band: f64) -> Result<f64> {
    let d = freq.len();
    let n = modulus as i64;
    if d == 0 || freq.iter().all(|&w| w.rem_euclid(n) == 0) {
        return Err(Error::InvalidParams("frequency must be nonzero mod N".into()));
    }
    let cases = ((modulus - 1) as u128).pow(d as u32);
    check_cap(cases)?;
    let half = modulus as f64 / band;
    let mut h = vec![1i64; d];
    let mut hits = 0u64;
    for _ in 0..cases {
        let s = h.iter().zip(freq).map(|(&a, &b)| a * b).sum::<i64>().rem_euclid(n);
        if (s.min(n - s) as f64) <= half {
            hits += 1;
        }
        // odometer over [1, N)
        for digit in h.iter_mut() {
            *digit += 1;
            if *digit < n {
                break;
            }
            *digit = 1;
        }
    }
    Ok(hits as f64 / cases as f64)
}

/// Exact first two moments of the unjittered filter estimate over all draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: Complex64,
    /// `E |X - mean|^2`
    pub variance: f64,
    pub cases: u64,
}

pub fn exhaustive_estimator_stats<F: Integrand + ?Sized>(f: &F, inst: &SmallInstance) -> Result<Moments> {
    if f.dim() != inst.dim {
        return Err(Error::DimensionMismatch { expected: inst.dim, actual: f.dim() });
    }
    let d = inst.dim;
    let n = inst.modulus as i64;
    let lim = inst.half_width as i64;
    let draws = ((n - 1) as u128).pow(d as u32) * (n as u128).pow(d as u32);
    check_cap(draws * (2 * lim as u128 + 1))?;
    let weights: Vec<f64> = (-lim..=lim)
        .map(|l| truncated_weight(l, inst.half_width, inst.scale, inst.modulus))
        .collect();
    let mut values = Vec::with_capacity(draws as usize);
    let mut h = vec![1i64; d];
    let mut x = vec![0.0; d];
    loop {
        let mut z = vec![0i64; d];
        loop {
            let mut re = DoubleDouble::default();
            let mut im = DoubleDouble::default();
            for (l, &g) in (-lim..=lim).zip(&weights) {
                for i in 0..d {
                    x[i] = (z[i] - l * h[i]).rem_euclid(n) as f64 / n as f64;
                }
                let v = f.eval(&x) * g;
                re.add(v.re);
                im.add(v.im);
            }
            values.push(Complex64::new(re.value(), im.value()));
            if next_digits(&mut z, 0, n) {
                break;
            }
        }
        if next_digits(&mut h, 1, n) {
            break;
        }
    }
    Ok(moments(&values))
}

/// Advances `digits` over `[lo, hi)^d`; returns true after the last tuple.
fn next_digits(digits: &mut [i64], lo: i64, hi: i64) -> bool {
    for digit in digits.iter_mut() {
        *digit += 1;
        if *digit < hi {
            return false;
        }
        *digit = lo;
    }
    true
}

/// Mean and `E|X - mean|^2` of a list of complex values.
pub fn moments(values: &[Complex64]) -> Moments {
    let count = values.len() as f64;
    let mut re = DoubleDouble::default();
    let mut im = DoubleDouble::default();
    for v in values {
        re.add(v.re);
        im.add(v.im);
    }
    let mean = Complex64::new(re.value() / count, im.value() / count);
    let mut var = DoubleDouble::default();
    for v in values {
        var.add((v - mean).norm_sqr());
    }
    Moments {
        mean,
        variance: var.value() / count,
        cases: values.len() as u64,
    }
}

/// Result of the exhaustive orthogonality check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Orthogonality {
    /// max over H and distinct (xi, eta) of |sum_z A_xi(z) conj(A_eta(z))| / norm.
    pub max_conjugated: f64,
    /// Same without the conjugate, for comparison.
    pub max_unconjugated: f64,
    /// Same without the conjugate, restricted to pairs with xi + eta != 0 mod N.
    pub max_unconjugated_non_opposite: f64,
    pub pairs_checked: u64,
}

/// For every `H` in `[1,N)^d` and distinct `xi, eta` in `Z_N^d`, sums over all
/// anchors `z` of the filtered characters
/// `A_xi(z) = sum_{|l|<=L} exp(2 pi i xi . (z - l H) / N) G_l`.
/// Values are normalised by `sqrt(sum|A_xi|^2 sum|A_eta|^2)`.
pub fn orthogonality(inst: &SmallInstance) -> Result<Orthogonality> {
    let d = inst.dim;
    let n = inst.modulus as i64;
    let lim = inst.half_width as i64;
    let grid = (n as u128).pow(d as u32);
    check_cap(((n - 1) as u128).pow(d as u32) * grid * grid)?;
    let weights: Vec<f64> = (-lim..=lim)
        .map(|l| truncated_weight(l, inst.half_width, inst.scale, inst.modulus))
        .collect();
    let tuples: Vec<Vec<i64>> = {
        let mut out = Vec::new();
        let mut t = vec![0i64; d];
        loop {
            out.push(t.clone());
            if next_digits(&mut t, 0, n) {
                break;
            }
        }
        out
    };
    let mut result = Orthogonality {
        max_conjugated: 0.0,
        max_unconjugated: 0.0,
        max_unconjugated_non_opposite: 0.0,
        pairs_checked: 0,
    };
    let mut h = vec![1i64; d];
    loop {
        // table[xi][z]
        let table: Vec<Vec<Complex64>> = tuples
            .iter()
            .map(|xi| {
                tuples
                    .iter()
                    .map(|z| {
                        let mut acc = Complex64::ZERO;
                        for (l, &g) in (-lim..=lim).zip(&weights) {
                            let dot: i64 = (0..d).map(|i| xi[i] * (z[i] - l * h[i])).sum::<i64>();
                            let r = dot.rem_euclid(n);
                            acc += Complex64::cis(2.0 * PI * r as f64 / n as f64) * g;
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let energy: Vec<f64> = table.iter().map(|a| a.iter().map(|v| v.norm_sqr()).sum()).collect();
        for (i, a) in table.iter().enumerate() {
            for (j, b) in table.iter().enumerate() {
                if i == j {
                    continue;
                }
                let norm = (energy[i] * energy[j]).sqrt();
                if norm == 0.0 {
                    continue;
                }
                let conj: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
                let plain: Complex64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                result.max_conjugated = result.max_conjugated.max(conj.norm() / norm);
                result.max_unconjugated = result.max_unconjugated.max(plain.norm() / norm);
                let opposite = (0..d).all(|c| (tuples[i][c] + tuples[j][c]).rem_euclid(n) == 0);
                if !opposite {
                    result.max_unconjugated_non_opposite =
                        result.max_unconjugated_non_opposite.max(plain.norm() / norm);
                }
                result.pairs_checked += 1;
            }
        }
        if next_digits(&mut h, 1, n) {
            break;
        }
    }
    Ok(result)
}

/// `P(Binomial(k, alpha) >= (k+1)/2)`, i.e. the probability that the median of
/// `k` independent estimates fails when each fails with probability `alpha`.
pub fn median_failure_probability(k: u32, alpha: f64) -> f64 {
    let need = k.div_ceil(2);
    let mut acc = DoubleDouble::default();
    for j in need..=k {
        acc.add(binomial(k, j) * alpha.powi(j as i32) * (1.0 - alpha).powi((k - j) as i32));
    }
    acc.value()
}

/// Tail bound `2^k alpha^(k/2)` on the median failure probability.
pub fn median_failure_bound(k: u32, alpha: f64) -> f64 {
    2f64.powi(k as i32) * alpha.powf(k as f64 / 2.0)
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// One line of the oracle report.
#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl OracleCheck {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

/// Runs every brute-force check against the production code and reports each.
pub fn run_suite() -> Vec<OracleCheck> {
    use crate::estimator::filter_sum;
    use crate::integrands::{BernoulliProduct, FnIntegrand};
    use crate::lattice::LatticeDraw;
    use crate::window::Window;

    let mut checks = Vec::new();

    // primality
    let n = 5_600_748_293_801u64;
    let trial = {
        let mut p = 2u64;
        let mut prime = true;
        while p * p <= n {
            if n.is_multiple_of(p) {
                prime = false;
                break;
            }
            p += 1;
        }
        prime
    };
    checks.push(OracleCheck::new(
        "experiment modulus is prime",
        trial && crate::params::is_prime(n),
        format!("N={n}: trial division {trial}"),
    ));

    // window mass vs high-precision oracle
    let mut worst = 0.0f64;
    for k in 5..=15u32 {
        for c in [0.228, 0.32, 0.42] {
            let l = 1usize << k;
            for r in [c * l as f64, c * (l / 2) as f64] {
                let w = Window::new(l, r, n).expect("valid window");
                worst = worst.max(((w.mass() - 1.0) - window_mass_deficit(l, r)).abs());
            }
        }
    }
    checks.push(OracleCheck::new(
        "window mass matches double-double sum",
        worst < 1e-13,
        format!("max disagreement {worst:.2e}"),
    ));

    // character-sum identity of the periodic Gaussian
    let mut worst = 0.0f64;
    for w in 0..101 {
        let direct = periodic_response(w, 5.0, 101);
        let closed = periodic_character_sum(w, 5.0, 101);
        worst = worst.max((direct - Complex64::new(closed, 0.0)).norm());
    }
    checks.push(OracleCheck::new(
        "periodic Gaussian character sum identity",
        worst < 1e-12,
        format!("N=101 r=5 max error {worst:.2e}"),
    ));

    // out-of-band rejection
    match band_rejection(20, 5.0, 101, 25) {
        Ok(b) => {
            let w = Window::new(20, 5.0, 101).expect("valid window");
            let production = (0..101i64)
                .filter(|&f| f.min(101 - f) > 25)
                .map(|f| w.band_response(f).norm())
                .fold(0.0, f64::max);
            let ok = production <= b.bound
                && (production - b.max_response).abs() < 1e-15
                && production * 1e3 <= w.mass();
            checks.push(OracleCheck::new(
                "out-of-band response",
                ok,
                format!("max {production:.3e}, bound {:.3e}, mass {:.6}", b.bound, w.mass()),
            ));
        }
        Err(e) => checks.push(OracleCheck::new("out-of-band response", false, e.to_string())),
    }

    // truncation gap
    match window_truncation_gap(20, 5.0, 101) {
        Ok(gap) => checks.push(OracleCheck::new(
            "truncated vs periodic weights",
            gap <= 1e-12 * density(0.0, 5.0),
            format!("N=101 L=20 r=5 gap {gap:.2e}"),
        )),
        Err(e) => checks.push(OracleCheck::new("truncated vs periodic weights", false, e.to_string())),
    }

    // orthogonality
    match SmallInstance::new(7, 2, 2, 1.2).and_then(|i| orthogonality(&i)) {
        Ok(o) => checks.push(OracleCheck::new(
            "orthogonality of filtered characters",
            o.max_conjugated <= 1e-9,
            format!(
                "N=7 d=2: conjugated {:.2e}, unconjugated {:.2e} ({} pairs)",
                o.max_conjugated, o.max_unconjugated, o.pairs_checked
            ),
        )),
        Err(e) => checks.push(OracleCheck::new("orthogonality of filtered characters", false, e.to_string())),
    }

    // hash dispersion
    let mut worst_ratio = 0.0f64;
    let mut failure = None;
    for d in 1..=2usize {
        for band in [5.0, 10.0, 20.0] {
            let mut w = vec![0i64; d];
            loop {
                if w.iter().any(|&c| c != 0) {
                    match dispersion_table(&w, 101, band) {
                        Ok(p) => worst_ratio = worst_ratio.max(p * band / 2.5),
                        Err(e) => failure = Some(e.to_string()),
                    }
                }
                if next_digits(&mut w, 0, 101) {
                    break;
                }
            }
        }
    }
    checks.push(OracleCheck::new(
        "hash dispersion <= 2.5/B",
        failure.is_none() && worst_ratio <= 1.0,
        failure.unwrap_or_else(|| format!("worst p*B/2.5 = {worst_ratio:.3}")),
    ));

    // median amplification
    let mut ok = true;
    for k in (3..=15).step_by(2) {
        for a in 1..=7 {
            let alpha = 0.05 * a as f64;
            ok &= median_failure_probability(k, alpha) <= median_failure_bound(k, alpha);
        }
    }
    let p = median_failure_probability(7, 0.2);
    checks.push(OracleCheck::new(
        "median failure <= 2^k alpha^(k/2)",
        ok && (p - 0.033344).abs() < 5e-7,
        format!("P(Bin(7,0.2) >= 4) = {p:.6}"),
    ));

    // estimator moments vs exhaustive enumeration
    let inst = SmallInstance::new(11, 1, 3, 2.0).expect("valid instance");
    let window = Window::new(3, 2.0, 11).expect("valid window");
    let mut worst = 0.0f64;
    for freq in 0..3 {
        let f = FnIntegrand::new(1, move |x: &[f64]| Complex64::cis(2.0 * PI * freq as f64 * x[0]));
        let oracle = exhaustive_estimator_stats(&f, &inst).expect("small instance");
        let mut values = Vec::new();
        for h in 1..11u64 {
            for z in 0..11u64 {
                let draw = LatticeDraw { shift: vec![h], anchor: vec![z] };
                values.push(filter_sum(&f, &window, &draw, None).expect("finite"));
            }
        }
        let prod = moments(&values);
        worst = worst
            .max((prod.mean - oracle.mean).norm())
            .max((prod.variance - oracle.variance).abs());
    }
    checks.push(OracleCheck::new(
        "estimator moments vs enumeration",
        worst <= 1e-12,
        format!("N=11 L=3 r=2 max deviation {worst:.2e}"),
    ));

    // grid DFT of f1 in one dimension: 1 - 1/(30 N^4) by aliasing
    let f1 = BernoulliProduct::new(1);
    match dft_coefficient(&f1, &[0], 101) {
        Ok(c) => {
            let expected = 1.0 - 1.0 / (30.0 * 101f64.powi(4));
            checks.push(OracleCheck::new(
                "grid DFT of f1 at 0",
                (c.re - expected).abs() < 1e-14 && c.im.abs() < 1e-14,
                format!("{:.15} vs {expected:.15}", c.re),
            ));
        }
        Err(e) => checks.push(OracleCheck::new("grid DFT of f1 at 0", false, e.to_string())),
    }

    checks
}
