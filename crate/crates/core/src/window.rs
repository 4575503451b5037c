//! Truncated periodic Gaussian filter weights.
//!
//! For `|l| <= L` the weight is the sum of Gaussian densities
//! `exp(-(l + kN)^2 / (2 r^2)) / (r sqrt(2 pi))` over every integer `k` with
//! `|l + kN| <= L`. Because `2L < N`, only `k = 0` is admissible, so the weight is
//! the plain Gaussian density at `l`. The window acts as a low-pass filter on the
//! hashed frequencies `H . w mod N`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sum::{ComplexSum, NeumaierSum};

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    half_width: usize,
    scale: f64,
    modulus: u64,
    // index l + L
    weights: Vec<f64>,
}

#[inline]
pub(crate) fn gaussian_density(x: f64, scale: f64) -> f64 {
    (-(x * x) / (2.0 * scale * scale)).exp() / (scale * (2.0 * PI).sqrt())
}

impl Window {
    pub fn new(half_width: usize, scale: f64, modulus: u64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParams(format!("window scale r={scale} must be positive")));
        }
        let l = half_width as i128;
        let n = modulus as i128;
        if 2 * l >= n {
            return Err(Error::InvalidParams(format!(
                "window needs 2L < N (L={half_width}, N={modulus})"
            )));
        }
        let mut half = Vec::with_capacity(half_width + 1);
        for j in 0..=l {
            // admissible k satisfy -L - j <= kN <= L - j
            let k_lo = (-l - j).div_euclid(n) + i128::from((-l - j).rem_euclid(n) != 0);
            let k_hi = (l - j).div_euclid(n);
            assert!(
                k_lo == 0 && k_hi == 0,
                "only the k = 0 image may fall inside the window when 2L < N"
            );
            let mut acc = NeumaierSum::new();
            for k in k_lo..=k_hi {
                acc.add(gaussian_density((j + k * n) as f64, scale));
            }
            half.push(acc.value());
        }
        let mut weights = Vec::with_capacity(2 * half_width + 1);
        weights.extend(half.iter().rev());
        weights.extend(&half[1..]);
        Ok(Self {
            half_width,
            scale,
            modulus,
            weights,
        })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Weight for node offset `l`, `|l| <= L`.
    #[inline]
    pub fn weight(&self, l: i64) -> f64 {
        self.weights[(l + self.half_width as i64) as usize]
    }

    /// All weights in order l = -L ..= L.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offsets(&self) -> impl Iterator<Item = i64> + '_ {
        -(self.half_width as i64)..=self.half_width as i64
    }

    /// Total weight over `|l| <= L`.
    pub fn mass(&self) -> f64 {
        self.weights.iter().copied().collect::<NeumaierSum>().value()
    }

    /// `sum_l G_l exp(2 pi i freq l / N)`; N-periodic in `freq`.
    pub fn band_response(&self, freq: i64) -> Complex64 {
        let n = self.modulus as i128;
        let f = (freq as i128).rem_euclid(n);
        let mut acc = ComplexSum::new();
        for (l, &g) in self.offsets().zip(&self.weights) {
            let residue = (f * l as i128).rem_euclid(n);
            let phase = 2.0 * PI * (residue as f64 / n as f64);
            acc.add(Complex64::from_polar(g, phase));
        }
        acc.value()
    }
}

pub fn build_window(half_width: usize, scale: f64, modulus: u64) -> Result<Window> {
    Window::new(half_width, scale, modulus)
}

pub fn window_mass(window: &Window) -> f64 {
    window.mass()
}

/// Circular distance of `freq` from 0 modulo `modulus`.
pub fn circular_distance(freq: i64, modulus: u64) -> u64 {
    let r = (freq as i128).rem_euclid(modulus as i128) as u64;
    r.min(modulus - r)
}
