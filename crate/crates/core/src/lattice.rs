//! Hashed lattice draws and exact modular node generation.
//!
//! A draw is a shift vector `H` in `[1, N)^d` and an anchor `z` in `[0, N)^d`.
//! Node `l` is the grid point `m / N` with `m = (z - l H) mod N`, optionally
//! jittered uniformly inside its cell of side `1/N`.

use serde::{Deserialize, Serialize};

use crate::rng::{DrawSource, JitterSource};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeDraw {
    pub shift: Vec<u64>,
    pub anchor: Vec<u64>,
}

impl LatticeDraw {
    pub fn draw(modulus: u64, dim: usize, source: &mut DrawSource) -> Self {
        let shift = draw_shift(modulus, dim, source);
        let anchor = draw_anchor(modulus, dim, source);
        Self { shift, anchor }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// `true` if `1 <= H_i < N` and `0 <= z_i < N` for every coordinate.
    pub fn is_valid(&self, modulus: u64) -> bool {
        self.shift.len() == self.anchor.len()
            && self.shift.iter().all(|&h| h >= 1 && h < modulus)
            && self.anchor.iter().all(|&z| z < modulus)
    }
}

/// Integer coordinates `m` of the grid point `m / N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridNode(pub Vec<u64>);

/// `d` iid uniform integers in `[1, N)`.
pub fn draw_shift(modulus: u64, dim: usize, source: &mut DrawSource) -> Vec<u64> {
    (0..dim).map(|_| source.uniform_int(1, modulus)).collect()
}

/// `d` iid uniform integers in `[0, N)`.
pub fn draw_anchor(modulus: u64, dim: usize, source: &mut DrawSource) -> Vec<u64> {
    (0..dim).map(|_| source.uniform_int(0, modulus)).collect()
}

#[inline]
pub fn node_coordinate(anchor: u64, shift: u64, l: i64, modulus: u64) -> u64 {
    let n = modulus as i128;
    (anchor as i128 - l as i128 * shift as i128).rem_euclid(n) as u64
}

/// Grid node `(z - l H) mod N`, computed in 128-bit integers.
pub fn node(draw: &LatticeDraw, l: i64, modulus: u64) -> GridNode {
    GridNode(
        draw.anchor
            .iter()
            .zip(&draw.shift)
            .map(|(&z, &h)| node_coordinate(z, h, l, modulus))
            .collect(),
    )
}

/// `(m + u) / N` kept strictly inside `[m/N, (m+1)/N)`.
#[inline]
pub fn cell_point(m: u64, offset: f64, modulus: u64) -> f64 {
    let n = modulus as f64;
    let x = (m as f64 + offset) / n;
    let upper = (m + 1) as f64 / n;
    if x >= upper {
        f64::from_bits(upper.to_bits() - 1)
    } else {
        x
    }
}

/// Writes the node point into `out`, each coordinate offset by a fresh uniform
/// from `jitter` (or sitting on the grid when `jitter` is `None`).
pub fn jittered_point_into(
    node: &GridNode,
    modulus: u64,
    jitter: Option<&mut JitterSource>,
    out: &mut [f64],
) {
    match jitter {
        Some(source) => {
            for (x, &m) in out.iter_mut().zip(&node.0) {
                *x = cell_point(m, source.next_unit(), modulus);
            }
        }
        None => {
            for (x, &m) in out.iter_mut().zip(&node.0) {
                *x = cell_point(m, 0.0, modulus);
            }
        }
    }
}

pub fn jittered_point(node: &GridNode, modulus: u64, jitter: Option<&mut JitterSource>) -> Vec<f64> {
    let mut out = vec![0.0; node.0.len()];
    jittered_point_into(node, modulus, jitter, &mut out);
    out
}

/// Componentwise fractional part `x - floor(x)`, always in `[0, 1)`.
pub fn frac(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| frac_scalar(v)).collect()
}

#[inline]
pub fn frac_scalar(v: f64) -> f64 {
    let f = v - v.floor();
    // -1e-20 - floor(-1e-20) rounds to 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}
