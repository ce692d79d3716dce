//! Strictly increasing maps stored as dense sample tables.
//!
//! A [`MonotoneMap`] holds samples of an increasing function `g^{-1}` and
//! evaluates both it and its inverse `g` by linear interpolation, extending
//! the first and last segments linearly outside the sampled interval.

use thiserror::Error;

/// Sample count used when a map is tabulated from a closure.
pub const DEFAULT_MAP_SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("map is not strictly increasing at sample {index}")]
    NotIncreasing { index: usize },
    #[error("map needs at least 2 finite samples over a non-empty interval")]
    BadTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl MonotoneMap {
    pub fn from_samples(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, MapError> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(MapError::BadTable);
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(MapError::BadTable);
        }
        if let Some(index) = xs.windows(2).position(|w| w[1] <= w[0]) {
            return Err(MapError::NotIncreasing { index });
        }
        if let Some(index) = ys.windows(2).position(|w| w[1] <= w[0]) {
            return Err(MapError::NotIncreasing { index });
        }
        Ok(Self { xs, ys })
    }

    /// Tabulates `f` at `n` evenly spaced points of `[lo, hi]`.
    pub fn from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self, MapError> {
        if n < 2 || !(hi > lo) {
            return Err(MapError::BadTable);
        }
        let xs = linspace(lo, hi, n);
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::from_samples(xs, ys)
    }

    /// Tabulates `f` on `[lo, hi]` with [`DEFAULT_MAP_SAMPLES`] points.
    pub fn sample(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Result<Self, MapError> {
        Self::from_fn(lo, hi, DEFAULT_MAP_SAMPLES, f)
    }

    pub fn identity(lo: f64, hi: f64) -> Self {
        Self {
            xs: vec![lo, hi],
            ys: vec![lo, hi],
        }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// `g^{-1}(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        interp(&self.xs, &self.ys, x)
    }

    /// `g(y)`, the inverse of [`Self::eval`].
    pub fn eval_inverse(&self, y: f64) -> f64 {
        interp(&self.ys, &self.xs, y)
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

/// Piecewise-linear interpolation through strictly increasing `xs`.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let i = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let (y0, y1) = (ys[i - 1], ys[i]);
    if x == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}
