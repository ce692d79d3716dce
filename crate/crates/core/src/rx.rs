//! Global Reed-Xiaoli (RX) detector: squared Mahalanobis distance of each
//! pixel from the scene mean under the scene covariance.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::subspace::scatter_rows;
use crate::types::{HsiCube, ScoreMap, TypeError};

/// Relative pivot floor below which the covariance is reported singular.
const PIVOT_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RxError {
    #[error("covariance is not positive definite after adding ridge {ridge:e}")]
    SingularCovariance { ridge: f64 },
    #[error("need at least 2 pixels to estimate a covariance, got {0}")]
    TooFewPixels(usize),
    #[error("ridge must be finite and non-negative, got {0}")]
    BadRidge(f64),
    #[error("signal length {got} does not match model dimension {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Type(#[from] TypeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RxModel {
    mean: DVector<f64>,
    covariance_inverse: DMatrix<f64>,
    ridge: f64,
}

impl RxModel {
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance_inverse(&self) -> &DMatrix<f64> {
        &self.covariance_inverse
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn bands(&self) -> usize {
        self.mean.len()
    }
}

/// `1e-6 * trace(cov) / D`.
pub fn default_ridge(covariance: &DMatrix<f64>) -> f64 {
    1e-6 * covariance.trace() / covariance.nrows() as f64
}

fn sample_covariance(cube: &HsiCube) -> Result<(DVector<f64>, DMatrix<f64>), RxError> {
    let n = cube.n_pixels();
    if n < 2 {
        return Err(RxError::TooFewPixels(n));
    }
    let d = cube.bands();
    let mut mean = vec![0.0; d];
    for px in cube.pixels() {
        for (m, x) in mean.iter_mut().zip(px) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let scatter = scatter_rows(cube.data(), d, Some(&mean));
    Ok((DVector::from_vec(mean), scatter / (n - 1) as f64))
}

/// Fits the global RX model. `ridge = None` uses [`default_ridge`].
pub fn fit_rx(cube: &HsiCube, ridge: Option<f64>) -> Result<RxModel, RxError> {
    if let Some(r) = ridge {
        if !(r.is_finite() && r >= 0.0) {
            return Err(RxError::BadRidge(r));
        }
    }
    let (mean, mut cov) = sample_covariance(cube)?;
    let ridge = ridge.unwrap_or_else(|| default_ridge(&cov));
    for i in 0..cov.nrows() {
        cov[(i, i)] += ridge;
    }
    let max_diag = cov.diagonal().max();
    let chol = cov.cholesky().ok_or(RxError::SingularCovariance { ridge })?;
    let min_pivot = chol.l_dirty().diagonal().map(|x| x * x).min();
    if !(max_diag > 0.0 && min_pivot > PIVOT_FLOOR * max_diag) {
        return Err(RxError::SingularCovariance { ridge });
    }
    let inv = chol.inverse();
    let covariance_inverse = (&inv + inv.transpose()) * 0.5;
    Ok(RxModel {
        mean,
        covariance_inverse,
        ridge,
    })
}

/// `(s - mu)^T Sigma^{-1} (s - mu)`, clamped at 0.
pub fn rx_score(s: &[f64], model: &RxModel) -> Result<f64, RxError> {
    if s.len() != model.bands() {
        return Err(RxError::LengthMismatch {
            expected: model.bands(),
            got: s.len(),
        });
    }
    let diff = DVector::from_column_slice(s) - &model.mean;
    Ok(diff.dot(&(&model.covariance_inverse * &diff)).max(0.0))
}

/// Fits on the whole cube and scores every pixel.
pub fn rx_score_cube(cube: &HsiCube, ridge: Option<f64>) -> Result<(ScoreMap, RxModel), RxError> {
    let model = fit_rx(cube, ridge)?;
    let scores: Vec<f64> = (0..cube.n_pixels())
        .into_par_iter()
        .map(|i| rx_score(cube.pixel_values(i), &model))
        .collect::<Result<_, _>>()?;
    Ok((ScoreMap::new(cube.rows(), cube.cols(), scores, "rx")?, model))
}
