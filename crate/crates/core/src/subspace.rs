//! Background subspace estimation and reconstruction-error scoring.
//!
//! The background subspace is spanned by the leading principal directions of
//! the *uncentered* matrix of flattened SCDT vectors, one row per pixel.
//! `k` is the smallest count whose squared singular values reach the energy
//! threshold. A pixel's score is its squared distance to that subspace,
//! `|v - B B^T v|^2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::scdt::{default_grid_size, scdt_forward_values, ScdtError, ScdtVector};
use crate::types::{HsiCube, ScoreMap, TypeError};

pub const DEFAULT_ENERGY_THRESHOLD: f64 = 0.9999;

/// Upper bound on the number of partial scatter matrices held at once.
const MAX_SCATTER_CHUNKS: usize = 64;
const MIN_CHUNK_ROWS: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubspaceError {
    #[error("need at least 2 samples to fit a subspace, got {0}")]
    TooFewSamples(usize),
    #[error("vector {index} has length {got}, expected {expected}")]
    InconsistentLength {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("data matrix is identically zero")]
    DegenerateData,
    #[error("energy threshold {0} is outside (0, 1]")]
    BadThreshold(f64),
    #[error("vector length {got} does not match basis dimension {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Transform(#[from] ScdtError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Row-major sample matrix, one flattened SCDT vector per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl FeatureMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SubspaceError> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (index, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(SubspaceError::InconsistentLength {
                    index,
                    expected: n_cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            data,
            n_rows: rows.len(),
            n_cols,
        })
    }

    pub fn from_flat(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self, SubspaceError> {
        if data.len() != n_rows * n_cols {
            return Err(SubspaceError::InconsistentLength {
                index: 0,
                expected: n_rows * n_cols,
                got: data.len(),
            });
        }
        Ok(Self {
            data,
            n_rows,
            n_cols,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.n_cols.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub energy_threshold: f64,
    /// Subtract the column mean before decomposing. Off by default: the
    /// score is a projection through the origin.
    pub centered: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            energy_threshold: DEFAULT_ENERGY_THRESHOLD,
            centered: false,
        }
    }
}

/// Orthonormal basis `B` (features x k) of the estimated background subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSubspace {
    basis: DMatrix<f64>,
    singular_values: Vec<f64>,
    energy_threshold: f64,
    mean: Option<Vec<f64>>,
}

impl BackgroundSubspace {
    pub fn k(&self) -> usize {
        self.basis.ncols()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Every singular value of the fit matrix, non-increasing.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn energy_threshold(&self) -> f64 {
        self.energy_threshold
    }

    /// Column mean removed before projection; `None` for the uncentered model.
    pub fn mean(&self) -> Option<&[f64]> {
        self.mean.as_deref()
    }

    /// Cumulative fraction of squared singular values after each component.
    pub fn energy_profile(&self) -> Vec<f64> {
        cumulative_energy(&self.singular_values)
    }
}

fn cumulative_energy(singular_values: &[f64]) -> Vec<f64> {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let mut acc = 0.0;
    singular_values
        .iter()
        .map(|s| {
            acc += s * s;
            if total > 0.0 {
                acc / total
            } else {
                0.0
            }
        })
        .collect()
}

/// Smallest `k` whose leading energies reach `threshold` of the total.
fn select_k(energies: &[f64], threshold: f64) -> usize {
    let total: f64 = energies.iter().sum();
    let target = threshold * total;
    let mut acc = 0.0;
    for (i, e) in energies.iter().enumerate() {
        acc += e;
        if acc >= target {
            return i + 1;
        }
    }
    energies.len()
}

/// `A^T A` summed over fixed row chunks and combined by a pairwise tree, so
/// the result does not depend on how rayon schedules the chunks.
fn scatter_matrix(a: &FeatureMatrix, mean: Option<&[f64]>) -> DMatrix<f64> {
    scatter_rows(&a.data, a.n_cols, mean)
}

/// [`scatter_matrix`] over a raw row-major slice with `p` columns.
pub(crate) fn scatter_rows(data: &[f64], p: usize, mean: Option<&[f64]>) -> DMatrix<f64> {
    let n_rows = data.len() / p;
    let chunk_rows = MIN_CHUNK_ROWS.max(n_rows.div_ceil(MAX_SCATTER_CHUNKS));
    let mut partials: Vec<DMatrix<f64>> = data
        .par_chunks(chunk_rows * p)
        .map(|chunk| {
            let n = chunk.len() / p;
            let mut block = DMatrix::from_row_slice(n, p, chunk);
            if let Some(mu) = mean {
                for mut row in block.row_iter_mut() {
                    for (x, m) in row.iter_mut().zip(mu) {
                        *x -= m;
                    }
                }
            }
            block.tr_mul(&block)
        })
        .collect();
    while partials.len() > 1 {
        partials = partials
            .chunks(2)
            .map(|pair| match pair {
                [x, y] => x + y,
                [x] => x.clone(),
                _ => unreachable!(),
            })
            .collect();
    }
    partials.pop().expect("at least one chunk")
}

fn column_mean(a: &FeatureMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; a.n_cols];
    for row in a.rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    let n = a.n_rows as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Eigenpairs sorted by descending eigenvalue; equal values keep their order.
fn sorted_eigen(sym: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Fits the background subspace with default options at `energy_threshold`.
pub fn fit_subspace(vectors: &[Vec<f64>], energy_threshold: f64) -> Result<BackgroundSubspace, SubspaceError> {
    let a = FeatureMatrix::from_rows(vectors)?;
    fit_subspace_matrix(
        &a,
        FitOptions {
            energy_threshold,
            ..FitOptions::default()
        },
    )
}

pub fn fit_subspace_matrix(a: &FeatureMatrix, options: FitOptions) -> Result<BackgroundSubspace, SubspaceError> {
    let threshold = options.energy_threshold;
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(SubspaceError::BadThreshold(threshold));
    }
    if a.n_rows < 2 {
        return Err(SubspaceError::TooFewSamples(a.n_rows));
    }
    if a.n_cols == 0 || a.data.iter().all(|&x| x == 0.0) {
        return Err(SubspaceError::DegenerateData);
    }
    let mean = options.centered.then(|| column_mean(a));

    let p = a.n_cols;
    let (energies, basis_full) = if p <= a.n_rows {
        let (values, vectors) = sorted_eigen(scatter_matrix(a, mean.as_deref()));
        (values, vectors)
    } else {
        // thin side is the pixel count: decompose the N x N Gram matrix
        let mut m = DMatrix::from_row_slice(a.n_rows, p, &a.data);
        if let Some(mu) = &mean {
            for mut row in m.row_iter_mut() {
                for (x, c) in row.iter_mut().zip(mu) {
                    *x -= c;
                }
            }
        }
        let gram = &m * m.transpose();
        let (values, u) = sorted_eigen(gram);
        let directions = m.tr_mul(&u);
        (values, directions)
    };
    let energies: Vec<f64> = energies.into_iter().map(|e| e.max(0.0)).collect();
    if energies.iter().sum::<f64>() <= 0.0 {
        return Err(SubspaceError::DegenerateData);
    }
    let k = select_k(&energies, threshold).max(1);
    let mut basis = basis_full.columns(0, k).into_owned();
    if p > a.n_rows {
        // A^T u_i / sigma_i, then re-orthonormalized
        basis = basis.qr().q();
    }
    let singular_values = energies.iter().map(|e| e.sqrt()).collect();
    Ok(BackgroundSubspace {
        basis,
        singular_values,
        energy_threshold: threshold,
        mean,
    })
}

/// Squared distance from `v` to the subspace, `|v|^2 - |B^T v|^2` clamped at 0.
pub fn anomaly_score(v: &[f64], model: &BackgroundSubspace) -> Result<f64, SubspaceError> {
    if v.len() != model.dim() {
        return Err(SubspaceError::LengthMismatch {
            expected: model.dim(),
            got: v.len(),
        });
    }
    let x = match &model.mean {
        Some(mu) => DVector::from_iterator(v.len(), v.iter().zip(mu).map(|(a, b)| a - b)),
        None => DVector::from_column_slice(v),
    };
    let coeffs = model.basis.tr_mul(&x);
    Ok((x.norm_squared() - coeffs.norm_squared()).max(0.0))
}

/// Settings for the SCDT subspace detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScdtDetector {
    /// Quantile grid size; `None` means twice the band count.
    pub grid_size: Option<usize>,
    pub energy_threshold: f64,
    /// Multiplier applied to both mass coordinates before fitting.
    pub mass_weight: f64,
    pub centered: bool,
}

impl Default for ScdtDetector {
    fn default() -> Self {
        Self {
            grid_size: None,
            energy_threshold: DEFAULT_ENERGY_THRESHOLD,
            mass_weight: 1.0,
            centered: false,
        }
    }
}

impl ScdtDetector {
    pub fn resolved_grid_size(&self, bands: usize) -> usize {
        self.grid_size.unwrap_or_else(|| default_grid_size(bands))
    }

    /// Flattened SCDT vector of every pixel, in canonical pixel order.
    pub fn transform_cube(&self, cube: &HsiCube) -> Result<FeatureMatrix, SubspaceError> {
        let m = self.resolved_grid_size(cube.bands());
        let p = ScdtVector::flat_len(m);
        let domain = cube.band_domain();
        let rows: Vec<Vec<f64>> = (0..cube.n_pixels())
            .into_par_iter()
            .map(|i| {
                scdt_forward_values(cube.pixel_values(i), domain, m)
                    .map(|v| v.to_flat_weighted(self.mass_weight))
            })
            .collect::<Result<_, _>>()?;
        let mut data = Vec::with_capacity(rows.len() * p);
        for r in &rows {
            data.extend_from_slice(r);
        }
        FeatureMatrix::from_flat(rows.len(), p, data)
    }

    pub fn score_cube(&self, cube: &HsiCube) -> Result<(ScoreMap, BackgroundSubspace), SubspaceError> {
        let features = self.transform_cube(cube)?;
        let model = fit_subspace_matrix(
            &features,
            FitOptions {
                energy_threshold: self.energy_threshold,
                centered: self.centered,
            },
        )?;
        let scores: Vec<f64> = (0..features.n_rows())
            .into_par_iter()
            .map(|i| anomaly_score(features.row(i), &model))
            .collect::<Result<_, _>>()?;
        let map = ScoreMap::new(cube.rows(), cube.cols(), scores, "scdt")?;
        Ok((map, model))
    }
}

/// Transforms every pixel, fits on all of them and scores each one.
pub fn score_cube(
    cube: &HsiCube,
    grid_size: usize,
    energy_threshold: f64,
) -> Result<(ScoreMap, BackgroundSubspace), SubspaceError> {
    ScdtDetector {
        grid_size: Some(grid_size),
        energy_threshold,
        ..ScdtDetector::default()
    }
    .score_cube(cube)
}
