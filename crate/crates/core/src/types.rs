//! Shared domain types: spectra, cubes, masks and score maps.
//!
//! Every pixel-indexed container uses the same row-major flattening,
//! `i = r * cols + c`, so score maps, masks and cube pixels line up without
//! any further bookkeeping.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("non-finite value at pixel ({r}, {c}), band {band}")]
    NonFinite { r: usize, c: usize, band: usize },
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("empty cube: {0}")]
    EmptyCube(String),
    #[error("pixel ({r}, {c}) out of bounds for a {rows}x{cols} image")]
    OutOfBounds {
        r: usize,
        c: usize,
        rows: usize,
        cols: usize,
    },
    #[error("invalid domain [{lo}, {hi}]")]
    BadDomain { lo: f64, hi: f64 },
    #[error("non-finite score {value} at pixel index {index}")]
    BadScore { index: usize, value: f64 },
}

/// Closed interval over which the samples of a signal are uniformly spaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self, TypeError> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(TypeError::BadDomain { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn validate(&self) -> Result<(), TypeError> {
        Self::new(self.lo, self.hi).map(|_| ())
    }
}

/// One pixel's spectrum: `D >= 2` finite samples on a uniform band grid.
///
/// Sample `b` is read as the constant density on the bin
/// `[lo + b*h, lo + (b+1)*h]` with `h = width / D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSignal {
    values: Vec<f64>,
    domain: Domain,
}

impl SpectralSignal {
    pub fn new(values: Vec<f64>, domain: Domain) -> Result<Self, TypeError> {
        domain.validate()?;
        if values.len() < 2 {
            return Err(TypeError::BadShape(format!(
                "a signal needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(band) = values.iter().position(|v| !v.is_finite()) {
            return Err(TypeError::NonFinite { r: 0, c: 0, band });
        }
        Ok(Self { values, domain })
    }

    /// Signal on the default `[0, 1]` domain.
    pub fn unit(values: Vec<f64>) -> Result<Self, TypeError> {
        Self::new(values, Domain::default())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Width of one band bin.
    pub fn bin_width(&self) -> f64 {
        self.domain.width() / self.values.len() as f64
    }

    /// Rectangle-rule L1 norm, `sum |s_b| * h`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.bin_width()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A hyperspectral image stored band-interleaved-by-pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct HsiCube {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    bands: usize,
    band_domain: Domain,
    metadata: BTreeMap<String, String>,
}

impl HsiCube {
    /// Builds a cube from BIP data (`data[(r * cols + c) * bands + b]`).
    pub fn new(rows: usize, cols: usize, bands: usize, data: Vec<f64>) -> Result<Self, TypeError> {
        Self::with_domain(rows, cols, bands, data, Domain::default())
    }

    pub fn with_domain(
        rows: usize,
        cols: usize,
        bands: usize,
        data: Vec<f64>,
        band_domain: Domain,
    ) -> Result<Self, TypeError> {
        let cube = Self {
            data,
            rows,
            cols,
            bands,
            band_domain,
            metadata: BTreeMap::new(),
        };
        validate_cube(&cube)?;
        Ok(cube)
    }

    pub fn with_metadata(mut self, metadata: BTreeMap<String, String>) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn n_pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn band_domain(&self) -> Domain {
        self.band_domain
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn flatten_index(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    pub fn unflatten_index(&self, i: usize) -> (usize, usize) {
        (i / self.cols, i % self.cols)
    }

    /// Spectrum of the pixel at flattened index `i`.
    pub fn pixel_values(&self, i: usize) -> &[f64] {
        &self.data[i * self.bands..(i + 1) * self.bands]
    }

    pub fn pixel(&self, r: usize, c: usize) -> Result<SpectralSignal, TypeError> {
        pixel(self, r, c)
    }

    pub fn pixels(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.bands)
    }

    /// Keeps only the listed bands, in the listed order.
    pub fn select_bands(&self, keep: &[usize]) -> Result<Self, TypeError> {
        if let Some(&b) = keep.iter().find(|&&b| b >= self.bands) {
            return Err(TypeError::BadShape(format!(
                "band {b} not present in a {}-band cube",
                self.bands
            )));
        }
        let mut data = Vec::with_capacity(self.n_pixels() * keep.len());
        for px in self.pixels() {
            data.extend(keep.iter().map(|&b| px[b]));
        }
        let mut cube = Self::with_domain(self.rows, self.cols, keep.len(), data, self.band_domain)?;
        cube.metadata = self.metadata.clone();
        Ok(cube)
    }
}

/// Checks every [`HsiCube`] invariant, reporting the first offending location.
pub fn validate_cube(cube: &HsiCube) -> Result<(), TypeError> {
    if cube.rows == 0 || cube.cols == 0 {
        return Err(TypeError::EmptyCube(format!(
            "{}x{} pixels",
            cube.rows, cube.cols
        )));
    }
    if cube.bands < 2 {
        return Err(TypeError::BadShape(format!(
            "need at least 2 bands, got {}",
            cube.bands
        )));
    }
    let expected = cube.rows * cube.cols * cube.bands;
    if cube.data.len() != expected {
        return Err(TypeError::BadShape(format!(
            "expected {expected} values for {}x{}x{}, got {}",
            cube.rows,
            cube.cols,
            cube.bands,
            cube.data.len()
        )));
    }
    cube.band_domain.validate()?;
    if let Some(i) = cube.data.iter().position(|v| !v.is_finite()) {
        let px = i / cube.bands;
        return Err(TypeError::NonFinite {
            r: px / cube.cols,
            c: px % cube.cols,
            band: i % cube.bands,
        });
    }
    Ok(())
}

/// The spectrum at `(r, c)` with the cube's band domain.
pub fn pixel(cube: &HsiCube, r: usize, c: usize) -> Result<SpectralSignal, TypeError> {
    if r >= cube.rows || c >= cube.cols {
        return Err(TypeError::OutOfBounds {
            r,
            c,
            rows: cube.rows,
            cols: cube.cols,
        });
    }
    let i = cube.flatten_index(r, c);
    SpectralSignal::new(cube.pixel_values(i).to_vec(), cube.band_domain)
}

/// Per-pixel anomaly labels, `true` marks an anomaly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthMask {
    labels: Vec<bool>,
    rows: usize,
    cols: usize,
}

impl GroundTruthMask {
    pub fn new(rows: usize, cols: usize, labels: Vec<bool>) -> Result<Self, TypeError> {
        if labels.len() != rows * cols {
            return Err(TypeError::BadShape(format!(
                "mask of {}x{} needs {} labels, got {}",
                rows,
                cols,
                rows * cols,
                labels.len()
            )));
        }
        Ok(Self { labels, rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn anomaly_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.labels[r * self.cols + c]
    }
}

/// Per-pixel non-negative anomaly scores tagged with the detector that made them.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    scores: Vec<f64>,
    rows: usize,
    cols: usize,
    detector_id: String,
}

impl ScoreMap {
    pub fn new(
        rows: usize,
        cols: usize,
        scores: Vec<f64>,
        detector_id: impl Into<String>,
    ) -> Result<Self, TypeError> {
        if scores.len() != rows * cols {
            return Err(TypeError::BadShape(format!(
                "score map of {}x{} needs {} scores, got {}",
                rows,
                cols,
                rows * cols,
                scores.len()
            )));
        }
        if let Some((index, &value)) = scores
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(TypeError::BadScore { index, value });
        }
        Ok(Self {
            scores,
            rows,
            cols,
            detector_id: detector_id.into(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn detector_id(&self) -> &str {
        &self.detector_id
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.scores[r * self.cols + c]
    }
}
