//! Cumulative distribution transform (CDT) and its signed extension (SCDT).
//!
//! Samples are read as a piecewise-constant density on `D` uniform bins, so
//! the cumulative distribution is continuous and piecewise linear. The CDT of
//! a non-negative signal against the uniform reference on `[0, 1]` is the
//! quantile function of its normalized density, `s*(y) = S^{-1}(y)`, sampled
//! at the midpoints `y_j = (j + 1/2) / M`. On zero-density plateaus the
//! left-continuous inverse is used, i.e. the plateau's left endpoint.
//!
//! The SCDT splits a signed signal into `s = s+ - s-` and stores each part's
//! CDT together with its L1 mass. A part whose mass falls below
//! [`mass_epsilon`] is the zero part: all-zero profile, mass 0.

use thiserror::Error;

use crate::monotone::MonotoneMap;
use crate::types::{Domain, SpectralSignal, TypeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScdtError {
    #[error("negative input {value} at band {band}")]
    NegativeInput { band: usize, value: f64 },
    #[error("signal mass {mass:e} is below the zero-part threshold")]
    DegenerateMass { mass: f64 },
    #[error("quantile grid size {0} is smaller than 2")]
    BadGrid(usize),
    #[error("quantile profile decreases at index {index}")]
    BadProfile { index: usize },
    #[error(transparent)]
    Signal(#[from] TypeError),
}

/// Masses below this are treated as an exactly-zero part.
pub fn mass_epsilon(domain: Domain) -> f64 {
    1e-10 * domain.width()
}

/// Default quantile grid size for `D` bands.
pub fn default_grid_size(bands: usize) -> usize {
    2 * bands
}

/// Quantile-grid location `y_j = (j + 1/2) / M`.
pub fn grid_point(j: usize, m: usize) -> f64 {
    (j as f64 + 0.5) / m as f64
}

/// Samples of `s*(y) = S^{-1}(y)` on the midpoint grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CdtProfile {
    quantiles: Vec<f64>,
    domain: Domain,
}

impl CdtProfile {
    pub fn new(quantiles: Vec<f64>, domain: Domain) -> Result<Self, ScdtError> {
        if quantiles.len() < 2 {
            return Err(ScdtError::BadGrid(quantiles.len()));
        }
        if let Some(index) = quantiles.windows(2).position(|w| !(w[1] >= w[0])) {
            return Err(ScdtError::BadProfile { index });
        }
        Ok(Self { quantiles, domain })
    }

    pub fn zeros(m: usize, domain: Domain) -> Self {
        Self {
            quantiles: vec![0.0; m],
            domain,
        }
    }

    pub fn quantiles(&self) -> &[f64] {
        &self.quantiles
    }

    pub fn grid_size(&self) -> usize {
        self.quantiles.len()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }
}

/// `((s+)*, |s+|_1, (s-)*, |s-|_1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScdtVector {
    pub pos_quantiles: CdtProfile,
    pub pos_mass: f64,
    pub neg_quantiles: CdtProfile,
    pub neg_mass: f64,
}

impl ScdtVector {
    pub fn grid_size(&self) -> usize {
        self.pos_quantiles.grid_size()
    }

    /// Flattened length for grid size `m`.
    pub fn flat_len(m: usize) -> usize {
        2 * m + 2
    }

    /// `[pos_quantiles | pos_mass | neg_quantiles | neg_mass]`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.to_flat_weighted(1.0)
    }

    /// Flattens with both mass coordinates multiplied by `mass_weight`.
    pub fn to_flat_weighted(&self, mass_weight: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::flat_len(self.grid_size()));
        self.write_flat(mass_weight, &mut out);
        out
    }

    pub(crate) fn write_flat(&self, mass_weight: f64, out: &mut Vec<f64>) {
        out.extend_from_slice(self.pos_quantiles.quantiles());
        out.push(self.pos_mass * mass_weight);
        out.extend_from_slice(self.neg_quantiles.quantiles());
        out.push(self.neg_mass * mass_weight);
    }
}

/// Quantiles of the normalized piecewise-constant density `values` on `domain`.
///
/// `values` must be non-negative with positive total.
fn quantiles(values: &[f64], domain: Domain, m: usize) -> Vec<f64> {
    let d = values.len();
    let h = domain.width() / d as f64;
    let mut cum = Vec::with_capacity(d + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for &v in values {
        acc += v;
        cum.push(acc);
    }
    let total = acc;
    (0..m)
        .map(|j| {
            let target = grid_point(j, m) * total;
            // first bin whose right-edge cumulative reaches the target
            let b = cum[1..].partition_point(|&c| c < target).min(d - 1);
            let frac = if values[b] > 0.0 {
                ((target - cum[b]) / values[b]).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (domain.lo + (b as f64 + frac) * h).clamp(domain.lo, domain.hi)
        })
        .collect()
}

/// CDT of a non-negative signal with positive mass.
pub fn cdt_forward(s: &SpectralSignal, m: usize) -> Result<CdtProfile, ScdtError> {
    if m < 2 {
        return Err(ScdtError::BadGrid(m));
    }
    if let Some((band, &value)) = s.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(ScdtError::NegativeInput { band, value });
    }
    let mass = s.values().iter().sum::<f64>() * s.bin_width();
    if !(mass >= mass_epsilon(s.domain())) {
        return Err(ScdtError::DegenerateMass { mass });
    }
    Ok(CdtProfile {
        quantiles: quantiles(s.values(), s.domain(), m),
        domain: s.domain(),
    })
}

fn part_transform(part: &[f64], domain: Domain, m: usize) -> (CdtProfile, f64) {
    let h = domain.width() / part.len() as f64;
    let mass = part.iter().sum::<f64>() * h;
    if mass < mass_epsilon(domain) {
        (CdtProfile::zeros(m, domain), 0.0)
    } else {
        (
            CdtProfile {
                quantiles: quantiles(part, domain, m),
                domain,
            },
            mass,
        )
    }
}

/// SCDT of an arbitrary finite signal.
pub fn scdt_forward(s: &SpectralSignal, m: usize) -> Result<ScdtVector, ScdtError> {
    scdt_forward_values(s.values(), s.domain(), m)
}

/// [`scdt_forward`] on a raw sample slice, skipping the signal wrapper.
pub fn scdt_forward_values(values: &[f64], domain: Domain, m: usize) -> Result<ScdtVector, ScdtError> {
    if m < 2 {
        return Err(ScdtError::BadGrid(m));
    }
    if values.len() < 2 {
        return Err(TypeError::BadShape(format!("signal has {} samples", values.len())).into());
    }
    let pos: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    let neg: Vec<f64> = values.iter().map(|&v| (-v).max(0.0)).collect();
    let (pos_quantiles, pos_mass) = part_transform(&pos, domain, m);
    let (neg_quantiles, neg_mass) = part_transform(&neg, domain, m);
    Ok(ScdtVector {
        pos_quantiles,
        pos_mass,
        neg_quantiles,
        neg_mass,
    })
}

/// Rebuilds a non-negative signal on `out_bins` bins from a CDT profile.
///
/// The quantile samples define a piecewise-linear CDF through `(q_j, y_j)`,
/// anchored at 0 and 1 half a quantile spacing beyond the end samples
/// (clamped to the domain). Each bin receives `mass` times the CDF increment
/// across it.
pub fn cdt_inverse(profile: &CdtProfile, mass: f64, out_bins: usize) -> Result<SpectralSignal, ScdtError> {
    let domain = profile.domain();
    if out_bins < 2 {
        return Err(TypeError::BadShape(format!("{out_bins} output bins")).into());
    }
    if let Some(index) = profile.quantiles.windows(2).position(|w| !(w[1] >= w[0])) {
        return Err(ScdtError::BadProfile { index });
    }
    if !(mass >= 0.0 && mass.is_finite()) {
        return Err(ScdtError::DegenerateMass { mass });
    }
    if mass == 0.0 {
        return Ok(SpectralSignal::new(vec![0.0; out_bins], domain)?);
    }

    let q = &profile.quantiles;
    let m = q.len();
    let first = (q[0] - (q[1] - q[0]) / 2.0).clamp(domain.lo, q[0]);
    let last = (q[m - 1] + (q[m - 1] - q[m - 2]) / 2.0).clamp(q[m - 1], domain.hi);
    let mut kx = Vec::with_capacity(m + 2);
    let mut ky = Vec::with_capacity(m + 2);
    kx.push(first);
    ky.push(0.0);
    for (j, &qj) in q.iter().enumerate() {
        kx.push(qj);
        ky.push(grid_point(j, m));
    }
    kx.push(last);
    ky.push(1.0);

    let cdf = |x: f64| -> f64 {
        if x <= kx[0] {
            return 0.0;
        }
        if x >= kx[kx.len() - 1] {
            return 1.0;
        }
        let i = kx.partition_point(|&v| v <= x) - 1;
        let (x0, x1) = (kx[i], kx[i + 1]);
        ky[i] + (ky[i + 1] - ky[i]) * (x - x0) / (x1 - x0)
    };

    let h = domain.width() / out_bins as f64;
    let mut prev = cdf(domain.lo);
    let values = (0..out_bins)
        .map(|b| {
            let edge = if b + 1 == out_bins {
                domain.hi
            } else {
                domain.lo + (b + 1) as f64 * h
            };
            let next = cdf(edge);
            let v = mass * (next - prev) / h;
            prev = next;
            v
        })
        .collect();
    Ok(SpectralSignal::new(values, domain)?)
}

/// Cumulative integral of a non-negative piecewise-constant part at `x`,
/// in units of value times length; flat outside the domain.
fn cumulative_at(cum: &[f64], values: &[f64], domain: Domain, h: f64, x: f64) -> f64 {
    if x <= domain.lo {
        return 0.0;
    }
    if x >= domain.hi {
        return cum[values.len()];
    }
    let t = (x - domain.lo) / h;
    let b = (t.floor() as usize).min(values.len() - 1);
    cum[b] + values[b] * (t - b as f64) * h
}

fn deform_part(values: &[f64], domain: Domain, edges: &[f64]) -> Vec<f64> {
    let h = domain.width() / values.len() as f64;
    let mut cum = Vec::with_capacity(values.len() + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for &v in values {
        acc += v * h;
        cum.push(acc);
    }
    edges
        .windows(2)
        .map(|w| {
            let a = cumulative_at(&cum, values, domain, h, w[0]);
            let b = cumulative_at(&cum, values, domain, h, w[1]);
            (b - a) / h
        })
        .collect()
}

/// Discretizes `s_g(x) = g'(x) s(g(x))` on the signal's own bin grid.
///
/// `g_inverse` is the increasing map `g^{-1}`; `g` is its numerical inverse.
/// Each output bin holds the exact pushforward mass that the
/// piecewise-constant reading of `s` places on it, divided by the bin width,
/// so positive and negative parts are each moved without loss of mass
/// (mass that `g` maps outside the domain is dropped).
pub fn apply_deformation(s: &SpectralSignal, g_inverse: &MonotoneMap) -> SpectralSignal {
    let domain = s.domain();
    let d = s.len();
    let h = s.bin_width();
    let edges: Vec<f64> = (0..=d)
        .map(|b| {
            let e = if b == d { domain.hi } else { domain.lo + b as f64 * h };
            g_inverse.eval_inverse(e)
        })
        .collect();
    let pos: Vec<f64> = s.values().iter().map(|&v| v.max(0.0)).collect();
    let neg: Vec<f64> = s.values().iter().map(|&v| (-v).max(0.0)).collect();
    let pos_g = deform_part(&pos, domain, &edges);
    let values = if neg.iter().any(|&v| v > 0.0) {
        let neg_g = deform_part(&neg, domain, &edges);
        pos_g.iter().zip(&neg_g).map(|(p, n)| p - n).collect()
    } else {
        pos_g
    };
    SpectralSignal::new(values, domain).expect("deformation of a finite signal stays finite")
}

/// Composition property in transform space: `q -> g^{-1}(q)` on both
/// profiles, masses unchanged. Zero parts stay zero.
pub fn compose_in_scdt(v: &ScdtVector, g_inverse: &MonotoneMap) -> ScdtVector {
    let map_profile = |p: &CdtProfile, mass: f64| -> CdtProfile {
        if mass == 0.0 {
            return p.clone();
        }
        CdtProfile {
            quantiles: p.quantiles.iter().map(|&q| g_inverse.eval(q)).collect(),
            domain: p.domain,
        }
    };
    ScdtVector {
        pos_quantiles: map_profile(&v.pos_quantiles, v.pos_mass),
        pos_mass: v.pos_mass,
        neg_quantiles: map_profile(&v.neg_quantiles, v.neg_mass),
        neg_mass: v.neg_mass,
    }
}
