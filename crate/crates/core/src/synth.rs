//! Synthetic scenes drawn from the background transport model.
//!
//! Every background pixel is the template pushed through a random increasing
//! warp `g` whose inverse lies in the cone spanned by the generator functions,
//! `g^{-1} = sum_i alpha_i f_i` with `alpha_i >= 0`, rescaled so it maps
//! `[0, 1]` onto itself. Anomalous pixels use a different template under the
//! same warp law. Optional Gaussian noise is added after warping.
//!
//! Randomness comes from one ChaCha stream per pixel (keyed by flattened
//! index) plus a dedicated stream for anomaly placement, so scenes are
//! identical for a given seed regardless of thread count.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::monotone::{linspace, MapError, MonotoneMap, DEFAULT_MAP_SAMPLES};
use crate::scdt::apply_deformation;
use crate::types::{GroundTruthMask, HsiCube, SpectralSignal, TypeError};

const ANOMALY_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("bad scene spec: {0}")]
    BadSpec(String),
    #[error("all deformation weights are zero")]
    AllZeroAlphas,
    #[error("generator {index} is not strictly increasing")]
    NotIncreasing { index: usize },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// One generator `f_i` of the warp cone, on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// `x^p`, `p > 0`.
    Power { exponent: f64 },
    /// `3x^2 - 2x^3`.
    Smoothstep,
    /// Samples on an even grid over `[0, 1]`, linearly interpolated.
    Table { values: Vec<f64> },
}

impl GeneratorSpec {
    fn tabulate(&self, xs: &[f64]) -> Result<Vec<f64>, SynthError> {
        Ok(match self {
            GeneratorSpec::Power { exponent } => {
                if !(*exponent > 0.0 && exponent.is_finite()) {
                    return Err(SynthError::BadSpec(format!("power exponent {exponent}")));
                }
                xs.iter().map(|x| x.powf(*exponent)).collect()
            }
            GeneratorSpec::Smoothstep => xs.iter().map(|x| x * x * (3.0 - 2.0 * x)).collect(),
            GeneratorSpec::Table { values } => {
                if values.len() < 2 {
                    return Err(SynthError::BadSpec("generator table needs 2+ samples".into()));
                }
                let grid = linspace(0.0, 1.0, values.len());
                let map = MonotoneMap::from_samples(grid, values.clone())?;
                xs.iter().map(|&x| map.eval(x)).collect()
            }
        })
    }
}

/// Generators `f_1..f_k` as dense tables on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationBasis {
    xs: Vec<f64>,
    generators: Vec<Vec<f64>>,
}

impl DeformationBasis {
    pub fn from_specs(specs: &[GeneratorSpec]) -> Result<Self, SynthError> {
        let xs = linspace(0.0, 1.0, DEFAULT_MAP_SAMPLES);
        let generators = specs
            .iter()
            .map(|s| s.tabulate(&xs))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(xs, generators)
    }

    /// Checks that each table strictly increases and that the tables are
    /// linearly independent.
    pub fn new(xs: Vec<f64>, generators: Vec<Vec<f64>>) -> Result<Self, SynthError> {
        if generators.is_empty() {
            return Err(SynthError::BadSpec("deformation basis is empty".into()));
        }
        for (index, g) in generators.iter().enumerate() {
            if g.len() != xs.len() {
                return Err(SynthError::BadSpec(format!("generator {index} has the wrong length")));
            }
            if g.iter().any(|v| !v.is_finite()) || g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(SynthError::NotIncreasing { index });
            }
        }
        let k = generators.len();
        let gram = nalgebra::DMatrix::from_fn(k, k, |i, j| {
            generators[i].iter().zip(&generators[j]).map(|(a, b)| a * b).sum::<f64>()
        });
        let eig = gram.symmetric_eigenvalues();
        let (lo, hi) = (eig.min().max(0.0).sqrt(), eig.max().sqrt());
        if !(lo > 1e-8 * hi) {
            return Err(SynthError::BadSpec("generators are linearly dependent".into()));
        }
        Ok(Self { xs, generators })
    }

    pub fn k(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }
}

/// `g^{-1} = normalize(sum_i alpha_i f_i)`, rescaled to map `[0, 1]` onto itself.
pub fn sample_deformation(basis: &DeformationBasis, alphas: &[f64]) -> Result<MonotoneMap, SynthError> {
    if alphas.len() != basis.k() {
        return Err(SynthError::BadSpec(format!(
            "{} weights for {} generators",
            alphas.len(),
            basis.k()
        )));
    }
    if alphas.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
        return Err(SynthError::BadSpec("deformation weights must be finite and >= 0".into()));
    }
    if alphas.iter().all(|&a| a == 0.0) {
        return Err(SynthError::AllZeroAlphas);
    }
    let mut sum = vec![0.0; basis.xs.len()];
    for (a, g) in alphas.iter().zip(&basis.generators) {
        if *a == 0.0 {
            continue;
        }
        for (s, v) in sum.iter_mut().zip(g) {
            *s += a * v;
        }
    }
    let (start, end) = (sum[0], sum[sum.len() - 1]);
    let ys = sum.iter().map(|v| (v - start) / (end - start)).collect();
    Ok(MonotoneMap::from_samples(basis.xs.clone(), ys)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

/// A spectrum on `[0, 1]`, either parametric or given sample by sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemplateSpec {
    GaussianMixture {
        components: Vec<GaussianComponent>,
        #[serde(default)]
        baseline: f64,
    },
    Values { values: Vec<f64> },
}

impl TemplateSpec {
    /// Samples at the `bands` bin centers.
    pub fn render(&self, bands: usize) -> Result<Vec<f64>, SynthError> {
        match self {
            TemplateSpec::GaussianMixture { components, baseline } => {
                if components.iter().any(|c| !(c.width > 0.0)) {
                    return Err(SynthError::BadSpec("gaussian width must be positive".into()));
                }
                Ok((0..bands)
                    .map(|b| {
                        let x = (b as f64 + 0.5) / bands as f64;
                        baseline
                            + components
                                .iter()
                                .map(|c| c.amplitude * (-0.5 * ((x - c.center) / c.width).powi(2)).exp())
                                .sum::<f64>()
                    })
                    .collect())
            }
            TemplateSpec::Values { values } => {
                if values.len() != bands {
                    return Err(SynthError::BadSpec(format!(
                        "template has {} samples for {} bands",
                        values.len(),
                        bands
                    )));
                }
                Ok(values.clone())
            }
        }
    }
}

/// `alpha_i ~ U[lo, hi]` independently, optionally rescaled to sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaLaw {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub normalize: bool,
}

impl Default for AlphaLaw {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 1.0,
            normalize: false,
        }
    }
}

impl AlphaLaw {
    fn draw(&self, k: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mut alphas: Vec<f64> = (0..k)
            .map(|_| {
                if self.hi > self.lo {
                    rng.gen_range(self.lo..=self.hi)
                } else {
                    self.lo
                }
            })
            .collect();
        if self.normalize {
            let total: f64 = alphas.iter().sum();
            if total > 0.0 {
                alphas.iter_mut().for_each(|a| *a /= total);
            }
        }
        alphas
    }
}

pub fn default_basis() -> Vec<GeneratorSpec> {
    vec![
        GeneratorSpec::Power { exponent: 1.0 },
        GeneratorSpec::Power { exponent: 2.0 },
        GeneratorSpec::Smoothstep,
    ]
}

fn default_components() -> Vec<GaussianComponent> {
    vec![
        GaussianComponent { center: 0.25, width: 0.06, amplitude: 1.0 },
        GaussianComponent { center: 0.5, width: 0.08, amplitude: 0.6 },
        GaussianComponent { center: 0.75, width: 0.07, amplitude: 0.8 },
    ]
}

/// Smooth three-peak reflectance-like curve on a positive baseline.
pub fn default_template() -> TemplateSpec {
    TemplateSpec::GaussianMixture {
        components: default_components(),
        baseline: 0.2,
    }
}

/// [`default_template`] with its first peak moved 0.2 to the right.
pub fn default_anomaly_template() -> TemplateSpec {
    let mut components = default_components();
    components[0].center += 0.2;
    TemplateSpec::GaussianMixture {
        components,
        baseline: 0.2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub rows: usize,
    pub cols: usize,
    pub bands: usize,
    pub template: TemplateSpec,
    pub basis: Vec<GeneratorSpec>,
    pub alpha_law: AlphaLaw,
    pub anomaly_template: TemplateSpec,
    pub anomaly_fraction: f64,
    /// Noise standard deviation as a fraction of the template peak.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Allow templates with negative samples.
    pub signed: bool,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            rows: 64,
            cols: 64,
            bands: 96,
            template: default_template(),
            basis: default_basis(),
            alpha_law: AlphaLaw::default(),
            anomaly_template: default_anomaly_template(),
            anomaly_fraction: 0.01,
            noise_sigma: 0.0,
            seed: 0,
            signed: false,
        }
    }
}

impl SceneSpec {
    pub fn n_pixels(&self) -> usize {
        self.rows * self.cols
    }

    /// `round(anomaly_fraction * N)`.
    pub fn anomaly_count(&self) -> usize {
        (self.anomaly_fraction * self.n_pixels() as f64).round() as usize
    }

    fn check(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::BadSpec(m));
        if self.rows == 0 || self.cols == 0 {
            return bad(format!("scene shape {}x{}", self.rows, self.cols));
        }
        if self.bands < 2 {
            return bad(format!("{} bands", self.bands));
        }
        if self.basis.is_empty() {
            return bad("deformation basis is empty (k = 0)".into());
        }
        if !(0.0..=0.2).contains(&self.anomaly_fraction) {
            return bad(format!("anomaly_fraction {} outside [0, 0.2]", self.anomaly_fraction));
        }
        if self.anomaly_fraction > 0.0 && self.anomaly_fraction * (self.n_pixels() as f64) < 1.0 {
            return bad("anomaly_fraction requests less than one anomalous pixel".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma {}", self.noise_sigma));
        }
        let law = self.alpha_law;
        if !(law.lo >= 0.0 && law.hi >= law.lo && law.hi > 0.0 && law.hi.is_finite()) {
            return bad(format!("alpha law [{}, {}]", law.lo, law.hi));
        }
        Ok(())
    }
}

fn render_checked(t: &TemplateSpec, bands: usize, signed: bool, what: &str) -> Result<SpectralSignal, SynthError> {
    let values = t.render(bands)?;
    if !signed && values.iter().any(|&v| v < 0.0) {
        return Err(SynthError::BadSpec(format!("{what} has negative samples")));
    }
    Ok(SpectralSignal::unit(values)?)
}

/// Draws a scene and its anomaly mask.
pub fn generate_scene(spec: &SceneSpec) -> Result<(HsiCube, GroundTruthMask), SynthError> {
    spec.check()?;
    let basis = DeformationBasis::from_specs(&spec.basis)?;
    let template = render_checked(&spec.template, spec.bands, spec.signed, "template")?;
    let anomaly = render_checked(&spec.anomaly_template, spec.bands, spec.signed, "anomaly template")?;
    let n = spec.n_pixels();

    let mut labels = vec![false; n];
    let count = spec.anomaly_count();
    if count > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(ANOMALY_STREAM);
        for i in index::sample(&mut rng, n, count) {
            labels[i] = true;
        }
    }

    let peak = template.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = Normal::new(0.0, spec.noise_sigma * peak)
        .map_err(|e| SynthError::BadSpec(e.to_string()))?;
    let pixels: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let alphas = spec.alpha_law.draw(basis.k(), &mut rng);
            let g_inverse = sample_deformation(&basis, &alphas)?;
            let source = if labels[i] { &anomaly } else { &template };
            let mut values = apply_deformation(source, &g_inverse).into_values();
            if spec.noise_sigma > 0.0 {
                for v in values.iter_mut() {
                    *v += noise.sample(&mut rng);
                }
            }
            Ok(values)
        })
        .collect::<Result<_, SynthError>>()?;

    let data: Vec<f64> = pixels.into_iter().flatten().collect();
    let cube = HsiCube::new(spec.rows, spec.cols, spec.bands, data)?;
    let mask = GroundTruthMask::new(spec.rows, spec.cols, labels)?;
    Ok((cube, mask))
}
