//! Finite-order Gaussian autoregressive sources.
//!
//! A model is the difference equation
//!
//! ```text
//! X_n = -(a_1 X_{n-1} + ... + a_M X_{n-M}) + Z_n,   X_n = 0 for n <= 0,
//! ```
//!
//! driven by iid zero-mean Gaussian noise of variance `sigma2`. The leading
//! coefficient `a_0` is always exactly one. No stability requirement is placed
//! on the coefficients: characteristic roots may lie inside, on, or outside the
//! unit circle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of grid points on `[0, pi]` used when locating the extrema of `g`.
pub const DEFAULT_GRID_POINTS: usize = 4097;

#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    coeffs: Vec<f64>,
    noise_variance: f64,
}

/// On-disk model description: `{"a": [1.0, -2.0], "sigma2": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub a: Vec<f64>,
    pub sigma2: f64,
}

impl ArModel {
    /// Builds a model and checks every invariant (see [`validate`]).
    pub fn new(coeffs: Vec<f64>, noise_variance: f64) -> Result<Self> {
        validate(Self { coeffs, noise_variance })
    }

    /// Unit-variance white noise, `a = (1)`.
    pub fn white_noise(noise_variance: f64) -> Result<Self> {
        Self::new(vec![1.0], noise_variance)
    }

    /// The discrete Wiener process (random walk), `a = (1, -1)`.
    pub fn wiener(noise_variance: f64) -> Result<Self> {
        Self::new(vec![1.0, -1.0], noise_variance)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Sum of absolute coefficient values; bounds `sqrt(g)` from above.
    pub fn coeff_l1(&self) -> f64 {
        self.coeffs.iter().map(|a| a.abs()).sum()
    }

    pub fn from_file(file: &ModelFile) -> Result<Self> {
        Self::new(file.a.clone(), file.sigma2)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            a: self.coeffs.clone(),
            sigma2: self.noise_variance,
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, ModelLoadError> {
        let file: ModelFile = serde_json::from_str(text).map_err(ModelLoadError::Parse)?;
        Self::from_file(&file).map_err(ModelLoadError::Invalid)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelLoadError {
    #[error("cannot parse model file: {0}")]
    Parse(serde_json::Error),
    #[error("invalid model: {0}")]
    Invalid(Error),
}

/// Returns the model unchanged if `a_0 == 1`, all coefficients are finite and
/// `sigma2 > 0`.
pub fn validate(model: ArModel) -> Result<ArModel> {
    if let Some(index) = model.coeffs.iter().position(|a| !a.is_finite()) {
        return Err(Error::NonFiniteCoefficient { index });
    }
    match model.coeffs.first() {
        Some(&1.0) => {}
        Some(&a0) => return Err(Error::NonUnitLeadCoefficient(a0)),
        None => return Err(Error::NonUnitLeadCoefficient(f64::NAN)),
    }
    if !(model.noise_variance > 0.0) || !model.noise_variance.is_finite() {
        return Err(Error::NonPositiveVariance(model.noise_variance));
    }
    Ok(model)
}

/// `A(e^{j omega}) = sum_k a_k e^{-j k omega}`.
///
/// Every term uses `cos(k omega)` and `sin(k omega)` evaluated directly, so the
/// value at `-omega` is the exact conjugate of the value at `omega`.
pub fn transfer_at(model: &ArModel, omega: f64) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (k, &a) in model.coeffs.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let phase = k as f64 * omega;
        re += a * phase.cos();
        im -= a * phase.sin();
    }
    Complex64::new(re, im)
}

/// `g(omega) = |A(e^{j omega})|^2`.
pub fn spectral_density(model: &ArModel, omega: f64) -> f64 {
    transfer_at(model, omega).norm_sqr()
}

/// Fourier coefficient `t_k = sum_m a_m a_{m+k}` of `g`; zero beyond the model order.
pub fn autocovariance_of_g(model: &ArModel, lag: usize) -> f64 {
    let a = &model.coeffs;
    if lag >= a.len() {
        return 0.0;
    }
    a.iter().zip(&a[lag..]).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSequence {
    pub values: Vec<f64>,
    pub seed: Option<u64>,
}

impl NoiseSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("noise sequence must be nonempty".into()));
        }
        if values.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument("noise values must be finite".into()));
        }
        Ok(Self { values, seed: None })
    }

    /// `n` iid `N(0, sigma2)` draws.
    ///
    /// The generator is ChaCha8 (`rand_chacha`) seeded with `seed_from_u64(seed)`;
    /// standard normals come from the `rand_distr` ziggurat sampler and are
    /// multiplied by `sqrt(sigma2)`. Both algorithms are platform independent,
    /// so a seed reproduces the same path everywhere.
    pub fn gaussian(n: usize, sigma2: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("noise sequence must be nonempty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = sigma2.sqrt();
        let values = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
            .collect();
        Ok(Self {
            values,
            seed: Some(seed),
        })
    }

    pub fn impulse(n: usize) -> Result<Self> {
        let mut values = vec![0.0; n];
        if let Some(first) = values.first_mut() {
            *first = 1.0;
        }
        Self::new(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub values: Vec<f64>,
}

/// Runs the difference equation over the given noise.
pub fn simulate_path(model: &ArModel, noise: &NoiseSequence) -> Result<SamplePath> {
    let a = &model.coeffs;
    let mut x: Vec<f64> = Vec::with_capacity(noise.values.len());
    for (n, &z) in noise.values.iter().enumerate() {
        let reach = n.min(model.order());
        let mut acc = z;
        for k in 1..=reach {
            acc -= a[k] * x[n - k];
        }
        if !acc.is_finite() {
            return Err(Error::Overflow(format!("sample path leaves f64 range at index {n}")));
        }
        x.push(acc);
    }
    Ok(SamplePath { values: x })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySummary {
    pub min_value: f64,
    pub max_value: f64,
    pub argmin: f64,
    pub argmax: f64,
}

/// Extrema of `g` on `[0, pi]` from a uniform grid (always containing 0 and
/// pi) followed by golden-section refinement inside the neighbouring cells.
pub fn density_summary(model: &ArModel, grid_points: usize) -> Result<DensitySummary> {
    if grid_points < 64 {
        return Err(Error::InvalidArgument(format!(
            "density grid needs at least 64 points, got {grid_points}"
        )));
    }
    let step = PI / (grid_points - 1) as f64;
    let node = |i: usize| if i == grid_points - 1 { PI } else { i as f64 * step };
    let values: Vec<f64> = (0..grid_points).map(|i| spectral_density(model, node(i))).collect();

    let (imin, _) = values.iter().enumerate().fold(
        (0, f64::INFINITY),
        |best, (i, &v)| if v < best.1 { (i, v) } else { best },
    );
    let (imax, _) = values.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |best, (i, &v)| if v > best.1 { (i, v) } else { best },
    );

    let refine = |i: usize, sign: f64| -> (f64, f64) {
        let lo = node(i.saturating_sub(1));
        let hi = node((i + 1).min(grid_points - 1));
        let (w, v) = golden_section(|w| sign * spectral_density(model, w), lo, hi);
        let grid_value = sign * values[i];
        if v < grid_value {
            (w, sign * v)
        } else {
            (node(i), values[i])
        }
    };
    let (argmin, min_value) = refine(imin, 1.0);
    let (argmax, max_value) = refine(imax, -1.0);
    Ok(DensitySummary {
        min_value: min_value.max(0.0),
        max_value,
        argmin,
        argmax,
    })
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-14 * (1.0 + lo.abs()) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
