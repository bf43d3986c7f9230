//! Finite-`n` matrices behind the rate formulas: the banded AR matrix `A_n`, the
//! Gram matrix `sigma^-2 A_n^T A_n`, and the symmetric Toeplitz matrix `T_n(g)`.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::armodel::{autocovariance_of_g, spectral_density, ArModel};
use crate::error::{Error, Result};
use crate::linalg::ar_log_singular_values;
use crate::quad::{integrate_periodic, Abscissa, QuadSpec};
use crate::rdfun::crossings;
use crate::rootfind::{characteristic_roots, RootSet};

/// Size and range limits for the finite-`n` computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub dimension_cap: usize,
    /// Smallest Gram eigenvalue that decay reports may request.
    pub underflow_guard: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            dimension_cap: 4096,
            underflow_guard: 1e-290,
        }
    }
}

/// `n x n` lower-triangular Toeplitz matrix with entry `(i, j) = a_{i-j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedLowerToeplitz {
    pub n: usize,
    pub band: Vec<f64>,
}

impl BandedLowerToeplitz {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= j && i - j < self.band.len() && i < self.n {
            self.band[i - j]
        } else {
            0.0
        }
    }

    pub fn first_column(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, 0)).collect()
    }

    /// Unit diagonal, so exactly one.
    pub fn determinant(&self) -> f64 {
        1.0
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.band
                    .iter()
                    .enumerate()
                    .take(i + 1)
                    .map(|(k, a)| a * x[i - k])
                    .sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    ArGram,
    ToeplitzOfG,
}

impl fmt::Display for SpectrumSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpectrumSource::ArGram => "ar_gram",
            SpectrumSource::ToeplitzOfG => "toeplitz_of_g",
        })
    }
}

/// Ascending eigenvalues of a symmetric positive semidefinite matrix. The logs
/// are kept separately because Gram eigenvalues can fall below the normal range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricSpectrum {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub log_eigenvalues: Vec<f64>,
    pub source: SpectrumSource,
}

impl SymmetricSpectrum {
    fn from_logs(mut logs: Vec<f64>, source: SpectrumSource) -> Self {
        logs.sort_by(f64::total_cmp);
        Self {
            n: logs.len(),
            eigenvalues: logs.iter().map(|l| l.exp()).collect(),
            log_eigenvalues: logs,
            source,
        }
    }

    /// Every eigenvalue multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let shift = factor.ln();
        Self::from_logs(self.log_eigenvalues.iter().map(|l| l + shift).collect(), self.source)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    pub fn sum_log(&self) -> f64 {
        self.log_eigenvalues.iter().sum()
    }
}

/// Truncation interval `[psi, theta_clamp]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampRange {
    pub lo: f64,
    pub hi: f64,
}

impl ClampRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidRange { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// Whether the range sits inside `[min_g, max_g]`.
    pub fn is_within(&self, min_g: f64, max_g: f64) -> bool {
        min_g <= self.lo && self.hi <= max_g
    }

    pub fn clamp(&self, y: f64) -> f64 {
        y.max(self.lo).min(self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    Identity,
    Square,
    /// `x -> (1/2) ln max(x, c)`.
    LogMax(f64),
    /// `x -> 1/x`; finite on a clamp range with positive lower end.
    ReciprocalClamped,
}

impl TestFunction {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Identity => x,
            TestFunction::Square => x * x,
            TestFunction::LogMax(c) => 0.5 * x.max(c).ln(),
            TestFunction::ReciprocalClamped => 1.0 / x,
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// `identity`, `square`, `reciprocal`, or `log-max:C`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(TestFunction::Identity),
            "square" => Ok(TestFunction::Square),
            "reciprocal" | "reciprocal-clamped" => Ok(TestFunction::ReciprocalClamped),
            _ => {
                let c = s
                    .strip_prefix("log-max:")
                    .and_then(|c| c.parse::<f64>().ok())
                    .filter(|c| *c > 0.0)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown test function '{s}'")))?;
                Ok(TestFunction::LogMax(c))
            }
        }
    }
}

fn check_n(n: usize, limits: &Limits) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("matrix dimension must be at least 1".into()));
    }
    if n > limits.dimension_cap {
        return Err(Error::DimensionTooLarge {
            n,
            cap: limits.dimension_cap,
        });
    }
    Ok(())
}

pub fn build_ar_matrix(model: &ArModel, n: usize) -> Result<BandedLowerToeplitz> {
    build_ar_matrix_with(model, n, &Limits::default())
}

pub fn build_ar_matrix_with(model: &ArModel, n: usize, limits: &Limits) -> Result<BandedLowerToeplitz> {
    check_n(n, limits)?;
    Ok(BandedLowerToeplitz {
        n,
        band: model.coeffs().to_vec(),
    })
}

/// Eigenvalues of `sigma^-2 A_n^T A_n`.
pub fn ar_gram_spectrum(model: &ArModel, n: usize) -> Result<SymmetricSpectrum> {
    ar_gram_spectrum_with(model, n, &Limits::default())
}

pub fn ar_gram_spectrum_with(model: &ArModel, n: usize, limits: &Limits) -> Result<SymmetricSpectrum> {
    check_n(n, limits)?;
    let roots = characteristic_roots(model)?;
    gram_spectrum_from_roots(model, n, &roots)
}

fn gram_spectrum_from_roots(model: &ArModel, n: usize, roots: &RootSet) -> Result<SymmetricSpectrum> {
    let mus: Vec<Complex64> = roots.outside().filter(|r| r.im >= 0.0).map(|r| r.inv()).collect();
    // mu^(n-1) must stay in the normal range for the closed-form images.
    if let Some(big) = roots.outside().map(|r| r.norm()).reduce(f64::max) {
        if (n as f64 - 1.0) * big.ln() > 690.0 {
            return Err(Error::Underflow(format!(
                "basis vectors for root modulus {big} underflow at n = {n}"
            )));
        }
    }
    let log_sigma2 = model.noise_variance().ln();
    let logs = ar_log_singular_values(model.coeffs(), n, &mus)?;
    Ok(SymmetricSpectrum::from_logs(
        logs.into_iter().map(|l| 2.0 * l - log_sigma2).collect(),
        SpectrumSource::ArGram,
    ))
}

/// Eigenvalues of `T_n(g)`, entries `t_|i-j|`.
pub fn toeplitz_of_g_spectrum(model: &ArModel, n: usize) -> Result<SymmetricSpectrum> {
    toeplitz_of_g_spectrum_with(model, n, &Limits::default())
}

pub fn toeplitz_of_g_spectrum_with(model: &ArModel, n: usize, limits: &Limits) -> Result<SymmetricSpectrum> {
    check_n(n, limits)?;
    let t = toeplitz_of_g_matrix(model, n);
    let scale = t.iter().fold(0.0f64, |m, v| m.max(v.abs())) * n as f64;
    let eig = t
        .try_symmetric_eigen(f64::EPSILON, 100_000)
        .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
    let mut values: Vec<f64> = Vec::with_capacity(n);
    for &v in eig.eigenvalues.iter() {
        if v < 0.0 {
            if v < -64.0 * f64::EPSILON * scale {
                return Err(Error::EigenFailure(format!("negative eigenvalue {v} of T_n(g)")));
            }
            values.push(0.0);
        } else {
            values.push(v);
        }
    }
    values.sort_by(f64::total_cmp);
    Ok(SymmetricSpectrum {
        n,
        log_eigenvalues: values.iter().map(|v| v.ln()).collect(),
        eigenvalues: values,
        source: SpectrumSource::ToeplitzOfG,
    })
}

pub fn toeplitz_of_g_matrix(model: &ArModel, n: usize) -> DMatrix<f64> {
    let t: Vec<f64> = (0..n).map(|k| autocovariance_of_g(model, k)).collect();
    DMatrix::from_fn(n, n, |i, j| t[i.abs_diff(j)])
}

/// `(D_n, R_n)`: reverse water-filling at level `theta` over the covariance
/// eigenvalues `1/lambda_{n,k}`.
pub fn finite_order_rd(model: &ArModel, n: usize, theta: f64) -> Result<(f64, f64)> {
    let spectrum = ar_gram_spectrum(model, n)?;
    finite_order_rd_from(&spectrum, theta)
}

pub fn finite_order_rd_from(spectrum: &SymmetricSpectrum, theta: f64) -> Result<(f64, f64)> {
    check_theta(theta)?;
    let log_theta = theta.ln();
    let max_log = f64::MAX.ln();
    let mut d = 0.0;
    let mut r = 0.0;
    for &l in &spectrum.log_eigenvalues {
        if -l >= max_log {
            return Err(Error::Overflow(format!("covariance eigenvalue exp({}) overflows", -l)));
        }
        d += theta.min((-l).exp());
        r += (0.5 * (-l - log_theta)).max(0.0);
    }
    let n = spectrum.n as f64;
    Ok((d / n, r / n))
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::OutOfRange(format!(
            "theta must be positive and finite, got {theta}"
        )));
    }
    Ok(())
}

/// `min(max(y, x), z)`.
pub fn mid(x: f64, y: f64, z: f64) -> Result<f64> {
    if !(x <= z) {
        return Err(Error::InvalidRange { lo: x, hi: z });
    }
    Ok(y.max(x).min(z))
}

pub fn truncated_eigen_mean(spectrum: &SymmetricSpectrum, f: TestFunction, range: ClampRange) -> f64 {
    let total: f64 = spectrum.eigenvalues.iter().map(|&e| f.apply(range.clamp(e))).sum();
    total / spectrum.n as f64
}

pub fn truncated_integral_mean(model: &ArModel, f: TestFunction, range: ClampRange, spec: &QuadSpec) -> Result<f64> {
    let mut breaks = crossings(model, range.lo);
    breaks.extend(crossings(model, range.hi));
    let spec = spec.clone().with_breakpoints(breaks);
    let r = integrate_periodic(
        |x: Abscissa| f.apply(range.clamp(spectral_density(model, x.omega))),
        &spec,
    )?;
    Ok(r.value)
}

/// `|truncated_eigen_mean - truncated_integral_mean|` for the chosen spectrum;
/// the Gram spectrum is multiplied by `sigma^2` first.
pub fn theorem1_gap(
    model: &ArModel,
    f: TestFunction,
    range: ClampRange,
    n: usize,
    source: SpectrumSource,
) -> Result<f64> {
    let spectrum = match source {
        SpectrumSource::ToeplitzOfG => toeplitz_of_g_spectrum(model, n)?,
        SpectrumSource::ArGram => ar_gram_spectrum(model, n)?.scaled(model.noise_variance()),
    };
    let integral = truncated_integral_mean(model, f, range, &QuadSpec::default())?;
    Ok((truncated_eigen_mean(&spectrum, f, range) - integral).abs())
}

/// Both sides of the finite-`n` identity
/// `(1/n) sum max(0, ln(1/(lambda theta))/2) = (1/n) sum ln max(sigma^2 lambda, sigma^2/theta) / 2`.
pub fn identity_check(model: &ArModel, n: usize, theta: f64) -> Result<(f64, f64)> {
    let spectrum = ar_gram_spectrum(model, n)?;
    identity_check_from(&spectrum, model.noise_variance(), theta)
}

pub fn identity_check_from(spectrum: &SymmetricSpectrum, sigma2: f64, theta: f64) -> Result<(f64, f64)> {
    check_theta(theta)?;
    let (log_theta, log_sigma2) = (theta.ln(), sigma2.ln());
    let n = spectrum.n as f64;
    let lhs: f64 = spectrum
        .log_eigenvalues
        .iter()
        .map(|&l| (0.5 * (-l - log_theta)).max(0.0))
        .sum();
    let rhs: f64 = spectrum
        .log_eigenvalues
        .iter()
        .map(|&l| 0.5 * (log_sigma2 + l).max(log_sigma2 - log_theta))
        .sum();
    Ok((lhs / n, rhs / n))
}

/// Least-squares fit of `ln lambda` against `n` for one decaying eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    /// `-2 ln |rho|` for the matching outside root.
    pub predicted_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: usize,
    /// The `m` smallest Gram eigenvalues, ascending.
    pub smallest: Vec<f64>,
    pub log_smallest: Vec<f64>,
    /// The `(m+1)`-th smallest eigenvalue, if `n > m`.
    pub bulk_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub outside_count: usize,
    pub rows: Vec<DecayRow>,
    /// One fit per decaying eigenvalue, smallest first.
    pub fits: Vec<DecayFit>,
    /// Smallest non-decaying eigenvalue over all rows.
    pub bulk_floor: Option<f64>,
}

pub fn smallest_eigen_decay(model: &ArModel, n_values: &[usize]) -> Result<DecayReport> {
    smallest_eigen_decay_with(model, n_values, &Limits::default())
}

pub fn smallest_eigen_decay_with(model: &ArModel, n_values: &[usize], limits: &Limits) -> Result<DecayReport> {
    if n_values.is_empty() || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "n values must be nonempty and strictly increasing".into(),
        ));
    }
    for &n in n_values {
        check_n(n, limits)?;
    }
    let roots = characteristic_roots(model)?;
    let outside: Vec<f64> = roots.outside().map(|r| r.norm()).collect();
    let m = outside.len();
    if let (Some(&big), Some(&n_max)) = (outside.first(), n_values.last()) {
        let predicted = -2.0 * n_max as f64 * big.ln() - model.noise_variance().ln();
        if predicted < limits.underflow_guard.ln() {
            return Err(Error::Underflow(format!(
                "smallest eigenvalue near exp({predicted:.1}) at n = {n_max} is below the guard {:e}",
                limits.underflow_guard
            )));
        }
    }

    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let s = gram_spectrum_from_roots(model, n, &roots)?;
        let k = m.min(n);
        rows.push(DecayRow {
            n,
            smallest: s.eigenvalues[..k].to_vec(),
            log_smallest: s.log_eigenvalues[..k].to_vec(),
            bulk_min: s.eigenvalues.get(m).copied(),
        });
    }

    let fits = (0..m)
        .map(|l| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.log_smallest.len() > l)
                .map(|r| (r.n as f64, r.log_smallest[l]))
                .collect();
            let (slope, intercept, residual) = least_squares(&pts);
            DecayFit {
                slope,
                intercept,
                residual,
                predicted_slope: -2.0 * outside[l].ln(),
            }
        })
        .collect();
    let bulk_floor = rows.iter().filter_map(|r| r.bulk_min).reduce(f64::min);
    Ok(DecayReport {
        outside_count: m,
        rows,
        fits,
        bulk_floor,
    })
}

/// `(slope, intercept, rms residual)`; NaN slope for fewer than two points.
fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let k = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, pts.first().map_or(f64::NAN, |p| p.1), 0.0);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    (slope, intercept, (ss / k).sqrt())
}

/// `-2 ln 2`, the decay slope for a single root at modulus 2.
pub const DOUBLING_SLOPE: f64 = -2.0 * LN_2;
