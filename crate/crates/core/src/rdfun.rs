//! Parametric rate-distortion quantities at water level `theta`.
//!
//! All rates are in nats. Every function here shares one distortion integral;
//! only the rate integrand differs between the three routes.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::armodel::{density_summary, spectral_density, ArModel, DEFAULT_GRID_POINTS};
use crate::error::{Error, Result};
use crate::quad::{integrate_periodic, Abscissa, LogDensity, QuadSpec};
use crate::rootfind::{characteristic_roots, log_correction, RootSet};

pub const MAX_BISECTION_STEPS: usize = 200;
const CROSSING_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub theta: f64,
    pub distortion: f64,
    pub rate_kolmogorov: f64,
    pub rate_autoregressive: f64,
    pub rate_hashimoto_arimoto: f64,
    pub gap: f64,
    pub e_set_measure: f64,
}

/// Per-model data shared by all integrals: roots, their angles, the root
/// correction and a quadrature spec with the zeros of `g` declared.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    model: &'a ArModel,
    roots: RootSet,
    correction: f64,
    base_spec: QuadSpec,
}

impl<'a> Prepared<'a> {
    pub fn new(model: &'a ArModel) -> Result<Self> {
        Self::with_spec(model, QuadSpec::default())
    }

    pub fn with_spec(model: &'a ArModel, spec: QuadSpec) -> Result<Self> {
        let roots = characteristic_roots(model)?;
        let correction = log_correction(&roots);
        let base_spec = spec.with_singular_points(roots.near_singular_angles());
        Ok(Self {
            model,
            roots,
            correction,
            base_spec,
        })
    }

    pub fn roots(&self) -> &RootSet {
        &self.roots
    }

    pub fn model(&self) -> &ArModel {
        self.model
    }

    fn level(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::OutOfRange(format!(
                "theta must be positive and finite, got {theta}"
            )));
        }
        Ok(self.model.noise_variance() / theta)
    }

    /// Spec with breakpoints where `g = level`.
    fn spec_for(&self, level: f64) -> QuadSpec {
        self.base_spec.clone().with_breakpoints(crossings(self.model, level))
    }

    pub fn distortion_at(&self, theta: f64) -> Result<f64> {
        let level = self.level(theta)?;
        let sigma2 = self.model.noise_variance();
        let spec = self.spec_for(level);
        let r = integrate_periodic(
            |x: Abscissa| {
                let g = spectral_density(self.model, x.omega);
                if g * theta <= sigma2 {
                    theta
                } else {
                    sigma2 / g
                }
            },
            &spec,
        )?;
        Ok(r.value.min(theta))
    }

    pub fn rate_kolmogorov(&self, theta: f64) -> Result<f64> {
        let level = self.level(theta)?;
        let log_level = level.ln();
        let log_g = LogDensity::new(self.model, &self.roots);
        let spec = self.spec_for(level);
        let r = integrate_periodic(|x| (0.5 * (log_level - log_g.eval(x))).max(0.0), &spec)?;
        Ok(r.value.max(0.0))
    }

    pub fn rate_autoregressive(&self, theta: f64) -> Result<f64> {
        let level = self.level(theta)?;
        let log_level = level.ln();
        let log_g = LogDensity::new(self.model, &self.roots);
        let spec = self.spec_for(level);
        let r = integrate_periodic(|x| 0.5 * log_g.eval(x).max(log_level), &spec)?;
        Ok(r.value)
    }

    pub fn rate_hashimoto_arimoto(&self, theta: f64) -> Result<f64> {
        Ok(self.rate_kolmogorov(theta)? + self.correction)
    }

    /// `(1/2) (1/2pi) int ln g`, by quadrature.
    pub fn formula_gap(&self) -> Result<f64> {
        let log_g = LogDensity::new(self.model, &self.roots);
        let r = integrate_periodic(|x| 0.5 * log_g.eval(x), &self.base_spec)?;
        Ok(r.value)
    }

    /// `sigma^2 (1/2pi) int 1/g`; infinite when `g` vanishes on the circle.
    pub fn max_distortion(&self) -> Result<f64> {
        if self.roots.on_circle_count > 0 {
            return Ok(f64::INFINITY);
        }
        let sigma2 = self.model.noise_variance();
        let log_g = LogDensity::new(self.model, &self.roots);
        let r = integrate_periodic(|x| sigma2 * (-log_g.eval(x)).exp(), &self.base_spec)?;
        Ok(r.value)
    }

    pub fn theta_for_distortion(&self, target: f64) -> Result<f64> {
        if !(target > 0.0) || !target.is_finite() {
            return Err(Error::OutOfRange(format!(
                "target distortion must be positive, got {target}"
            )));
        }
        let tol = 1e-9 * target.max(1.0);
        let d_max = self.max_distortion()?;
        let sigma2 = self.model.noise_variance();
        let min_g = density_summary(self.model, DEFAULT_GRID_POINTS)?.min_value;
        if d_max.is_finite() {
            if target > d_max + tol {
                return Err(Error::OutOfRange(format!(
                    "target distortion {target} exceeds the supremum {d_max}"
                )));
            }
            if target >= d_max - tol {
                // Plateau: every theta >= sigma^2 / min g gives d_max; report the infimum.
                return Ok(sigma2 / min_g);
            }
        }

        // D(theta) <= theta, so theta = target is a lower bracket.
        let mut lo = target;
        let d_lo = self.distortion_at(lo)?;
        if (d_lo - target).abs() <= tol {
            return Ok(lo);
        }
        let mut hi = if min_g > 0.0 { sigma2 / min_g } else { 2.0 * target };
        hi = hi.max(2.0 * target);
        let mut steps = 0;
        while self.distortion_at(hi)? < target {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > MAX_BISECTION_STEPS {
                return Err(Error::NoConvergence(steps));
            }
        }
        for _ in 0..MAX_BISECTION_STEPS {
            let mid = (lo * hi).sqrt();
            let d = self.distortion_at(mid)?;
            if (d - target).abs() <= tol {
                return Ok(mid);
            }
            if d < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::NoConvergence(MAX_BISECTION_STEPS))
    }

    pub fn rd_point(&self, theta: f64) -> Result<RdPoint> {
        let distortion = self.distortion_at(theta)?;
        let rate_kolmogorov = self.rate_kolmogorov(theta)?;
        let rate_autoregressive = self.rate_autoregressive(theta)?;
        let rate_hashimoto_arimoto = rate_kolmogorov + self.correction;
        Ok(RdPoint {
            theta,
            distortion,
            rate_kolmogorov,
            rate_autoregressive,
            rate_hashimoto_arimoto,
            gap: rate_autoregressive - rate_kolmogorov,
            e_set_measure: e_set_measure(self.model, self.level(theta)?),
        })
    }

    pub fn rd_curve(&self, grid: &[f64], parallel: bool) -> Result<Vec<RdPoint>> {
        check_grid(grid)?;
        let one = |&theta: &f64| {
            self.rd_point(theta).map_err(|e| Error::AtTheta {
                theta,
                source: Box::new(e),
            })
        };
        if parallel {
            grid.par_iter().map(one).collect()
        } else {
            grid.iter().map(one).collect()
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if let Some(&bad) = grid.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "theta grid values must be positive, got {bad}"
        )));
    }
    if let Some(w) = grid.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(format!(
            "theta grid must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

pub fn distortion_at(model: &ArModel, theta: f64) -> Result<f64> {
    Prepared::new(model)?.distortion_at(theta)
}

pub fn rate_kolmogorov(model: &ArModel, theta: f64) -> Result<f64> {
    Prepared::new(model)?.rate_kolmogorov(theta)
}

pub fn rate_autoregressive(model: &ArModel, theta: f64) -> Result<f64> {
    Prepared::new(model)?.rate_autoregressive(theta)
}

pub fn rate_hashimoto_arimoto(model: &ArModel, theta: f64) -> Result<f64> {
    Prepared::new(model)?.rate_hashimoto_arimoto(theta)
}

pub fn formula_gap(model: &ArModel) -> Result<f64> {
    Prepared::new(model)?.formula_gap()
}

pub fn theta_for_distortion(model: &ArModel, target: f64) -> Result<f64> {
    Prepared::new(model)?.theta_for_distortion(target)
}

pub fn rd_point(model: &ArModel, theta: f64) -> Result<RdPoint> {
    Prepared::new(model)?.rd_point(theta)
}

pub fn rd_curve(model: &ArModel, grid: &[f64]) -> Result<Vec<RdPoint>> {
    Prepared::new(model)?.rd_curve(grid, false)
}

pub fn rd_curve_parallel(model: &ArModel, grid: &[f64]) -> Result<Vec<RdPoint>> {
    Prepared::new(model)?.rd_curve(grid, true)
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(Error::OutOfRange(format!("log grid needs 0 < lo, got {lo}")));
    }
    if lo > hi {
        return Err(Error::InvalidRange { lo, hi });
    }
    Ok(match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|k| match k {
                    0 => lo,
                    k if k + 1 == count => hi,
                    k => (a + (b - a) * k as f64 / (count - 1) as f64).exp(),
                })
                .collect()
        }
    })
}

/// Angles in `(0, pi)` where `g` crosses `level`, located by sign changes on a
/// uniform grid and refined by bisection.
pub fn crossings(model: &ArModel, level: f64) -> Vec<f64> {
    let n = DEFAULT_GRID_POINTS;
    let h = PI / (n - 1) as f64;
    let f = |w: f64| spectral_density(model, w) - level;
    let mut out = Vec::new();
    let mut prev = f(0.0);
    for i in 1..n {
        let w = if i + 1 == n { PI } else { i as f64 * h };
        let cur = f(w);
        if (prev < 0.0) != (cur < 0.0) {
            out.push(bisect(&f, w - h, w, prev));
        }
        prev = cur;
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    out
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let below = f_lo < 0.0;
    while hi - lo > CROSSING_TOL {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Normalized measure of `{omega : g(omega) < level}`.
pub fn e_set_measure(model: &ArModel, level: f64) -> f64 {
    let cuts = crossings(model, level);
    let mut inside = spectral_density(model, 0.0) < level;
    let mut start = 0.0;
    let mut total = 0.0;
    for c in cuts {
        if inside {
            total += c - start;
        }
        inside = !inside;
        start = c;
    }
    if inside {
        total += PI - start;
    }
    (total / PI).clamp(0.0, 1.0)
}
