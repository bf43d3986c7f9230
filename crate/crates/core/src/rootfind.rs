//! Zeros of the characteristic polynomial `A(z) = sum_k a_k z^{-k}` and the
//! root-based correction terms.
//!
//! The zeros of `A(z)` are those of the monic polynomial `z^M A(z) =
//! z^M + a_1 z^{M-1} + ... + a_M`, found with Aberth-Ehrlich simultaneous
//! iteration and polished with Newton steps.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::armodel::ArModel;
use crate::error::{Error, Result};

pub const DEFAULT_CIRCLE_TOLERANCE: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 200;

/// Roots further than this from the unit circle are not treated as near-singular
/// by the quadrature grading.
const NEAR_CIRCLE_BAND: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    /// Sorted by nonincreasing modulus.
    pub roots: Vec<Complex64>,
    pub moduli: Vec<f64>,
    pub outside_count: usize,
    pub on_circle_count: usize,
    pub circle_tolerance: f64,
}

impl RootSet {
    pub fn from_roots(mut roots: Vec<Complex64>, circle_tolerance: f64) -> Self {
        roots.sort_by(|a, b| {
            b.norm()
                .partial_cmp(&a.norm())
                .unwrap_or(Ordering::Equal)
                .then(a.arg().partial_cmp(&b.arg()).unwrap_or(Ordering::Equal))
        });
        let moduli: Vec<f64> = roots.iter().map(|r| r.norm()).collect();
        let outside_count = moduli.iter().filter(|&&m| m > 1.0 + circle_tolerance).count();
        let on_circle_count = moduli.iter().filter(|&&m| (m - 1.0).abs() <= circle_tolerance).count();
        Self {
            roots,
            moduli,
            outside_count,
            on_circle_count,
            circle_tolerance,
        }
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// The roots strictly outside the unit circle (the `alpha_k`).
    pub fn outside(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.roots
            .iter()
            .zip(&self.moduli)
            .filter(move |(_, &m)| m > 1.0 + self.circle_tolerance)
            .map(|(r, _)| *r)
    }

    /// Angles in `[0, pi]` where `g` vanishes, one entry per distinct angle.
    pub fn singular_angles(&self) -> Vec<f64> {
        self.angles_within(self.circle_tolerance)
    }

    /// Angles in `[0, pi]` of roots close enough to the circle that `ln g` has a
    /// sharp dip there; includes the exact singular angles.
    pub fn near_singular_angles(&self) -> Vec<f64> {
        self.angles_within(NEAR_CIRCLE_BAND.max(self.circle_tolerance))
    }

    fn angles_within(&self, band: f64) -> Vec<f64> {
        let mut angles: Vec<f64> = self
            .roots
            .iter()
            .zip(&self.moduli)
            .filter(|(_, &m)| (m - 1.0).abs() <= band)
            .map(|(r, _)| snap_angle(r.arg().abs()))
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        angles.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        angles
    }

    /// Coefficients of `prod_k (1 - rho_k z^{-1})`, real parts only.
    pub fn reconstruct_coeffs(&self) -> Vec<f64> {
        poly_from_roots(&self.roots).iter().map(|c| c.re).collect()
    }
}

fn snap_angle(w: f64) -> f64 {
    if w < 1e-14 {
        0.0
    } else if PI - w < 1e-14 {
        PI
    } else {
        w
    }
}

/// Coefficients `(c_0 = 1, c_1, ..., c_M)` of `prod_k (1 - rho_k z^{-1})`.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        c.push(Complex64::new(0.0, 0.0));
        for k in (1..c.len()).rev() {
            let prev = c[k - 1];
            c[k] -= r * prev;
        }
    }
    c
}

/// Evaluates `z^M A(z) = sum_k a_k z^{M-k}` and its derivative by Horner's rule.
fn eval_with_derivative(a: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(a[0], 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in &a[1..] {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// `|z^M A(z)|` at a candidate root.
pub fn residual(model: &ArModel, z: Complex64) -> f64 {
    eval_with_derivative(model.coeffs(), z).0.norm()
}

pub fn characteristic_roots(model: &ArModel) -> Result<RootSet> {
    characteristic_roots_with(model, DEFAULT_CIRCLE_TOLERANCE)
}

pub fn characteristic_roots_with(model: &ArModel, circle_tolerance: f64) -> Result<RootSet> {
    let a = model.coeffs();
    let degree = model.order();
    let max_abs = a.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let bound = 1e-8 * (1.0 + max_abs);

    let roots = match degree {
        0 => Vec::new(),
        1 => vec![Complex64::new(-a[1], 0.0)],
        _ => {
            let mut z = aberth(a)?;
            for r in z.iter_mut() {
                *r = newton_polish(a, *r);
            }
            symmetrize_conjugates(&mut z);
            merge_clusters(a, &mut z);
            z
        }
    };

    let worst = roots.iter().map(|&r| residual(model, r)).fold(0.0, f64::max);
    if worst > bound || roots.iter().any(|r| !r.re.is_finite() || !r.im.is_finite()) {
        return Err(Error::ConvergenceFailure {
            iterations: MAX_ITERATIONS,
            residual: worst,
        });
    }
    Ok(RootSet::from_roots(roots, circle_tolerance))
}

fn aberth(a: &[f64]) -> Result<Vec<Complex64>> {
    let degree = a.len() - 1;
    let radius = 1.0 + a.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / degree as f64 + 0.4))
        .collect();
    let mut converged = vec![false; degree];

    for _ in 0..MAX_ITERATIONS {
        let mut moved = false;
        for k in 0..degree {
            if converged[k] {
                continue;
            }
            let (p, dp) = eval_with_derivative(a, z[k]);
            if p.norm() == 0.0 {
                converged[k] = true;
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..degree).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[k] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[k].norm().max(1e-300) {
                converged[k] = true;
            } else {
                moved = true;
            }
        }
        if !moved {
            return Ok(z);
        }
    }
    // Clustered roots converge slowly; the residual test in the caller decides.
    Ok(z)
}

fn newton_polish(a: &[f64], mut z: Complex64) -> Complex64 {
    let mut best = eval_with_derivative(a, z).0.norm();
    for _ in 0..8 {
        let (p, dp) = eval_with_derivative(a, z);
        if dp.norm() == 0.0 {
            break;
        }
        let candidate = z - p / dp;
        let value = eval_with_derivative(a, candidate).0.norm();
        if !(value < best) {
            break;
        }
        best = value;
        z = candidate;
    }
    z
}

/// A root of multiplicity `m` comes out of the iteration as `m` points spread by
/// about `eps^(1/m)`. Each tight cluster is replaced by the nearby simple zero
/// of the `(m-1)`-th derivative when that does not worsen the residual.
fn merge_clusters(a: &[f64], z: &mut [Complex64]) {
    let n = z.len();
    let mut label: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if (z[i] - z[j]).norm() <= 1e-3 * (1.0 + z[i].norm()) {
                let (from, to) = (label[i], label[j]);
                for l in label.iter_mut() {
                    if *l == from {
                        *l = to;
                    }
                }
            }
        }
    }
    for root in 0..n {
        let members: Vec<usize> = (0..n).filter(|&i| label[i] == root).collect();
        if members.len() < 2 {
            continue;
        }
        let mut d: Vec<f64> = a.to_vec();
        for _ in 1..members.len() {
            let deg = d.len() - 1;
            d = d[..deg].iter().enumerate().map(|(k, c)| c * (deg - k) as f64).collect();
        }
        let mut c = members.iter().map(|&i| z[i]).sum::<Complex64>() / members.len() as f64;
        if members.iter().map(|&i| z[i].im).sum::<f64>().abs() <= 1e-12 * (1.0 + c.norm()) {
            c.im = 0.0;
        }
        for _ in 0..30 {
            let (p, dp) = eval_with_derivative(&d, c);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            c -= step;
            if step.norm() <= 2.0 * f64::EPSILON * c.norm() {
                break;
            }
        }
        let worst = members
            .iter()
            .map(|&i| eval_with_derivative(a, z[i]).0.norm())
            .fold(0.0, f64::max);
        let noise = 64.0 * f64::EPSILON * a.iter().fold(0.0, |acc, x| acc * c.norm() + x.abs());
        if c.re.is_finite() && c.im.is_finite() && eval_with_derivative(a, c).0.norm() <= worst.max(noise) {
            for &i in &members {
                z[i] = c;
            }
        }
    }
}

/// Pairs each root in the upper half plane with its nearest partner in the lower
/// half plane and makes them exact conjugates; near-real roots become real.
fn symmetrize_conjugates(z: &mut [Complex64]) {
    let tiny = |r: &Complex64| r.im.abs() <= 1e-12 * (1.0 + r.norm());
    for r in z.iter_mut() {
        if tiny(r) {
            r.im = 0.0;
        }
    }
    let upper: Vec<usize> = (0..z.len()).filter(|&i| z[i].im > 0.0).collect();
    let mut lower: Vec<usize> = (0..z.len()).filter(|&i| z[i].im < 0.0).collect();
    if upper.len() != lower.len() {
        return;
    }
    for &i in &upper {
        let (pos, _) = lower
            .iter()
            .enumerate()
            .map(|(pos, &j)| (pos, (z[i] - z[j].conj()).norm()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(Ordering::Equal))
            .expect("lower half has a partner");
        let j = lower.swap_remove(pos);
        let mean = (z[i] + z[j].conj()) * 0.5;
        z[i] = mean;
        z[j] = mean.conj();
    }
}

/// `sum_k max(ln |rho_k|, 0)` over roots strictly outside the circle (within
/// tolerance, on-circle roots contribute nothing).
pub fn log_correction(roots: &RootSet) -> f64 {
    roots.outside().map(|r| r.norm().ln()).fold(0.0, |acc, x| acc + x)
}

/// `(1/2pi) int ln g` in closed form: twice [`log_correction`] since `a_0 = 1`.
pub fn jensen_mean_log(roots: &RootSet) -> f64 {
    2.0 * log_correction(roots)
}
