//! Dense helpers for the Gram spectrum of a unit lower-triangular banded
//! Toeplitz matrix `A_n`.
//!
//! The singular values of `A_n` range down to about `|rho|^-n` for every zero
//! `rho` of `A(z)` outside the unit circle, far below what a dense eigensolver on
//! `A_n^T A_n` can resolve. The directions carrying those small values are known
//! in closed form: `v(mu)_j = mu^(n-1-j)` with `mu = 1/rho` is annihilated by
//! every row of `A_n` below the band, and the remaining rows of `A_n v(mu)` are
//! short explicit sums. Repeated or clustered zeros use divided differences of
//! `v` over the nodes instead, which span the same space and stay well defined
//! in the confluent limit. With an orthonormal basis `Q = [Q_V, Q_perp]` built
//! from those vectors, `A_n Q` has the same singular values as `A_n`, its first
//! block is formed from the exact images, and a one-sided Jacobi iteration on
//! it recovers every singular value to high relative accuracy.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Log singular values of `A_n` (ascending), where `a` is the band and `mus`
/// lists `1/rho` for zeros outside the circle in order of increasing modulus,
/// with conjugate pairs represented once by the member with positive imaginary
/// part.
pub(crate) fn ar_log_singular_values(a: &[f64], n: usize, mus: &[Complex64]) -> Result<Vec<f64>> {
    let (basis, images) = exponential_basis(a, n, mus);
    let columns = if basis.is_empty() {
        (0..n).map(|j| banded_column(a, n, j)).collect()
    } else {
        rotated_columns(a, n, basis, images)
    };
    let mut logs = one_sided_jacobi(columns, n)?;
    logs.sort_by(f64::total_cmp);
    Ok(logs)
}

/// Column `j` of `A_n`.
fn banded_column(a: &[f64], n: usize, j: usize) -> Vec<f64> {
    let mut col = vec![0.0; n];
    for (k, &ak) in a.iter().enumerate() {
        if j + k < n {
            col[j + k] = ak;
        }
    }
    col
}

/// `A_n x` for a dense vector.
fn banded_apply(a: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| a.iter().enumerate().take(i + 1).map(|(k, &ak)| ak * x[i - k]).sum())
        .collect()
}

/// Divided-difference basis vectors and their exact images under `A_n`, at most `n`.
fn exponential_basis(a: &[f64], n: usize, mus: &[Complex64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let order = a.len() - 1;
    let len = n + order + 1;
    // h[q] = complete homogeneous symmetric polynomial of degree q in the nodes so far.
    let mut h = vec![0.0; len];
    h[0] = 1.0;
    let mut nodes = 0usize;
    let mut basis = Vec::new();
    let mut images = Vec::new();

    let emit = |h: &dyn Fn(isize) -> f64, nodes: usize, basis: &mut Vec<Vec<f64>>, images: &mut Vec<Vec<f64>>| {
        let shift = nodes as isize - 1;
        let v: Vec<f64> = (0..n).map(|j| h((n - 1 - j) as isize - shift)).collect();
        let mut w = vec![0.0; n];
        for (i, wi) in w.iter_mut().enumerate().take(order.min(n)) {
            let s: f64 = (i + 1..=order)
                .map(|k| a[k] * h((n - 1 - i + k) as isize - shift))
                .sum();
            *wi = -s;
        }
        basis.push(v);
        images.push(w);
    };

    for &mu in mus {
        if basis.len() >= n {
            break;
        }
        if mu.im == 0.0 {
            let x = mu.re;
            let mut next = vec![0.0; len];
            next[0] = h[0];
            for q in 1..len {
                next[q] = h[q] + x * next[q - 1];
            }
            h = next;
            nodes += 1;
            let at = |q: isize| if q < 0 { 0.0 } else { h[q as usize] };
            emit(&at, nodes, &mut basis, &mut images);
        } else {
            // Re of the divided difference with mu appended, then the real
            // divided difference with both mu and its conjugate appended.
            let mut hc = vec![Complex64::new(0.0, 0.0); len];
            hc[0] = Complex64::new(h[0], 0.0);
            for q in 1..len {
                hc[q] = h[q] + mu * hc[q - 1];
            }
            let at = |q: isize| if q < 0 { 0.0 } else { hc[q as usize].re };
            emit(&at, nodes + 1, &mut basis, &mut images);

            let (twice_re, norm2) = (2.0 * mu.re, mu.norm_sqr());
            let mut next = vec![0.0; len];
            next[0] = h[0];
            next[1] = h[1] + twice_re * next[0];
            for q in 2..len {
                next[q] = h[q] + twice_re * next[q - 1] - norm2 * next[q - 2];
            }
            h = next;
            nodes += 2;
            if basis.len() < n {
                let at = |q: isize| if q < 0 { 0.0 } else { h[q as usize] };
                emit(&at, nodes, &mut basis, &mut images);
            }
        }
    }
    basis.truncate(n);
    images.truncate(n);
    (basis, images)
}

/// Columns of `A_n [Q_V, Q_perp]` where `V = Q_V R` is the basis.
fn rotated_columns(a: &[f64], n: usize, basis: Vec<Vec<f64>>, images: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let m = basis.len();
    let (reflectors, r) = householder_qr(basis, n);

    // A Q_V = (A V) R^{-1}, column by column.
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..m {
        let mut col = images[j].clone();
        for (i, prev) in out.iter().enumerate().take(j) {
            let rij = r[j][i];
            if rij != 0.0 {
                for (c, p) in col.iter_mut().zip(prev) {
                    *c -= rij * p;
                }
            }
        }
        let d = r[j][j];
        for c in col.iter_mut() {
            *c /= d;
        }
        out.push(col);
    }

    for k in m..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        for (start, v) in reflectors.iter().enumerate().rev() {
            reflect(v, start, &mut e);
        }
        out.push(banded_apply(a, &e));
    }
    out
}

/// Householder QR of the `n x m` matrix given by columns. Returns the unit
/// reflector vectors (reflector `j` acts on rows `j..`) and `R` by columns.
fn householder_qr(mut cols: Vec<Vec<f64>>, n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let m = cols.len();
    let mut reflectors = Vec::with_capacity(m);
    for j in 0..m {
        let x = &cols[j][j..];
        let alpha = scaled_norm(x);
        let mut v = x.to_vec();
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vn = scaled_norm(&v);
        if vn > 0.0 {
            for c in v.iter_mut() {
                *c /= vn;
            }
        }
        for col in cols.iter_mut().skip(j) {
            reflect(&v, j, col);
        }
        reflectors.push(v);
    }
    let r = cols
        .into_iter()
        .enumerate()
        .map(|(j, c)| c[..=j.min(n - 1)].to_vec())
        .collect();
    (reflectors, r)
}

/// `x <- (I - 2 v v^T) x` on rows `start..`.
fn reflect(v: &[f64], start: usize, x: &mut [f64]) {
    let tail = &mut x[start..];
    let dot: f64 = v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
    if dot != 0.0 {
        for (t, vi) in tail.iter_mut().zip(v) {
            *t -= 2.0 * dot * vi;
        }
    }
}

fn scaled_norm(x: &[f64]) -> f64 {
    let big = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if big == 0.0 || !big.is_finite() {
        return big;
    }
    let s: f64 = x.iter().map(|v| (v / big) * (v / big)).sum();
    big * s.sqrt()
}

/// `x * 2^e` without intermediate overflow of the power.
fn ldexp(x: f64, e: i32) -> f64 {
    if e.abs() <= 1000 {
        x * 2f64.powi(e)
    } else {
        let half = e / 2;
        x * 2f64.powi(half) * 2f64.powi(e - half)
    }
}

/// A column stored as `values * 2^exp` with `values` of order one.
struct Scaled {
    values: Vec<f64>,
    exp: i32,
}

impl Scaled {
    fn new(values: Vec<f64>) -> Self {
        let mut col = Self { values, exp: 0 };
        col.renormalize();
        col
    }

    fn renormalize(&mut self) {
        let big = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if big == 0.0 || (0.25..=4.0).contains(&big) {
            return;
        }
        let shift = -(big.log2().round() as i32);
        for v in self.values.iter_mut() {
            *v = ldexp(*v, shift);
        }
        self.exp -= shift;
    }
}

const MAX_SWEEPS: usize = 80;
const WIDE_GAP: i32 = 200;

/// One-sided Jacobi on the given columns; returns `ln` of each column norm
/// after convergence, i.e. the log singular values in column order.
fn one_sided_jacobi(columns: Vec<Vec<f64>>, rows: usize) -> Result<Vec<f64>> {
    let mut cols: Vec<Scaled> = columns.into_iter().map(Scaled::new).collect();
    let k = cols.len();
    let tol = f64::EPSILON * (rows as f64).sqrt();
    let mut norms: Vec<f64> = cols.iter().map(|c| dot(&c.values, &c.values)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let (left, right) = cols.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                let app = norms[p];
                let aqq = norms[q];
                if app == 0.0 || aqq == 0.0 {
                    continue;
                }
                let apq = dot(&cp.values, &cq.values);
                if apq.abs() <= tol * (app.sqrt() * aqq.sqrt()) {
                    continue;
                }
                rotated = true;
                let gap = cq.exp - cp.exp;
                if gap > WIDE_GAP {
                    let f = apq / aqq;
                    axpy(-f, &cq.values, &mut cp.values);
                } else if gap < -WIDE_GAP {
                    let f = apq / app;
                    axpy(-f, &cp.values, &mut cq.values);
                } else {
                    let alpha = app;
                    let beta = ldexp(aqq, 2 * gap);
                    let gamma = ldexp(apq, gap);
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = if zeta == 0.0 {
                        1.0
                    } else {
                        zeta.signum() / (zeta.abs() + 1f64.hypot(zeta))
                    };
                    let c = 1.0 / 1f64.hypot(t);
                    let s = c * t;
                    let s_pq = ldexp(s, gap);
                    let s_qp = ldexp(s, -gap);
                    for (x, y) in cp.values.iter_mut().zip(cq.values.iter_mut()) {
                        let (xp, yq) = (*x, *y);
                        *x = c * xp - s_pq * yq;
                        *y = s_qp * xp + c * yq;
                    }
                }
                cp.renormalize();
                cq.renormalize();
                norms[p] = dot(&cp.values, &cp.values);
                norms[q] = dot(&cq.values, &cq.values);
            }
        }
        if !rotated {
            return Ok(cols
                .iter()
                .zip(&norms)
                .map(|(c, &nn)| 0.5 * nn.ln() + c.exp as f64 * std::f64::consts::LN_2)
                .collect());
        }
    }
    Err(Error::EigenFailure(format!(
        "one-sided Jacobi did not converge in {MAX_SWEEPS} sweeps"
    )))
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn axpy(f: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += f * xi;
    }
}
