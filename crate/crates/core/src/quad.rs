//! Adaptive Gauss-Kronrod quadrature for even, `2 pi`-periodic integrands.
//!
//! All integrals are returned as means, `(1/2pi) int_{-pi}^{pi} f`, computed
//! as `(1/pi) int_0^pi f`. Known zeros of `g` (where `ln g` is integrably
//! singular) get a fixed geometric grading of panels before adaptivity starts;
//! inside that grading the integrand receives the abscissa as an offset from the
//! singular point so it can be evaluated without cancellation.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::armodel::{spectral_density, ArModel};
use crate::error::{Error, Result};
use crate::rootfind::{characteristic_roots, RootSet};

const GRADING_LEVELS: usize = 40;
const GRADING_RATIO: f64 = 0.25;
const MAX_PANELS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of bisections of any starting panel.
    pub max_depth: u32,
    /// Points of `[0, pi]` where the integrand may be log-singular.
    pub singular_points: Vec<f64>,
    /// Points of `[0, pi]` where the integrand has a kink; panels start there.
    pub breakpoints: Vec<f64>,
    /// Absolute tolerance granted to panels inside singular gradings.
    pub singular_tol: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_depth: 40,
            singular_points: Vec::new(),
            breakpoints: Vec::new(),
            singular_tol: 1e-7,
        }
    }
}

impl QuadSpec {
    pub fn with_singular_points(mut self, points: Vec<f64>) -> Self {
        self.singular_points = points;
        self
    }

    pub fn with_breakpoints(mut self, points: Vec<f64>) -> Self {
        self.breakpoints = points;
        self
    }

    pub fn with_tolerance(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("quadrature tolerances must be positive".into()));
        }
        if self.max_depth < 10 {
            return Err(Error::InvalidArgument("max_depth must be at least 10".into()));
        }
        let outside = |p: &f64| !(0.0..=PI).contains(p);
        if self.singular_points.iter().any(outside) {
            return Err(Error::InvalidArgument("singular points must lie in [0, pi]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Where the integrand is being sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abscissa {
    pub omega: f64,
    /// Inside a singular grading: `(point index, point, offset)` with `omega = point + offset`.
    pub near: Option<(usize, f64, f64)>,
}

impl Abscissa {
    pub fn plain(omega: f64) -> Self {
        Self { omega, near: None }
    }
}

/// `(1/pi) int_0^pi f(omega) d omega`, which equals the mean over `[-pi, pi]`
/// for even `f`.
pub fn integrate_periodic<F>(f: F, spec: &QuadSpec) -> Result<QuadResult>
where
    F: Fn(Abscissa) -> f64,
{
    spec.validate()?;
    let half = integrate_half(&f, spec, 1.0)?;
    Ok(QuadResult {
        value: half.value / PI,
        error_estimate: half.error_estimate / PI,
        evaluations: half.evaluations,
    })
}

/// `(1/2pi) int_{-pi}^{pi} f`, integrating both halves independently.
pub fn integrate_full_interval<F>(f: F, spec: &QuadSpec) -> Result<QuadResult>
where
    F: Fn(Abscissa) -> f64,
{
    spec.validate()?;
    let right = integrate_half(&f, spec, 1.0)?;
    let left = integrate_half(&f, spec, -1.0)?;
    Ok(QuadResult {
        value: (right.value + left.value) / (2.0 * PI),
        error_estimate: (right.error_estimate + left.error_estimate) / (2.0 * PI),
        evaluations: right.evaluations + left.evaluations,
    })
}

/// Convenience wrapper for integrands that only need `omega`.
pub fn integrate_periodic_fn<F>(f: F, spec: &QuadSpec) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    integrate_periodic(|x: Abscissa| f(x.omega), spec)
}

/// `ln g` that stays accurate next to zeros of `g`.
///
/// Away from singular gradings this is `ln g(omega)` evaluated directly. Inside
/// a grading `g` is taken in factored form, `prod_k |e^{j omega} - rho_k|^2`,
/// with each angular difference formed as `(point - arg rho_k) + offset` so the
/// offset is never rounded against `omega`.
#[derive(Debug, Clone)]
pub struct LogDensity<'a> {
    model: &'a ArModel,
    roots: Vec<(f64, f64)>,
}

impl<'a> LogDensity<'a> {
    pub fn new(model: &'a ArModel, roots: &RootSet) -> Self {
        let roots = roots.roots.iter().map(|r: &Complex64| (r.norm(), r.arg())).collect();
        Self { model, roots }
    }

    pub fn eval(&self, x: Abscissa) -> f64 {
        match x.near {
            None => spectral_density(self.model, x.omega).ln(),
            Some((_, point, offset)) => self
                .roots
                .iter()
                .map(|&(r, phi)| {
                    let mut d0 = (point - phi) % (2.0 * PI);
                    if d0 > PI {
                        d0 -= 2.0 * PI;
                    } else if d0 < -PI {
                        d0 += 2.0 * PI;
                    }
                    if d0.abs() <= 1e-12 {
                        d0 = 0.0;
                    }
                    let s = (0.5 * (d0 + offset)).sin();
                    ((1.0 - r) * (1.0 - r) + 4.0 * r * s * s).ln()
                })
                .sum(),
        }
    }
}

/// `(1/2pi) int ln g`, with `spec.singular_points` expected to hold the angles of
/// the zeros of `g` on the circle.
pub fn mean_log_g_numeric(model: &ArModel, spec: &QuadSpec) -> Result<QuadResult> {
    let roots = characteristic_roots(model)?;
    let log_g = LogDensity::new(model, &roots);
    integrate_periodic(|x| log_g.eval(x), spec)
}

#[derive(Debug, Clone)]
struct Panel {
    /// Index into the singular point list when the panel lies in a grading.
    anchor: Option<usize>,
    base: f64,
    lo: f64,
    hi: f64,
    depth: u32,
    value: f64,
    error: f64,
    /// The error estimate sits at the rounding floor; splitting cannot lower it.
    settled: bool,
}

/// Refinement queue ordered by error, ties going to the older panel.
type Queue = BinaryHeap<(u64, Reverse<usize>)>;

fn integrate_half<F>(f: &F, spec: &QuadSpec, sign: f64) -> Result<QuadResult>
where
    F: Fn(Abscissa) -> f64,
{
    let mut singular = spec.singular_points.clone();
    singular.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    singular.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

    let mut evaluations = 0usize;
    let mut panels: Vec<Panel> = initial_panels(&singular, &spec.breakpoints);
    let mut alive = vec![true; panels.len()];
    let (mut regular_queue, mut singular_queue) = (Queue::new(), Queue::new());
    let enqueue = |p: &Panel, i: usize, regular: &mut Queue, graded: &mut Queue| {
        if p.depth < spec.max_depth && !p.settled {
            let queue = if p.anchor.is_some() { graded } else { regular };
            queue.push((p.error.to_bits(), Reverse(i)));
        }
    };
    for (i, p) in panels.iter_mut().enumerate() {
        (p.value, p.error, p.settled) = gauss_kronrod(f, p, &singular, sign);
        evaluations += 15;
        enqueue(p, i, &mut regular_queue, &mut singular_queue);
    }

    let exact_sums = |panels: &[Panel], alive: &[bool]| {
        let live = || panels.iter().zip(alive).filter(|(_, &a)| a).map(|(p, _)| p);
        let total: f64 = live().map(|p| p.value).sum();
        let regular: f64 = live().filter(|p| p.anchor.is_none()).map(|p| p.error).sum();
        let graded: f64 = live().filter(|p| p.anchor.is_some()).map(|p| p.error).sum();
        (total, regular, graded)
    };
    let (mut total, mut regular_err, mut singular_err) = exact_sums(&panels, &alive);
    loop {
        let mut target = spec.abs_tol.max(spec.rel_tol * total.abs());
        let mut regular_ok = regular_err <= target;
        let mut singular_ok = singular_err <= target.max(spec.singular_tol);
        if regular_ok && singular_ok {
            // Running sums drift; decide on exact ones.
            (total, regular_err, singular_err) = exact_sums(&panels, &alive);
            target = spec.abs_tol.max(spec.rel_tol * total.abs());
            regular_ok = regular_err <= target;
            singular_ok = singular_err <= target.max(spec.singular_tol);
            if regular_ok && singular_ok {
                return Ok(QuadResult {
                    value: total,
                    error_estimate: regular_err + singular_err,
                    evaluations,
                });
            }
        }
        let singular_target = target.max(spec.singular_tol);

        let top = |q: &Queue, ok: bool| if ok { None } else { q.peek().copied() };
        let pick = match (top(&regular_queue, regular_ok), top(&singular_queue, singular_ok)) {
            (Some(r), Some(s)) => Some(if s > r { &mut singular_queue } else { &mut regular_queue }),
            (Some(_), None) => Some(&mut regular_queue),
            (None, Some(_)) => Some(&mut singular_queue),
            (None, None) => None,
        };
        let Some(queue) = pick.filter(|_| panels.len() < MAX_PANELS) else {
            let (estimate, limit) = if regular_ok {
                (singular_err, singular_target)
            } else {
                (regular_err, target)
            };
            return Err(Error::ToleranceNotMet {
                estimate: estimate / PI,
                target: limit / PI,
            });
        };
        let Some((_, Reverse(index))) = queue.pop() else {
            unreachable!("queue was peeked non-empty");
        };

        alive[index] = false;
        let parent = panels[index].clone();
        total -= parent.value;
        if parent.anchor.is_some() {
            singular_err -= parent.error;
        } else {
            regular_err -= parent.error;
        }
        let mid = 0.5 * (parent.lo + parent.hi);
        for (lo, hi) in [(parent.lo, mid), (mid, parent.hi)] {
            let mut child = Panel {
                lo,
                hi,
                depth: parent.depth + 1,
                ..parent
            };
            (child.value, child.error, child.settled) = gauss_kronrod(f, &child, &singular, sign);
            evaluations += 15;
            total += child.value;
            if child.anchor.is_some() {
                singular_err += child.error;
            } else {
                regular_err += child.error;
            }
            enqueue(&child, panels.len(), &mut regular_queue, &mut singular_queue);
            panels.push(child);
            alive.push(true);
        }
    }
}

fn initial_panels(singular: &[f64], breakpoints: &[f64]) -> Vec<Panel> {
    let mut panels = Vec::new();
    let regular = |lo: f64, hi: f64| Panel {
        anchor: None,
        base: 0.0,
        lo,
        hi,
        depth: 0,
        value: 0.0,
        error: 0.0,
        settled: false,
    };

    // Radius of each grading: clear of neighbours and of the interval ends.
    let mut cuts: Vec<(f64, f64)> = Vec::new();
    for (i, &s) in singular.iter().enumerate() {
        let mut radius = PI / 16.0;
        if i > 0 {
            radius = radius.min(0.5 * (s - singular[i - 1]));
        }
        if i + 1 < singular.len() {
            radius = radius.min(0.5 * (singular[i + 1] - s));
        }
        if s > 0.0 {
            radius = radius.min(s);
        }
        if s < PI {
            radius = radius.min(PI - s);
        }
        if s > 0.0 && s < PI {
            radius = radius.min(s).min(PI - s);
        }
        let sides: &[f64] = match (s > 0.0, s < PI) {
            (true, true) => &[-1.0, 1.0],
            (false, _) => &[1.0],
            (_, false) => &[-1.0],
        };
        for &side in sides {
            let mut outer = radius;
            for _ in 0..GRADING_LEVELS {
                let inner = outer * GRADING_RATIO;
                panels.push(graded(i, s, side, inner, outer));
                outer = inner;
            }
            panels.push(graded(i, s, side, 0.0, outer));
        }
        cuts.push((
            if s > 0.0 { s - radius } else { s },
            if s < PI { s + radius } else { s },
        ));
    }

    // Regular stretches between gradings, split at breakpoints and into pieces of at most pi/8.
    let mut edges = vec![0.0];
    for &(lo, hi) in &cuts {
        edges.push(lo);
        edges.push(hi);
    }
    edges.push(PI);
    for pair in edges.chunks(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let mut stops: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > lo + 1e-12 && b < hi - 1e-12)
            .collect();
        stops.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        stops.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        let mut start = lo;
        for end in stops.into_iter().chain(std::iter::once(hi)) {
            let pieces = ((end - start) / (PI / 8.0)).ceil().max(1.0) as usize;
            let width = (end - start) / pieces as f64;
            for k in 0..pieces {
                let a = start + k as f64 * width;
                let b = if k + 1 == pieces { end } else { a + width };
                panels.push(regular(a, b));
            }
            start = end;
        }
    }
    panels
}

fn graded(anchor: usize, point: f64, side: f64, inner: f64, outer: f64) -> Panel {
    let (lo, hi) = if side > 0.0 { (inner, outer) } else { (-outer, -inner) };
    Panel {
        anchor: Some(anchor),
        base: point,
        lo,
        hi,
        depth: 0,
        value: 0.0,
        error: 0.0,
        settled: false,
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// 15-point Kronrod estimate over the panel with the embedded 7-point Gauss
/// rule for the error (QUADPACK scaling). Endpoints are never evaluated.
fn gauss_kronrod<F>(f: &F, panel: &Panel, singular: &[f64], sign: f64) -> (f64, f64, bool)
where
    F: Fn(Abscissa) -> f64,
{
    let center = 0.5 * (panel.lo + panel.hi);
    let half = 0.5 * (panel.hi - panel.lo);
    let eval = |t: f64| {
        let x = match panel.anchor {
            Some(i) => Abscissa {
                omega: sign * (panel.base + t),
                near: Some((i, sign * singular[i], sign * t)),
            },
            None => Abscissa::plain(sign * (panel.base + t)),
        };
        f(x)
    };

    let fc = eval(center);
    let mut gauss = fc * WG[3];
    let mut kronrod = fc * WGK[7];
    let mut abs_sum = kronrod.abs();
    let mut f1 = [0.0; 7];
    let mut f2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let a = eval(center - dx);
        let b = eval(center + dx);
        f1[j] = a;
        f2[j] = b;
        kronrod += WGK[j] * (a + b);
        abs_sum += WGK[j] * (a.abs() + b.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (a + b);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }
    let width = half.abs();
    let value = kronrod * half;
    let abs_sum = abs_sum * width;
    let asc = asc * width;
    let mut err = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let mut settled = false;
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let floor = 50.0 * f64::EPSILON * abs_sum;
        settled = err <= floor;
        err = err.max(floor);
    }
    if !value.is_finite() {
        return (value, f64::INFINITY, false);
    }
    (value, err, settled)
}
