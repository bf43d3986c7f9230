//! Randomized invariants over models generated from their roots.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use ratedist::armodel::{autocovariance_of_g, simulate_path, spectral_density, transfer_at, NoiseSequence};
use ratedist::quad::{integrate_periodic, integrate_periodic_fn, mean_log_g_numeric, Abscissa, QuadSpec};
use ratedist::rdfun::{log_grid, Prepared};
use ratedist::rootfind::{characteristic_roots, jensen_mean_log, log_correction, poly_from_roots, RootSet};
use ratedist::toeplitz::{
    ar_gram_spectrum, build_ar_matrix, finite_order_rd, mid, theorem1_gap, toeplitz_of_g_matrix,
    toeplitz_of_g_spectrum, ClampRange, SpectrumSource, TestFunction,
};
use ratedist::ArModel;

/// Real roots and conjugate pairs with moduli in `[lo, hi]`, kept away from
/// the unit circle by `gap`.
fn roots_strategy(lo: f64, hi: f64, gap: f64) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((lo..hi, 0.0f64..PI, any::<bool>()), 1..4).prop_map(move |specs| {
        let mut roots = Vec::new();
        for (mut r, angle, pair) in specs {
            if (r - 1.0).abs() < gap {
                r = if r < 1.0 { 1.0 - gap } else { 1.0 + gap };
            }
            if pair && angle > 0.05 && angle < PI - 0.05 {
                roots.push(Complex64::from_polar(r, angle));
                roots.push(Complex64::from_polar(r, -angle));
            } else {
                roots.push(Complex64::new(if angle < PI / 2.0 { r } else { -r }, 0.0));
            }
        }
        roots
    })
}

fn model_from_roots(roots: &[Complex64], sigma2: f64) -> ArModel {
    let a: Vec<f64> = poly_from_roots(roots).iter().map(|c| c.re).collect();
    ArModel::new(a, sigma2).unwrap()
}

fn model_strategy() -> impl Strategy<Value = ArModel> {
    (roots_strategy(0.3, 3.0, 0.05), 0.2f64..5.0).prop_map(|(r, s)| model_from_roots(&r, s))
}

fn mild_model_strategy() -> impl Strategy<Value = ArModel> {
    (roots_strategy(0.3, 1.6, 0.1), 0.5f64..2.0).prop_map(|(r, s)| model_from_roots(&r, s))
}

fn coeff_model_strategy() -> impl Strategy<Value = ArModel> {
    (prop::collection::vec(-2.0f64..2.0, 1..6), 0.1f64..10.0).prop_map(|(tail, s)| {
        let mut a = vec![1.0];
        a.extend(tail);
        ArModel::new(a, s).unwrap()
    })
}

fn ulps(a: f64, b: f64) -> u64 {
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn density_is_squared_transfer_and_even(model in coeff_model_strategy(), w in -PI..PI) {
        let g = spectral_density(&model, w);
        prop_assert!(g >= 0.0);
        prop_assert!(ulps(g, transfer_at(&model, w).norm_sqr()) <= 4);
        prop_assert_eq!(g, spectral_density(&model, -w));
    }

    #[test]
    fn autocovariance_matches_fourier_coefficients(model in coeff_model_strategy(), lag in 0usize..8) {
        let spec = QuadSpec::default().with_tolerance(1e-12, 1e-12);
        let q = integrate_periodic_fn(|w| spectral_density(&model, w) * (lag as f64 * w).cos(), &spec).unwrap();
        let scale = model.coeff_l1().powi(2);
        prop_assert!((q.value - autocovariance_of_g(&model, lag)).abs() <= 1e-9 * scale);
    }

    #[test]
    fn impulse_response_inverts_the_filter(model in mild_model_strategy()) {
        let n = 40;
        let h = simulate_path(&model, &NoiseSequence::impulse(n).unwrap()).unwrap().values;
        let a = model.coeffs();
        let scale = h.iter().fold(1.0f64, |m, v| m.max(v.abs())) * model.coeff_l1();
        for t in 0..n {
            let conv: f64 = (0..=t.min(model.order())).map(|k| a[k] * h[t - k]).sum();
            let want = if t == 0 { 1.0 } else { 0.0 };
            prop_assert!((conv - want).abs() <= 1e-12 * scale, "t={} conv={}", t, conv);
        }
    }

    #[test]
    fn roots_reconstruct_coefficients(model in model_strategy()) {
        let roots = characteristic_roots(&model).unwrap();
        prop_assert_eq!(roots.degree(), model.order());
        let back = roots.reconstruct_coeffs();
        let scale = model.coeff_l1();
        for (x, y) in back.iter().zip(model.coeffs()) {
            prop_assert!((x - y).abs() <= 1e-7 * scale, "{:?} vs {:?}", back, model.coeffs());
        }
    }

    #[test]
    fn roots_are_closed_under_conjugation(model in model_strategy()) {
        let roots = characteristic_roots(&model).unwrap();
        for z in &roots.roots {
            let best = roots.roots.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(best <= 1e-9 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn jensen_matches_quadrature(model in model_strategy()) {
        let roots = characteristic_roots(&model).unwrap();
        prop_assert_eq!(roots.on_circle_count, 0);
        let spec = QuadSpec::default().with_singular_points(roots.near_singular_angles());
        let q = mean_log_g_numeric(&model, &spec).unwrap();
        prop_assert!((q.value - jensen_mean_log(&roots)).abs() <= 1e-6, "{} vs {}", q.value, jensen_mean_log(&roots));
    }

    #[test]
    fn jensen_scales_with_root_moduli(roots in roots_strategy(0.3, 3.0, 0.05), r in 1.0f64..4.0) {
        let scaled: Vec<Complex64> = roots.iter().map(|z| z * r).collect();
        let set = RootSet::from_roots(scaled.clone(), 1e-9);
        let want: f64 = scaled.iter().map(|z| z.norm()).filter(|&m| m > 1.0 + 1e-9).map(|m| 2.0 * m.ln()).sum();
        prop_assert!((jensen_mean_log(&set) - want).abs() <= 1e-12 * (1.0 + want.abs()));
        prop_assert!((2.0 * log_correction(&set) - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn quadrature_is_additive(c in prop::collection::vec(-3.0f64..3.0, 4), s in prop::collection::vec(-3.0f64..3.0, 4)) {
        let spec = QuadSpec::default().with_tolerance(1e-11, 1e-11);
        let f = |w: f64| c.iter().enumerate().map(|(k, v)| v * (k as f64 * w).cos()).sum::<f64>();
        let h = |w: f64| s.iter().enumerate().map(|(k, v)| v * ((k + 1) as f64 * w).cos()).sum::<f64>() * w.cos().exp();
        let sum = integrate_periodic_fn(|w| f(w) + h(w), &spec).unwrap().value;
        let parts = integrate_periodic_fn(f, &spec).unwrap().value + integrate_periodic_fn(h, &spec).unwrap().value;
        prop_assert!((sum - parts).abs() <= 3e-11);
        prop_assert!((integrate_periodic_fn(f, &spec).unwrap().value - c[0]).abs() <= 1e-11);
    }

    #[test]
    fn rate_point_invariants(model in model_strategy(), t in -3.0f64..3.0) {
        let p = Prepared::new(&model).unwrap();
        let theta = model.noise_variance() * 10f64.powf(t);
        let pt = p.rd_point(theta).unwrap();
        prop_assert!(pt.distortion <= theta * (1.0 + 1e-12));
        prop_assert!(pt.rate_kolmogorov >= 0.0);
        prop_assert!(pt.rate_autoregressive >= pt.rate_kolmogorov - 1e-9);
        prop_assert!((pt.gap - (pt.rate_autoregressive - pt.rate_kolmogorov)).abs() <= 1e-12);
        prop_assert!((pt.rate_autoregressive - pt.rate_hashimoto_arimoto).abs() <= 1e-6);
    }

    #[test]
    fn determinant_identity_and_bracketing(model in model_strategy(), n in 4usize..48) {
        let s = ar_gram_spectrum(&model, n).unwrap();
        let want = -(n as f64) * model.noise_variance().ln();
        prop_assert!((s.sum_log() - want).abs() <= 1e-8 * (1.0 + want.abs()), "{} vs {}", s.sum_log(), want);
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));

        let t = toeplitz_of_g_spectrum(&model, n).unwrap();
        let spec = ratedist::armodel::density_summary(&model, 4097).unwrap();
        let slack = 1e-10 * spec.max_value;
        prop_assert!(t.min() >= spec.min_value - slack);
        prop_assert!(t.max() <= spec.max_value + slack);
    }

    #[test]
    fn mid_clamps(x in -10.0f64..10.0, y in -20.0f64..20.0, w in 0.0f64..10.0) {
        let z = x + w;
        let m = mid(x, y, z).unwrap();
        prop_assert!(x <= m && m <= z);
        if x <= y && y <= z { prop_assert_eq!(m, y); }
        if y < x { prop_assert_eq!(m, x); }
        if y > z { prop_assert_eq!(m, z); }
        prop_assert!(mid(z + 1.0, y, x).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gap_is_constant_in_theta(model in model_strategy()) {
        let p = Prepared::new(&model).unwrap();
        let want = p.formula_gap().unwrap();
        for theta in log_grid(1e-3 * model.noise_variance(), 1e3 * model.noise_variance(), 10).unwrap() {
            let pt = p.rd_point(theta).unwrap();
            prop_assert!((pt.gap - want).abs() <= 1e-6, "theta={} gap={} want={}", theta, pt.gap, want);
        }
    }

    #[test]
    fn stable_models_collapse(roots in roots_strategy(0.2, 0.9, 0.0), sigma2 in 0.2f64..5.0) {
        let model = model_from_roots(&roots, sigma2);
        let p = Prepared::new(&model).unwrap();
        prop_assert!(p.formula_gap().unwrap().abs() <= 1e-9);
        for theta in [0.01, 0.3, 2.0, 50.0] {
            let pt = p.rd_point(theta * sigma2).unwrap();
            prop_assert!((pt.rate_autoregressive - pt.rate_kolmogorov).abs() <= 1e-9);
        }
    }

    #[test]
    fn small_distortion_law(model in model_strategy(), f in 0.01f64..1.0) {
        let s = ratedist::armodel::density_summary(&model, 4097).unwrap();
        let sigma2 = model.noise_variance();
        let theta = f * sigma2 / s.max_value;
        let p = Prepared::new(&model).unwrap();
        prop_assert!((p.distortion_at(theta).unwrap() - theta).abs() <= 1e-9 * theta);
        let r = p.rate_autoregressive(theta).unwrap();
        prop_assert!((r - 0.5 * (sigma2 / theta).ln()).abs() <= 1e-9, "{} vs {}", r, 0.5 * (sigma2 / theta).ln());
    }

    #[test]
    fn curve_is_monotone_and_convex(model in model_strategy()) {
        let sigma2 = model.noise_variance();
        let grid = log_grid(1e-3 * sigma2, 1e3 * sigma2, 40).unwrap();
        let pts = Prepared::new(&model).unwrap().rd_curve(&grid, false).unwrap();
        for w in pts.windows(2) {
            prop_assert!(w[1].distortion >= w[0].distortion - 1e-12 * w[1].distortion);
            prop_assert!(w[1].rate_autoregressive <= w[0].rate_autoregressive + 1e-9);
        }
        // Slopes dR/dD increase with D; flat stretches of D carry no slope.
        let slopes: Vec<f64> = pts
            .windows(2)
            .filter(|w| w[1].distortion - w[0].distortion > 1e-9 * w[1].distortion)
            .map(|w| (w[1].rate_autoregressive - w[0].rate_autoregressive) / (w[1].distortion - w[0].distortion))
            .collect();
        for s in slopes.windows(2) {
            prop_assert!(s[1] >= s[0] - 1e-9 * (1.0 + s[0].abs()), "{:?}", s);
        }
    }

    #[test]
    fn eigen_residuals_against_dense(model in model_strategy(), n in 4usize..32) {
        let t = toeplitz_of_g_matrix(&model, n);
        let eig = t.clone().symmetric_eigen();
        let norm_t = t.norm();
        for k in 0..n {
            let v = eig.eigenvectors.column(k);
            let r = &t * v - v * eig.eigenvalues[k];
            prop_assert!(r.norm() <= 1e-10 * norm_t);
        }

        // Gram spectrum: Weyl bound against a dense backward-stable solve.
        let a = build_ar_matrix(&model, n).unwrap().to_dense();
        let b: DMatrix<f64> = a.transpose() * &a / model.noise_variance();
        let mut dense: Vec<f64> = b.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        dense.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let s = ar_gram_spectrum(&model, n).unwrap();
        let bound = 1e-10 * b.norm();
        for (x, y) in s.eigenvalues.iter().zip(&dense) {
            prop_assert!((x - y).abs() <= bound, "{} vs {}", x, y);
        }
    }
}

fn fixed_models() -> Vec<ArModel> {
    [
        vec![1.0],
        vec![1.0, -0.5],
        vec![1.0, -1.0],
        vec![1.0, -2.0],
        vec![1.0, -1.6, 0.9],
    ]
    .into_iter()
    .map(|a| ArModel::new(a, 1.0).unwrap())
    .collect()
}

#[test]
fn quadrature_is_deterministic() {
    let model = ArModel::new(vec![1.0, -1.3, 0.4, 0.2], 1.0).unwrap();
    let spec = QuadSpec::default();
    let a = mean_log_g_numeric(&model, &spec).unwrap();
    let b = mean_log_g_numeric(&model, &spec).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.evaluations, b.evaluations);
}

#[test]
fn refinement_near_singularity_does_not_worsen() {
    let model = ArModel::wiener(1.0).unwrap();
    let roots = characteristic_roots(&model).unwrap();
    let log_g = ratedist::quad::LogDensity::new(&model, &roots);
    let mut prev = f64::INFINITY;
    for tol in [1e-4, 1e-6, 1e-8, 1e-10] {
        let spec = QuadSpec::default()
            .with_tolerance(tol, tol)
            .with_singular_points(roots.singular_angles());
        let err = integrate_periodic(|x: Abscissa| log_g.eval(x), &spec)
            .unwrap()
            .value
            .abs();
        assert!(err <= prev * (1.0 + 1e-9) + 1e-15, "tol={tol}: {err} after {prev}");
        prev = err;
    }
}

#[test]
fn clamped_spectral_means_converge() {
    for model in fixed_models() {
        let s = ratedist::armodel::density_summary(&model, 4097).unwrap();
        let range = ClampRange::new(s.min_value, s.max_value).unwrap();
        for f in [TestFunction::Identity, TestFunction::Square] {
            let gaps: Vec<f64> = [16, 32, 64, 128]
                .iter()
                .map(|&n| theorem1_gap(&model, f, range, n, SpectrumSource::ToeplitzOfG).unwrap())
                .collect();
            for w in gaps.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?} {f:?}: {gaps:?}", model.coeffs());
            }
        }
    }
}

#[test]
fn finite_order_rates_converge() {
    for a in [vec![1.0, -0.5], vec![1.0, -1.0], vec![1.0, -2.0]] {
        let model = ArModel::new(a, 1.0).unwrap();
        let theta = 1.0;
        let limit = Prepared::new(&model).unwrap().rate_autoregressive(theta).unwrap();
        let errs: Vec<f64> = [16, 32, 64, 128, 256]
            .iter()
            .map(|&n| (finite_order_rd(&model, n, theta).unwrap().1 - limit).abs())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "{:?}: {errs:?}", model.coeffs());
        }
    }
}
