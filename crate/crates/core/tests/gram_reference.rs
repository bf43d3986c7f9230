//! Gram spectra of `A_n^T A_n` (sigma^2 = 1) against values computed once in
//! 300-digit arithmetic by `oracles/gram_reference.py` and frozen here.
#![allow(clippy::excessive_precision)]

use ratedist::toeplitz::ar_gram_spectrum;
use ratedist::ArModel;

struct Case {
    a: &'static [f64],
    n: usize,
    smallest: [f64; 3],
}

const CASES: &[Case] = &[
    Case {
        a: &[1.0, -2.0],
        n: 64,
        smallest: [6.6121557233753672e-39, 1.0049719239503076, 1.0198707074457876],
    },
    Case {
        a: &[1.0, -4.2, 3.6],
        n: 64,
        smallest: [2.1712976443418793e-61, 9.6456002521218407e-11, 0.17514367976688909],
    },
    Case {
        a: &[1.0, -4.0, 4.0],
        n: 32,
        smallest: [1.2412425646758221e-22, 6.0678378610263849e-16, 1.0516427580040527],
    },
    Case {
        a: &[1.0, -2.5, 1.0],
        n: 30,
        smallest: [1.0977546996415738e-18, 0.2620428762944553, 0.29952325089054213],
    },
    Case {
        a: &[1.0, -1.0],
        n: 16,
        smallest: [0.0090561548538307905, 0.08101405277100522, 0.22232910269015307],
    },
    Case {
        a: &[1.0, -0.5],
        n: 16,
        smallest: [0.26524194568075619, 0.31102480293467189, 0.38709078294472504],
    },
    Case {
        a: &[1.0, -6.0, 11.0, -6.0],
        n: 24,
        smallest: [4.4032210476427432e-24, 3.1219447373541258e-13, 0.03088218464138128],
    },
];

#[test]
fn smallest_eigenvalues_match_high_precision_reference() {
    for case in CASES {
        let model = ArModel::new(case.a.to_vec(), 1.0).unwrap();
        let s = ar_gram_spectrum(&model, case.n).unwrap();
        for (k, want) in case.smallest.iter().enumerate() {
            let got = s.eigenvalues[k];
            let rel = (got - want).abs() / want;
            assert!(
                rel < 1e-9,
                "a={:?} n={} k={k}: got {got:e}, want {want:e} (rel {rel:e})",
                case.a,
                case.n
            );
        }
        assert!(s.sum_log().abs() < 1e-8, "a={:?}: sum of logs {}", case.a, s.sum_log());
    }
}

/// `lambda_min` of `(1, -2)` by power iteration on the inverse at 700 digits.
#[test]
fn deep_underflow_for_unstable_first_order() {
    let model = ArModel::new(vec![1.0, -2.0], 1.0).unwrap();
    for (n, want) in [
        (128usize, 1.94313792489625e-77f64),
        (256, 1.6781266645200465e-154),
        (512, 1.2516040454103008e-308),
    ] {
        let s = ar_gram_spectrum(&model, n).unwrap();
        let got = s.log_eigenvalues[0];
        assert!(
            (got - want.ln()).abs() < 1e-9,
            "n={n}: ln lambda_min {got} vs {}",
            want.ln()
        );
        assert!(s.sum_log().abs() < 1e-8, "n={n}: sum of logs {}", s.sum_log());
    }
}
