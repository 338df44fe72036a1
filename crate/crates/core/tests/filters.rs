use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use proptest::prelude::*;
use wrg_core::filters::{make_filter, FilterKind, CASCADE_DEPTH};

// K = 1 is Haar
fn db(k: usize) -> wrg_core::filters::FilterBank {
    let kind = if k == 1 {
        FilterKind::Haar
    } else {
        FilterKind::Daubechies { k }
    };
    make_filter(kind, 1).unwrap()
}

#[test]
fn identities_hold_for_every_order() {
    for k in 1..=10 {
        let r = db(k).identities().unwrap();
        assert!(r.passes(1e-10), "K={k}: {r:?}");
    }
}

#[test]
fn d6_taps_match_published_table() {
    // 16-digit table, orthonormal to round-off; the older 4-place-derived
    // tables still in circulation miss orthonormality by ~5e-12
    let table = [
        0.332_670_552_950_082_6,
        0.806_891_509_311_092_5,
        0.459_877_502_118_491_5,
        -0.135_011_020_010_254_6,
        -0.085_441_273_882_026_7,
        0.035_226_291_885_709_5,
    ];
    let f = db(3);
    let (_, h) = f.taps_1d().unwrap();
    let fwd = h.iter().zip(&table).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let rev = h
        .iter()
        .rev()
        .zip(&table)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(fwd.min(rev) < 2e-16, "{h:?}");
}

#[test]
fn haar_cascade_matches_closed_form() {
    let f = make_filter(FilterKind::Haar, 1).unwrap();
    let mut worst = 0.0f64;
    for i in 0..=4000 {
        let k = -20.0 + 40.0 * i as f64 / 4000.0;
        let exact = if k == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            (1.0 - Complex64::new(0.0, -k).exp()) / Complex64::new(0.0, k)
        };
        let v = f.cascade_1d(k, CASCADE_DEPTH).unwrap().value;
        worst = worst.max((v - exact).norm());
    }
    assert!(worst < 1e-10, "{worst:e}");
}

#[test]
fn cascade_vanishes_on_the_dual_lattice() {
    // phi^(2 pi n) = 0 for n != 0, including n with many factors of 2
    for k in [2, 6] {
        let f = db(k);
        assert!((f.cascade_1d(0.0, CASCADE_DEPTH).unwrap().value - 1.0).norm() < 1e-14);
        for n in 1..=128 {
            let v = f.phi_hat_sq_1d(2.0 * PI * n as f64).unwrap();
            assert!(v < 1e-20, "K={k} n={n}: {v:e}");
        }
    }
}

#[test]
fn decay_envelope_dominates_cascade() {
    for k in [2, 3, 6, 10] {
        let f = db(k);
        let cert = f.decay().unwrap();
        assert!(cert.rho > 0.0 && cert.c.is_finite());
        // off the fitting grid
        for i in 0..20_000 {
            let kappa = 0.0137 + 0.5013 * i as f64;
            let v = f.phi_hat_sq_1d(kappa).unwrap().sqrt();
            assert!(v <= cert.envelope(kappa), "K={k} kappa={kappa}");
        }
    }
}

#[test]
fn certified_decay_grows_with_order() {
    let rho: Vec<f64> = [2, 4, 6, 8, 10].iter().map(|&k| db(k).decay().unwrap().rho).collect();
    assert!(rho.windows(2).all(|w| w[1] > w[0]), "{rho:?}");
    let observed = db(2).observed_decay_exponent(64.0, 8192.0).unwrap();
    assert!(observed >= rho[0] - 0.05, "observed {observed} vs certified {}", rho[0]);
}

#[test]
fn tensor_filter_normalisation() {
    for d in 1..=3 {
        let f = make_filter(FilterKind::Daubechies { k: 2 }, d).unwrap();
        let total: Complex64 = f.taps().unwrap().iter().map(|t| t.1).sum();
        assert!((total.re - SQRT_2.powi(d as i32)).abs() < 1e-13);
        assert!(total.im.abs() < 1e-15);
    }
}

proptest! {
    #[test]
    fn power_complementarity(k in 1usize..=10, kappa in -10.0f64..10.0) {
        let f = db(k);
        let a = f.m0_1d(kappa).unwrap().norm_sqr() + f.m0_1d(kappa + PI).unwrap().norm_sqr();
        prop_assert!((a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vanishing_moments_give_a_zero_of_order_k(k in 2usize..=5, s in 1e-2f64..5e-2) {
        // |m0(pi + s)|^2 = cos^{2K}((pi + s)/2) P(sin^2) with P(1) = C(2K-1, K-1)
        let binom = (0..k - 1).fold(1.0, |acc, i| acc * (2 * k - 1 - i) as f64 / (i + 1) as f64);
        let lead = (s / 2.0).powi(k as i32) * binom.sqrt();
        let near = db(k).m0_1d(PI + s).unwrap().norm();
        prop_assert!((near / lead - 1.0).abs() < 0.1 * k as f64 * s, "K={} ratio {}", k, near / lead);
    }
}
