use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wrg_core::lattice::{dft, dft_direct, idft, symplectic_form, LatticeGeometry, PhaseField};

#[test]
fn fft_matches_direct_sum_in_two_dimensions() {
    let lat = LatticeGeometry::new(2, 0.5, 4).unwrap().level(1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let xi = PhaseField::random(lat, &mut rng).unwrap();
    let (q, _) = xi.real_parts().unwrap();
    let v: Vec<Complex64> = q.iter().map(|&x| x.into()).collect();
    let a = dft(&lat, &v);
    let b = dft_direct(&lat, &v);
    let worst = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst:e}");
    let back = idft(&lat, &a);
    let worst = back.iter().zip(&v).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-14, "{worst:e}");
}

#[test]
fn plane_wave_oracle() {
    // F[exp(i k0 x)](k) = (2 r_N)^d at k = k0 and zero elsewhere
    let lat = LatticeGeometry::new(1, 1.0, 8).unwrap().level(0).unwrap();
    let j0 = 3usize;
    let k0 = lat.momentum(j0)[0];
    let v: Vec<Complex64> = (0..16)
        .map(|f| Complex64::from_polar(1.0, k0 * lat.position(f)[0]))
        .collect();
    let out = dft(&lat, &v);
    for (j, z) in out.iter().enumerate() {
        let want = if j == j0 { 16.0 } else { 0.0 };
        assert!((z - want).norm() < 1e-12, "j={j} {z}");
    }
}

#[test]
fn momentum_roundtrip_is_exact() {
    let lat = LatticeGeometry::new(3, 1.0, 2).unwrap().level(0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xi = PhaseField::random(lat, &mut rng).unwrap();
    let back = xi.to_momentum().to_real().unwrap();
    assert!(xi.max_abs_diff(&back).unwrap() < 1e-14);
}

fn fields(d: usize, seed: u64) -> (PhaseField, PhaseField, PhaseField) {
    let lat = LatticeGeometry::new(d, 0.7, 4).unwrap().level(1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (
        PhaseField::random(lat, &mut rng).unwrap(),
        PhaseField::random(lat, &mut rng).unwrap(),
        PhaseField::random(lat, &mut rng).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symplectic_form_is_antisymmetric_and_bilinear(d in 1usize..=2, seed in any::<u64>(), c in -3.0f64..3.0) {
        let (a, b, e) = fields(d, seed);
        let s_ab = symplectic_form(&a, &b).unwrap();
        prop_assert!((s_ab + symplectic_form(&b, &a).unwrap()).abs() < 1e-13);
        prop_assert!(symplectic_form(&a, &a).unwrap().abs() < 1e-13);
        let (qa, pa) = a.real_parts().unwrap();
        let (qe, pe) = e.real_parts().unwrap();
        let comb = PhaseField::real(
            *a.lattice(),
            qa.iter().zip(&qe).map(|(x, y)| x + c * y).collect(),
            pa.iter().zip(&pe).map(|(x, y)| x + c * y).collect(),
        ).unwrap();
        let lhs = symplectic_form(&comb, &b).unwrap();
        let rhs = s_ab + c * symplectic_form(&e, &b).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + rhs.abs()));
    }

    #[test]
    fn symplectic_form_is_representation_independent(d in 1usize..=3, seed in any::<u64>()) {
        let (a, b, _) = fields(d, seed);
        let s1 = symplectic_form(&a, &b).unwrap();
        let s2 = symplectic_form(&a.to_momentum(), &b.to_momentum()).unwrap();
        prop_assert!((s1 - s2).abs() < 1e-11 * (1.0 + s1.abs()));
    }

    #[test]
    fn real_fields_have_hermitian_spectra(d in 1usize..=3, seed in any::<u64>()) {
        let (a, _, _) = fields(d, seed);
        prop_assert!(a.to_momentum().conjugate_symmetry_defect() < 1e-12);
    }

    #[test]
    fn translation_preserves_the_form(seed in any::<u64>(), s in -16i64..16) {
        let (a, b, _) = fields(1, seed);
        let s0 = symplectic_form(&a, &b).unwrap();
        let s1 = symplectic_form(&a.translate(&[s]).unwrap(), &b.translate(&[s]).unwrap()).unwrap();
        prop_assert!((s0 - s1).abs() < 1e-12 * (1.0 + s0.abs()));
    }
}
