use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wrg_core::dynamics::{
    causality_scan, delta0, dynamics_defect, dynamics_envelope, evolve, hamiltonian_sup_defect, lr_velocity_limit,
    Evolution,
};
use wrg_core::lattice::{symplectic_form, Lattice, LatticeGeometry, PhaseField};
use wrg_core::scalemaps::{ScalingMap, Scheme};
use wrg_core::states::{ground_exponent, MassSchedule};

fn lat(d: usize, r: usize, n: u32) -> Lattice {
    LatticeGeometry::new(d, 1.0, r).unwrap().level(n).unwrap()
}

fn random(l: Lattice, seed: u64) -> PhaseField {
    PhaseField::random(l, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evolution_is_a_symplectic_group(seed in any::<u64>(), t1 in -3.0f64..3.0, t2 in -3.0f64..3.0, d in 1usize..=2) {
        let l = lat(d, 4, 1);
        let ev = Evolution::Lattice { m: 0.8 };
        let a = random(l, seed);
        let b = random(l, seed ^ 0x55);
        let two = evolve(&ev, &evolve(&ev, &a, t1).unwrap(), t2).unwrap();
        let one = evolve(&ev, &a, t1 + t2).unwrap();
        prop_assert!(two.max_abs_diff(&one).unwrap() < 1e-12);
        let back = evolve(&ev, &evolve(&ev, &a, t1).unwrap(), -t1).unwrap();
        prop_assert!(back.max_abs_diff(&a).unwrap() < 1e-12);
        let s0 = symplectic_form(&a, &b).unwrap();
        let s1 = symplectic_form(&evolve(&ev, &a, t1).unwrap(), &evolve(&ev, &b, t1).unwrap()).unwrap();
        prop_assert!((s0 - s1).abs() < 1e-11 * (1.0 + s0.abs()));
    }

    #[test]
    fn ground_state_is_invariant(seed in any::<u64>(), t in -5.0f64..5.0) {
        let l = lat(1, 8, 2);
        let disp = MassSchedule::new(1.2).unwrap().dispersion(&l);
        let a = random(l, seed);
        let e0 = ground_exponent(&a, &disp).unwrap();
        let e1 = ground_exponent(&evolve(&Evolution::Lattice { m: 1.2 }, &a, t).unwrap(), &disp).unwrap();
        prop_assert!((e0 - e1).abs() < 1e-10 * e0);
    }
}

#[test]
fn maps_intertwine_coarse_and_extended_dynamics() {
    // R^N_{N'} tau^{(N)}_t = tau^{ext,N}_t R^N_{N'}
    for d in [1usize, 2] {
        let l = lat(d, 2, 1);
        let a = random(l, 3);
        for s in [
            Scheme::daubechies(3, d).unwrap(),
            Scheme::BlockSpin,
            Scheme::Point,
            Scheme::MomentumCutoff,
        ] {
            let map = ScalingMap::new(s.clone(), l, 3).unwrap();
            let lhs = map
                .apply(&evolve(&Evolution::Lattice { m: 1.0 }, &a, 0.7).unwrap())
                .unwrap();
            let ext = Evolution::Extended { m: 1.0, base_level: 1 };
            let rhs = evolve(&ext, &map.apply(&a).unwrap(), 0.7).unwrap();
            let defect = lhs.max_abs_diff(&rhs).unwrap();
            assert!(defect < 1e-12, "d={d} {}: {defect:e}", s.tag());
        }
    }
    let coarse = lat(1, 2, 0);
    assert!(evolve(&Evolution::Extended { m: 1.0, base_level: 2 }, &random(coarse, 1), 0.1).is_err());
}

#[test]
fn lattice_dispersion_closes_like_eps_squared() {
    let schedule = MassSchedule::new(1.0).unwrap();
    let l = lat(1, 4, 0);
    let d: Vec<f64> = (0..10)
        .map(|m| hamiltonian_sup_defect(&l, m, &schedule).unwrap())
        .collect();
    for w in d[3..].windows(2) {
        assert!((w[1] / w[0] - 0.25).abs() < 0.01, "{d:?}");
    }
    assert!(d[9] < 1e-4);
}

#[test]
fn velocity_parameter() {
    let d0 = delta0();
    assert!((d0 - 0.556_929_085_5).abs() < 1e-10, "{d0}");
    let v = lr_velocity_limit(d0, 1);
    assert!((v - 3.591_121_476_668_623_5).abs() < 1e-12, "{v}");
    // delta0 minimises the velocity
    for h in [1e-3, 1e-2, 1e-1] {
        assert!(lr_velocity_limit(d0 + h, 1) > v && lr_velocity_limit(d0 - h, 1) > v);
    }
    assert!((lr_velocity_limit(d0, 4) - 2.0 * v).abs() < 1e-12);
}

#[test]
fn commutators_respect_the_lieb_robinson_bound() {
    let base = lat(1, 4, 0);
    let xi = PhaseField::delta(base, &[-2], 1.0, 0.5).unwrap();
    let eta = PhaseField::delta(base, &[2], 0.3, 1.0).unwrap();
    let schedule = MassSchedule::new(1.0).unwrap();
    let d0 = delta0();
    for s in [Scheme::daubechies(2, 1).unwrap(), Scheme::BlockSpin] {
        let rows = causality_scan(&s, &xi, &eta, &[1, 3, 5], &[-0.4, 0.0, 0.2, 0.6], d0, &schedule).unwrap();
        assert_eq!(rows.len(), 12);
        for r in &rows {
            assert!(r.bound_holds(), "{} {r:?}", s.tag());
            assert!(r.roundoff < 1e-12);
        }
    }
    let touching = PhaseField::delta(base, &[-2], 0.0, 1.0).unwrap();
    assert!(causality_scan(&Scheme::BlockSpin, &xi, &touching, &[0], &[0.0], d0, &schedule).is_err());
}

#[test]
fn dynamics_defect_shrinks_and_stays_under_its_envelope() {
    let schedule = MassSchedule::new(1.0).unwrap();
    let l = lat(1, 2, 0);
    let xi = PhaseField::delta(l, &[0], 1.0, 0.0).unwrap();
    let s = Scheme::daubechies(6, 1).unwrap();
    let env = dynamics_envelope(&s, &xi, 1.0, 0.5, 0.5, None).unwrap();
    for t in [0.3, 1.0] {
        let d: Vec<f64> = (1..=5)
            .map(|n| dynamics_defect(&s, &xi, n, t, &schedule, None).unwrap().value)
            .collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]), "t={t}: {d:?}");
        assert!(d[0] * d[0] <= env, "t={t}: {} vs {env}", d[0] * d[0]);
        assert!(d[4] < 1e-3, "t={t}: {d:?}");
    }
    assert!(dynamics_defect(&Scheme::Point, &xi, 1, 0.1, &schedule, None).is_err());
}
