use fibred_rotation::approx::{angular_system, build_approximant, convergents, rho_ff_chain};
use fibred_rotation::circle::{conjugate_lift, iterate_lift, rho_bracket, validate_lift, CircleMapLift};
use fibred_rotation::holo::{
    conjugate_linear_part, indifference_defect, rho_t, winding_degree, Coefficient, FibredPolyMap, TrigPoly, GOLDEN,
};
use fibred_rotation::numeric::circular_distance;
use fibred_rotation::orbit::{arg_advance, OrbitConfig};
use fibred_rotation::skewfibre::{
    check_subadditivity, conjugate_system, rho_ff, rho_ff_from, FiniteFibreSystem,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sine_lift() -> impl Strategy<Value = CircleMapLift> {
    (-1.0f64..1.0, 1u32..=3, -0.95f64..0.95).prop_map(|(beta, k, u)| CircleMapLift::sine(beta, u / k as f64, k))
}

fn pl_lift() -> impl Strategy<Value = CircleMapLift> {
    (any::<u64>(), 1usize..6).prop_map(|(seed, nodes)| {
        CircleMapLift::random_pl(&mut ChaCha8Rng::seed_from_u64(seed), nodes)
    })
}

fn any_lift() -> impl Strategy<Value = CircleMapLift> {
    prop_oneof![sine_lift(), pl_lift(), (-2.0f64..2.0).prop_map(CircleMapLift::rigid)]
}

fn sine_system() -> impl Strategy<Value = FiniteFibreSystem> {
    prop::collection::vec(sine_lift(), 1..5).prop_map(|l| FiniteFibreSystem::new(l).unwrap())
}

/// Real trig polynomial of degree <= 3 with zero mean.
fn zero_mean_phase() -> impl Strategy<Value = TrigPoly> {
    prop::collection::vec((-0.08f64..0.08, -0.08f64..0.08), 3).prop_map(|ab| {
        ab.iter().enumerate().fold(TrigPoly::zero(), |acc, (j, (a, b))| {
            acc.add(&TrigPoly::cos(*a, j as i32 + 1)).add(&TrigPoly::sin(*b, j as i32 + 1))
        })
    })
}

fn smooth_conjugacy() -> impl Strategy<Value = Coefficient> {
    prop::collection::vec((-0.3f64..0.3, -0.3f64..0.3), 2).prop_map(|cs| {
        let p = TrigPoly::from_terms(
            cs.iter()
                .enumerate()
                .flat_map(|(j, (re, im))| {
                    let k = j as i32 + 1;
                    [(k, Complex64::new(*re, *im)), (-k, Complex64::new(*im, -*re))]
                }),
        );
        Coefficient::exp(p)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn displacement_spread_at_most_one(f in any_lift(), x in -3.0f64..3.0, y in -3.0f64..3.0, m in 1u64..400) {
        let a = iterate_lift(&f, x, m) - x;
        let b = iterate_lift(&f, y, m) - y;
        prop_assert!((a - b).abs() <= 1.0 + 1e-9);
    }

    #[test]
    fn random_lifts_validate(f in any_lift()) {
        prop_assert!(validate_lift(&f, 200).unwrap().passed());
    }

    #[test]
    fn brackets_nest(f in sine_lift(), m in 10u64..2000) {
        let coarse = rho_bracket(&f, 0.0, m).unwrap();
        let fine = rho_bracket(&f, 0.0, 2 * m).unwrap();
        prop_assert!((fine.width() - coarse.width() / 2.0).abs() < 1e-12);
        let slack = 1.0 / m as f64;
        prop_assert!(fine.value >= coarse.lower - slack && fine.value <= coarse.upper + slack);
        prop_assert!(fine.overlaps(&coarse));
    }

    #[test]
    fn integer_shift_moves_rho_exactly(f in any_lift(), p in -5i64..5, m in 1u64..3000) {
        let a = rho_bracket(&f, 0.0, m).unwrap();
        let b = rho_bracket(&f.shifted(p), 0.0, m).unwrap();
        let scale = a.value.abs().max(b.value.abs()).max(1.0);
        prop_assert!(((b.value - a.value) - p as f64).abs() <= 4.0 * f64::EPSILON * scale);
    }

    #[test]
    fn single_lift_conjugacy_invariance(f in sine_lift(), h in pl_lift()) {
        let g = conjugate_lift(&f, &h).unwrap();
        let a = rho_bracket(&f, 0.0, 20_000).unwrap();
        let b = rho_bracket(&g, 0.0, 20_000).unwrap();
        prop_assert!(a.overlaps(&b), "{:?} vs {:?}", a, b);
    }

    #[test]
    fn lift_json_roundtrip(f in any_lift()) {
        let s = serde_json::to_string(&f).unwrap();
        let back: CircleMapLift = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn rho_ff_independent_of_start(sys in sine_system(), x in -2.0f64..2.0) {
        let base = rho_ff(&sys, 20_000).unwrap();
        for i in 0..sys.n() {
            let other = rho_ff_from(&sys, i, x, 20_000).unwrap();
            prop_assert!(base.overlaps(&other));
        }
    }

    #[test]
    fn lift_shift_moves_n_rho_ff_by_p(sys in sine_system(), p in -3i64..4, which in 0usize..4) {
        let i = which % sys.n();
        let n = sys.n() as f64;
        let a = rho_ff(&sys, 5_000).unwrap();
        let b = rho_ff(&sys.with_shift(i, p).unwrap(), 5_000).unwrap();
        prop_assert!((n * (b.value - a.value) - p as f64).abs() < 1e-9);
    }

    #[test]
    fn finite_fibre_conjugacy_invariance(sys in sine_system(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hs: Vec<_> = (0..sys.n()).map(|_| CircleMapLift::random_pl(&mut rng, 3)).collect();
        let a = rho_ff(&sys, 20_000).unwrap();
        let b = rho_ff(&conjugate_system(&sys, &hs).unwrap(), 20_000).unwrap();
        prop_assert!(a.overlaps(&b), "{:?} vs {:?}", a, b);
    }

    #[test]
    fn subadditivity_holds(sys in sine_system(), seed in any::<u64>()) {
        let r = check_subadditivity(&sys, 200, 60, 64, seed);
        prop_assert_eq!(r.violations, 0, "{:?}", r);
    }

    #[test]
    fn rho_t_survives_smooth_conjugacy(beta in 0.0f64..1.0, phase in zero_mean_phase(), c in smooth_conjugacy()) {
        let f = FibredPolyMap::linear(GOLDEN, Coefficient::unit_phase(beta, &phase)).unwrap();
        let g = conjugate_linear_part(&f, &c, 256).unwrap();
        let d = circular_distance(rho_t(&g, 2048).unwrap(), rho_t(&f, 2048).unwrap());
        prop_assert!(d < 1e-10, "{}", d);
    }

    #[test]
    fn rho_t_stable_under_refinement(beta in 0.0f64..1.0, phase in zero_mean_phase()) {
        let f = FibredPolyMap::linear(GOLDEN, Coefficient::unit_phase(beta, &phase)).unwrap();
        let coarse = rho_t(&f, 256).unwrap();
        let fine = rho_t(&f, 512).unwrap();
        prop_assert!(circular_distance(coarse, fine) < 1e-12);
        prop_assert_eq!(winding_degree(&f, 256).unwrap(), winding_degree(&f, 512).unwrap());
    }

    #[test]
    fn zero_mean_log_modulus_is_indifferent(beta in 0.0f64..1.0, phase in zero_mean_phase(), logmod in zero_mean_phase()) {
        let e = logmod.add(&phase.add(&TrigPoly::constant(Complex64::new(beta, 0.0))).scaled(Complex64::new(0.0, std::f64::consts::TAU)));
        let f = FibredPolyMap::linear(GOLDEN, Coefficient::exp(e)).unwrap();
        prop_assert!(indifference_defect(&f, 512).unwrap().abs() < 1e-13);
    }

    #[test]
    fn approximants_are_normalized(logmod in zero_mean_phase(), phase in zero_mean_phase(), anchor in 0.0f64..1.0, count in 1usize..12) {
        let e = logmod.add(&phase.scaled(Complex64::new(0.0, std::f64::consts::TAU)));
        let f = FibredPolyMap::linear(GOLDEN, Coefficient::exp(e)).unwrap();
        let c = *convergents(GOLDEN, count).unwrap().convergents.last().unwrap();
        let a = build_approximant(&f, c, anchor).unwrap();
        prop_assert!(a.normalization_residual().abs() <= 1e-10 * c.q as f64);
    }

    #[test]
    fn chain_equals_rigid_system_rho_ff(beta in 0.0f64..1.0, phase in zero_mean_phase(), anchor in 0.0f64..1.0, count in 1usize..9) {
        let f = FibredPolyMap::linear(GOLDEN, Coefficient::unit_phase(beta, &phase)).unwrap();
        let c = *convergents(GOLDEN, count).unwrap().convergents.last().unwrap();
        let a = build_approximant(&f, c, anchor).unwrap();
        let chain = rho_ff_chain(&a).unwrap();
        let sys = angular_system(&a).unwrap();
        prop_assert!((rho_ff(&sys, 1000).unwrap().value - chain).abs() < 1e-12);
    }

    #[test]
    fn orbit_radius_equivariance(beta in -0.2f64..0.2, phase in zero_mean_phase(), scale in 0.1f64..5.0) {
        let f = FibredPolyMap::linear(GOLDEN, Coefficient::unit_phase(beta, &phase)).unwrap();
        let cfg = OrbitConfig { r_max: 10.0, ..OrbitConfig::default() };
        let a = arg_advance(&f, 0.1, Complex64::new(0.1, 0.05), 2000, &cfg).unwrap();
        let b = arg_advance(&f, 0.1, Complex64::new(0.1, 0.05) * scale, 2000, &cfg).unwrap();
        prop_assert!((a.value - b.value).abs() < 1e-12);
    }

    #[test]
    fn orbit_rigid_fibre_rotation_invariance(beta in -0.2f64..0.2, phase in zero_mean_phase(), turn in 0.0f64..1.0) {
        let f = FibredPolyMap::linear(GOLDEN, Coefficient::unit_phase(beta, &phase)).unwrap();
        let h = Coefficient::unit_phase(turn, &TrigPoly::zero());
        let g = conjugate_linear_part(&f, &h, 64).unwrap();
        let cfg = OrbitConfig::default();
        let z0 = Complex64::new(0.1, 0.0);
        let a = arg_advance(&f, 0.0, z0, 2000, &cfg).unwrap();
        let b = arg_advance(&g, 0.0, z0, 2000, &cfg).unwrap();
        prop_assert!((a.value - b.value).abs() < 1e-12);
    }
}
