mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thetafock::linalg::CMatrix;
use thetafock::{Character, PointCoordinates, ThetaOptions, ThetaParameters};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn character_is_normalized_and_periodic(a in -50.0f64..50.0, m in -20i64..20) {
        let chi = Character::new(&[a]);
        prop_assert!((0.0..1.0).contains(&chi.alpha()[0]));
        let shifted = Character::new(&[a + m as f64]);
        prop_assert!((chi.value(&[3]) - shifted.value(&[3])).norm() < 1e-9);
        prop_assert!((chi.value(&[m]).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tail_bound_is_monotone_in_radius(y in 0.2f64..3.0, x in -1.0f64..1.0, eta in -2.0f64..2.0, r1 in 0.1f64..8.0, dr in 0.0f64..4.0) {
        let params = ThetaParameters::new(CMatrix::from_element(1, 1, c(x, y)), vec![0.3], vec![0.0]).unwrap();
        let z = [c(0.1, eta)];
        prop_assert!(params.tail_bound(&z, r1 + dr) <= params.tail_bound(&z, r1));
    }

    #[test]
    fn theta_meets_its_tolerance_rank_one(y in 0.3f64..2.0, x in -0.5f64..0.5, re in -1.0f64..1.0, im in -1.0f64..1.0, a in 0.0f64..1.0) {
        let params = ThetaParameters::new(CMatrix::from_element(1, 1, c(x, y)), vec![a], vec![0.0]).unwrap();
        let z = [c(re, im)];
        let v = params.evaluate(&z, &ThetaOptions::new(1e-10)).unwrap();
        let brute: num_complex::Complex64 = (-80..=80).map(|n| params.term(&[n], &z)).sum();
        prop_assert!(v.tail_bound <= 1e-10);
        prop_assert!((v.value - brute).norm() <= 1e-10 + 1e-14 * brute.norm());
    }

    #[test]
    fn coordinates_round_trip(seed in 0u64..1000, g in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = (seed as usize) % (g + 1);
        let lat = random_lattice(&mut rng, g, r);
        let p = random_point(&mut rng, r, g, 2.0);
        let back = lat.coordinates(&lat.to_ambient(&p).unwrap()).unwrap();
        for (a, b) in p.full().iter().zip(back.full()) {
            prop_assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn kernel_is_hermitian(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = 1 + (seed as usize) % 2;
        let r = (seed as usize / 2) % (g + 1);
        let config = random_config(&mut rng, g, r, 2.0);
        let u = random_point(&mut rng, r, g, 1.0);
        let v = random_point(&mut rng, r, g, 1.0);
        let a = config.kernel_eval(&u, &v, 1e-13).unwrap();
        let b = config.kernel_eval(&v, &u, 1e-13).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn basis_satisfies_functional_equation(seed in 0u64..1000, m in -3i64..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = random_config(&mut rng, 2, 1, 1.5);
        let field = random_field(&mut rng, &config, 1, 3, 3);
        let u = random_point(&mut rng, 1, 2, 1.0);
        let d = config.functional_equation_defect(|p: &PointCoordinates| config.synthesize(&field, p), &u, &[m]).unwrap();
        prop_assert!(d <= 1e-10);
    }
}
