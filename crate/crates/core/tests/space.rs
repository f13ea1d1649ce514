mod common;

use common::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use thetafock::{BasisIndex, CoefficientField, PointCoordinates};

#[test]
fn synthesized_functions_satisfy_functional_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..40 {
        let g = 1 + trial % 3;
        let r = 1 + rng.random_range(0..g);
        let nu = rng.random_range(0.5..4.0);
        let config = random_config(&mut rng, g, r, nu);
        let field = random_field(&mut rng, &config, 4, 2, 3);
        let u = random_point(&mut rng, r, g, 0.8);
        for j in 0..r {
            let mut m = vec![0i64; r];
            m[j] = rng.random_range(-2..=2);
            let d = config.functional_equation_defect(|p| config.synthesize(&field, p), &u, &m).unwrap();
            assert!(d <= 1e-9, "trial {trial}: {d}");
        }
    }
}

#[test]
fn synthesis_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let config = random_config(&mut rng, 2, 1, PI);
    let f = random_field(&mut rng, &config, 3, 2, 2);
    let h = random_field(&mut rng, &config, 3, 2, 2);
    let (c1, c2) = (c(0.3, -1.2), c(2.0, 0.5));
    let combined = f.combine(c1, &h, c2);
    for _ in 0..10 {
        let u = random_point(&mut rng, 1, 2, 1.0);
        let lhs = config.synthesize(&combined, &u).unwrap();
        let rhs = c1 * config.synthesize(&f, &u).unwrap() + c2 * config.synthesize(&h, &u).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }
}

#[test]
fn kernel_is_hermitian_and_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for trial in 0..10 {
        let g = 1 + trial % 2;
        let r = rng.random_range(0..=g);
        let nu = rng.random_range(1.0..4.0);
        let config = random_config(&mut rng, g, r, nu);
        let points: Vec<PointCoordinates> = (0..8).map(|_| random_point(&mut rng, r, g, 1.0)).collect();
        let k = config.kernel_matrix(&points, 1e-12).unwrap();
        let trace: f64 = (0..8).map(|i| k[(i, i)].re).sum();
        for i in 0..8 {
            for j in 0..8 {
                let scale = (k[(i, i)].re * k[(j, j)].re).sqrt();
                assert!((k[(i, j)] - k[(j, i)].conj()).norm() <= 1e-12 * (1.0 + scale));
            }
        }
        let herm = (&k + k.adjoint()) * Complex64::new(0.5, 0.0);
        let min_eig = herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min_eig >= -1e-8 * trace, "trial {trial}: {min_eig} vs trace {trace}");
    }
}

#[test]
fn diagonal_equals_basis_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for trial in 0..12 {
        let g = 1 + trial % 2;
        let r = rng.random_range(0..=g);
        let config = random_config(&mut rng, g, r, PI);
        let u = random_point(&mut rng, r, g, 0.5);
        let closed = config.kernel_diagonal(&u, 1e-14).unwrap();
        let series = config.kernel_series(&u, &u, 6, 60).unwrap();
        assert!((series.re - closed).abs() <= 1e-8, "trial {trial}: {} vs {closed}", series.re);
        assert!(series.im.abs() <= 1e-12 * closed);
        let from_eval = config.kernel_eval(&u, &u, 1e-14).unwrap();
        assert!((from_eval.re - closed).abs() <= 1e-12 * closed);
        assert!(from_eval.im.abs() <= 1e-12 * closed);
    }
}

#[test]
fn kernel_matches_series_rank_one_in_two_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let config = random_config(&mut rng, 2, 1, PI);
    for _ in 0..10 {
        let u = random_point(&mut rng, 1, 2, 0.5);
        let v = random_point(&mut rng, 1, 2, 0.5);
        let closed = config.kernel_eval(&u, &v, 1e-14).unwrap();
        let series = config.kernel_series(&u, &v, 6, 60).unwrap();
        assert!((closed - series).norm() <= 1e-8);
    }
}

#[test]
fn evaluation_bound_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for trial in 0..40 {
        let g = 1 + trial % 2;
        let r = rng.random_range(0..=g);
        let nu = rng.random_range(0.5..4.0);
        let config = random_config(&mut rng, g, r, nu);
        let field = random_field(&mut rng, &config, 5, 2, 3);
        let u = random_point(&mut rng, r, g, 1.5);
        let report = config.evaluation_bound_check(&field, &u, 1e-14).unwrap();
        assert!(report.holds, "trial {trial}: {report:?}");
    }
    let config = standard_config(1, 1, 1.0, &[0.0], PI);
    let zero = config.evaluation_bound_check(&CoefficientField::new(), &PointCoordinates::origin(1, 1), 1e-14).unwrap();
    assert_eq!((zero.lhs, zero.rhs, zero.holds), (0.0, 0.0, true));
    let single = CoefficientField::single(BasisIndex::new(vec![0], vec![]), c(1.0, 0.0));
    assert!(config.evaluation_bound_check(&single, &PointCoordinates::origin(1, 1), 1e-14).unwrap().holds);
}

#[test]
fn kernel_diagonal_grows_with_perpendicular_part() {
    let config = standard_config(2, 1, 1.0, &[0.3], 2.0);
    let u = PointCoordinates::new(vec![c(0.2, 0.1)], vec![c(0.3, -0.4)]);
    let u2 = PointCoordinates::new(vec![c(0.2, 0.1)], vec![c(0.6, -0.8)]);
    assert!(config.kernel_diagonal(&u2, 1e-14).unwrap() >= config.kernel_diagonal(&u, 1e-14).unwrap());
    let origin = standard_config(2, 0, 1.0, &[], 2.0);
    let k = origin.kernel_diagonal(&PointCoordinates::origin(0, 2), 1e-14).unwrap();
    assert!((k - (2.0 / PI).powi(2)).abs() < 1e-15);
}

#[test]
fn far_points_are_reduced_consistently() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let config = random_config(&mut rng, 2, 1, 1.7);
    let u = random_point(&mut rng, 1, 2, 0.5);
    let v = random_point(&mut rng, 1, 2, 0.5);
    let m = [7i64];
    let direct = config.kernel_eval(&u.translated(&m), &v, 1e-14).unwrap();
    let expected = config.automorphy_factor(&u.z, &m) * config.kernel_eval(&u, &v, 1e-14).unwrap();
    assert!((direct - expected).norm() <= 1e-9 * expected.norm());
}

#[test]
fn normalized_basis_has_unit_closed_form_norm() {
    let config = standard_config(2, 1, 1.3, &[0.4], 2.5);
    let idx = BasisIndex::new(vec![-1], vec![2]);
    let u = PointCoordinates::new(vec![c(0.3, 0.2)], vec![c(0.1, 0.5)]);
    let raw = config.basis_eval(&idx, &u).unwrap();
    let norm = config.basis_norm_sq(&idx).unwrap().sqrt();
    let normalized = config.normalized_basis_eval(&idx, &u).unwrap();
    assert!((normalized - raw / norm).norm() <= 1e-14 * raw.norm() / norm);
}
