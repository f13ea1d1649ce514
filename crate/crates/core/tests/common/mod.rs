#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thetafock::linalg::{CMatrix, CVector, RMatrix, RVector};
use thetafock::{BasisIndex, Character, CoefficientField, HermitianSpace, IsotropicLattice, PointCoordinates, SpaceConfig};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cvec(entries: &[(f64, f64)]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&(a, b)| c(a, b)))
}

pub fn identity(g: usize) -> CMatrix {
    CMatrix::identity(g, g)
}

pub fn random_complex(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    c(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

/// `M M^* + g I` for a random `M`, so eigenvalues stay away from zero.
pub fn random_hermitian(rng: &mut ChaCha8Rng, g: usize) -> CMatrix {
    let m = CMatrix::from_fn(g, g, |_, _| random_complex(rng, 0.5));
    &m * m.adjoint() + CMatrix::identity(g, g) * c(0.6, 0.0)
}

/// Makes generators pairwise E-orthogonal: `ω_k ← ω_k + i Σ_j t_j ω_j` with
/// `t` solving `B_prev t = (E(ω_j, ω_k))_j` over the already isotropic prefix.
pub fn isotropize(space: &HermitianSpace, omegas: &mut [CVector]) {
    for k in 1..omegas.len() {
        let gram = RMatrix::from_fn(k, k, |i, j| space.hermitian(&omegas[i], &omegas[j]).unwrap().re);
        let e = RVector::from_fn(k, |i, _| space.symplectic_form(&omegas[i], &omegas[k]).unwrap());
        let t = gram.lu().solve(&e).unwrap();
        for j in 0..k {
            let shift = &omegas[j] * c(0.0, t[j]);
            omegas[k] += shift;
        }
    }
}

/// Random isotropic lattice whose `B` has eigenvalues in a range where the
/// default quadrature grid is well resolved.
pub fn random_lattice(rng: &mut ChaCha8Rng, g: usize, r: usize) -> IsotropicLattice {
    for attempt in 0.. {
        let h = random_hermitian(rng, g);
        let space = HermitianSpace::new(h).unwrap();
        let mut omegas: Vec<CVector> =
            (0..r).map(|_| CVector::from_fn(g, |_, _| random_complex(rng, 1.0))).collect();
        isotropize(&space, &mut omegas);
        let Ok(lat) = IsotropicLattice::new(space.clone(), omegas.clone()) else { continue };
        if r == 0 {
            return lat;
        }
        let eig = lat.b_matrix().clone().symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        if hi / lo > 3.0 && attempt < 200 {
            continue;
        }
        let s = (1.0 / lo).sqrt();
        let scaled: Vec<CVector> = omegas.iter().map(|w| w * c(s, 0.0)).collect();
        if let Ok(lat) = IsotropicLattice::new(space, scaled) {
            return lat;
        }
    }
    unreachable!()
}

pub fn random_config(rng: &mut ChaCha8Rng, g: usize, r: usize, nu: f64) -> SpaceConfig {
    let lattice = random_lattice(rng, g, r);
    let alpha: Vec<f64> = (0..r).map(|_| rng.random_range(0.0..1.0)).collect();
    SpaceConfig::new(lattice, Character::new(&alpha), nu).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, r: usize, g: usize, scale: f64) -> PointCoordinates {
    PointCoordinates::new(
        (0..r).map(|_| random_complex(rng, scale)).collect(),
        (0..g - r).map(|_| random_complex(rng, scale)).collect(),
    )
}

pub fn random_field(
    rng: &mut ChaCha8Rng,
    config: &SpaceConfig,
    terms: usize,
    n_radius: i64,
    k_max: u32,
) -> CoefficientField {
    let (r, g) = (config.r(), config.g());
    let mut field = CoefficientField::new();
    for _ in 0..terms {
        let n: Vec<i64> = (0..r).map(|_| rng.random_range(-n_radius..=n_radius)).collect();
        let mut k = vec![0u32; g - r];
        let mut budget = rng.random_range(0..=k_max);
        for slot in k.iter_mut() {
            let take = rng.random_range(0..=budget);
            *slot = take;
            budget -= take;
        }
        field.insert(BasisIndex::new(n, k), random_complex(rng, 1.0));
    }
    field
}

/// Isotropic lattice for `H = I_g` spanned by the first `r` standard vectors,
/// scaled by `sqrt(b)` so that `B = b I_r`.
pub fn standard_config(g: usize, r: usize, b: f64, alpha: &[f64], nu: f64) -> SpaceConfig {
    let space = HermitianSpace::new(identity(g)).unwrap();
    let omegas = (0..r)
        .map(|j| {
            let mut v = CVector::zeros(g);
            v[j] = c(b.sqrt(), 0.0);
            v
        })
        .collect();
    let lattice = IsotropicLattice::new(space, omegas).unwrap();
    SpaceConfig::new(lattice, Character::new(alpha), nu).unwrap()
}
