//! The `(Γ_r, χ_α)`-theta Fock–Bargmann space.
//!
//! All evaluations take [`PointCoordinates`] in the adapted basis. Functions
//! of the space satisfy the automorphy relation
//!
//! ```text
//! f(z + m, z_perp) = exp(ν B(z + m/2, m) + 2πi α·m) f(z, z_perp),   m ∈ Z^r
//! ```
//!
//! and are spanned by the orthogonal family
//! `e_{n,k}(z, z_perp) = exp(ν/2 B(z,z) + 2πi (α+n)·z) z_perp^k`.
//!
//! Before any exponential is formed the lattice part `z` is reduced to
//! `0 ≤ Re z_j < 1` and the exact automorphy factor of the translation is
//! folded into the exponent, so that the integer part of `Re z` never enters a
//! phase multiplied by `n`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Character, GeometryError, IsotropicLattice, PointCoordinates};
use crate::linalg::{self, CMatrix};
use crate::summation::{CompensatedComplexSum, CompensatedSum};
use crate::theta::{ThetaError, ThetaOptions, ThetaParameters};

/// Relative slack allowed in the pointwise evaluation bound.
pub const EVALUATION_BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error("ν must be positive and finite, got {0}")]
    InvalidNu(f64),
    #[error("character has dimension {found}, lattice rank is {expected}")]
    CharacterDimension { expected: usize, found: usize },
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("value exp({log_value}) overflows f64")]
    Overflow { log_value: f64 },
}

/// Label `(n, k) ∈ Z^r × N^{g-r}` of a basis function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex {
    pub n: Vec<i64>,
    pub k: Vec<u32>,
}

impl BasisIndex {
    pub fn new(n: Vec<i64>, k: Vec<u32>) -> Self {
        Self { n, k }
    }

    pub fn degree(&self) -> u32 {
        self.k.iter().sum()
    }
}

/// Finitely supported coefficients `a_{n,k}`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoefficientField {
    entries: BTreeMap<BasisIndex, Complex64>,
}

impl CoefficientField {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(idx: BasisIndex, a: Complex64) -> Self {
        let mut f = Self::new();
        f.insert(idx, a);
        f
    }

    /// Adds `a` to the coefficient at `idx`.
    pub fn insert(&mut self, idx: BasisIndex, a: Complex64) {
        *self.entries.entry(idx).or_insert(Complex64::new(0.0, 0.0)) += a;
    }

    pub fn get(&self, idx: &BasisIndex) -> Complex64 {
        self.entries.get(idx).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisIndex, &Complex64)> {
        self.entries.iter()
    }

    /// `c1·self + c2·other`.
    pub fn combine(&self, c1: Complex64, other: &CoefficientField, c2: Complex64) -> CoefficientField {
        let mut out = CoefficientField::new();
        for (idx, a) in self.iter() {
            out.insert(idx.clone(), a * c1);
        }
        for (idx, a) in other.iter() {
            out.insert(idx.clone(), a * c2);
        }
        out
    }
}

impl FromIterator<(BasisIndex, Complex64)> for CoefficientField {
    fn from_iter<I: IntoIterator<Item = (BasisIndex, Complex64)>>(iter: I) -> Self {
        let mut f = CoefficientField::new();
        for (idx, a) in iter {
            f.insert(idx, a);
        }
        f
    }
}

/// Result of [`SpaceConfig::evaluation_bound_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvaluationBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `(Γ_r, χ_α, ν)` together with the derived theta parameters
/// `F = (2πi/ν) B⁻¹`, `β = 0`.
#[derive(Clone, Debug)]
pub struct SpaceConfig {
    lattice: IsotropicLattice,
    character: Character,
    nu: f64,
    theta: ThetaParameters,
    kernel_constant: f64,
    log_norm_constant: f64,
}

impl SpaceConfig {
    pub fn new(lattice: IsotropicLattice, character: Character, nu: f64) -> Result<Self, SpaceError> {
        if !nu.is_finite() || nu <= 0.0 {
            return Err(SpaceError::InvalidNu(nu));
        }
        let r = lattice.rank();
        let g = lattice.g();
        if character.dim() != r {
            return Err(SpaceError::CharacterDimension { expected: r, found: character.dim() });
        }
        let f = lattice
            .b_inverse()
            .map(|x| Complex64::new(0.0, 2.0 * PI / nu * x));
        let f = CMatrix::from_fn(r, r, |i, j| f[(i, j)]);
        let theta = ThetaParameters::new(f, character.alpha().to_vec(), vec![0.0; r])?;
        let det_b = lattice.b_determinant();
        let kernel_constant =
            det_b.sqrt() * (2.0 * nu / PI).powf(r as f64 / 2.0) * (nu / PI).powi((g - r) as i32);
        let log_norm_constant =
            -0.5 * det_b.ln() + 0.5 * r as f64 * (PI / (2.0 * nu)).ln() + (g - r) as f64 * (PI / nu).ln();
        Ok(Self { lattice, character, nu, theta, kernel_constant, log_norm_constant })
    }

    pub fn lattice(&self) -> &IsotropicLattice {
        &self.lattice
    }

    pub fn character(&self) -> &Character {
        &self.character
    }

    pub fn alpha(&self) -> &[f64] {
        self.character.alpha()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn g(&self) -> usize {
        self.lattice.g()
    }

    pub fn r(&self) -> usize {
        self.lattice.rank()
    }

    /// `Θ_{α,0}( · | (2πi/ν) B⁻¹)`.
    pub fn theta_parameters(&self) -> &ThetaParameters {
        &self.theta
    }

    /// `√det B (2ν/π)^{r/2} (ν/π)^{g-r}`.
    pub fn kernel_constant(&self) -> f64 {
        self.kernel_constant
    }

    fn check_point(&self, u: &PointCoordinates) -> Result<(), SpaceError> {
        if u.z.len() != self.r() {
            return Err(SpaceError::DimensionMismatch { what: "z", expected: self.r(), found: u.z.len() });
        }
        if u.z_perp.len() != self.g() - self.r() {
            return Err(SpaceError::DimensionMismatch {
                what: "z_perp",
                expected: self.g() - self.r(),
                found: u.z_perp.len(),
            });
        }
        Ok(())
    }

    fn check_index(&self, idx: &BasisIndex) -> Result<(), SpaceError> {
        if idx.n.len() != self.r() {
            return Err(SpaceError::DimensionMismatch { what: "n", expected: self.r(), found: idx.n.len() });
        }
        if idx.k.len() != self.g() - self.r() {
            return Err(SpaceError::DimensionMismatch {
                what: "k",
                expected: self.g() - self.r(),
                found: idx.k.len(),
            });
        }
        Ok(())
    }

    fn b_form(&self, z: &[Complex64], w: &[Complex64]) -> Complex64 {
        linalg::bilinear(self.lattice.b_matrix(), z, w)
    }

    /// Logarithm of the automorphy factor `J(z, m) = exp(ν B(z + m/2, m) + 2πi α·m)`,
    /// with `α·m` reduced modulo 1.
    pub fn log_automorphy_factor(&self, z: &[Complex64], m: &[i64]) -> Complex64 {
        let mc: Vec<Complex64> = m.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect();
        let mid: Vec<Complex64> = z.iter().zip(&mc).map(|(a, b)| a + b * 0.5).collect();
        self.b_form(&mid, &mc) * self.nu + Complex64::new(0.0, 2.0 * PI * self.character.reduced_phase(m))
    }

    pub fn automorphy_factor(&self, z: &[Complex64], m: &[i64]) -> Complex64 {
        self.log_automorphy_factor(z, m).exp()
    }

    /// Splits `z = z0 + m` with `m = floor(Re z)`; returns `(z0, m, log J(z0, m))`.
    fn reduce(&self, z: &[Complex64]) -> (Vec<Complex64>, Vec<i64>, Complex64) {
        let m: Vec<i64> = z.iter().map(|x| x.re.floor() as i64).collect();
        if m.iter().all(|&x| x == 0) {
            return (z.to_vec(), m, Complex64::new(0.0, 0.0));
        }
        let z0: Vec<Complex64> = z.iter().zip(&m).map(|(x, &mj)| x - mj as f64).collect();
        let log_j = self.log_automorphy_factor(&z0, &m);
        (z0, m, log_j)
    }

    /// `ν/2 B(z,z) + 2πi (α+n)·z` for an already reduced `z`.
    fn basis_exponent(&self, z: &[Complex64], n: &[i64]) -> Complex64 {
        let mut lin = Complex64::new(0.0, 0.0);
        for ((zj, a), &nj) in z.iter().zip(self.alpha()).zip(n) {
            lin += zj * (a + nj as f64);
        }
        self.b_form(z, z) * (0.5 * self.nu) + lin * Complex64::new(0.0, 2.0 * PI)
    }

    fn monomial(z_perp: &[Complex64], k: &[u32]) -> Complex64 {
        z_perp
            .iter()
            .zip(k)
            .fold(Complex64::new(1.0, 0.0), |acc, (x, &kj)| acc * x.powu(kj))
    }

    /// `ψ_{ν,α}(u) = exp(ν/2 B(z,z) + 2πi α·z)`.
    pub fn weight_factor(&self, u: &PointCoordinates) -> Result<Complex64, SpaceError> {
        self.check_point(u)?;
        let zero = vec![0i64; self.r()];
        let (z0, _, log_j) = self.reduce(&u.z);
        Ok((self.basis_exponent(&z0, &zero) + log_j).exp())
    }

    /// `e_{n,k}(u)`.
    pub fn basis_eval(&self, idx: &BasisIndex, u: &PointCoordinates) -> Result<Complex64, SpaceError> {
        self.check_index(idx)?;
        self.check_point(u)?;
        let (z0, _, log_j) = self.reduce(&u.z);
        Ok((self.basis_exponent(&z0, &idx.n) + log_j).exp() * Self::monomial(&u.z_perp, &idx.k))
    }

    /// `ln ‖e_{n,k}‖²`.
    pub fn basis_log_norm_sq(&self, idx: &BasisIndex) -> Result<f64, SpaceError> {
        self.check_index(idx)?;
        let x: Vec<f64> = idx.n.iter().zip(self.alpha()).map(|(&n, a)| n as f64 + a).collect();
        let quad = linalg::real_quadratic(self.lattice.b_inverse(), &x);
        let log_factorial: f64 = idx.k.iter().map(|&kj| log_factorial(kj)).sum();
        Ok(self.log_norm_constant + log_factorial - idx.degree() as f64 * self.nu.ln()
            + 2.0 * PI * PI / self.nu * quad)
    }

    /// `‖e_{n,k}‖² = (det B)^{-1/2} (π/2ν)^{r/2} (π/ν)^{g-r} k!/ν^{|k|} exp((2π²/ν)(n+α)·B⁻¹(n+α))`.
    pub fn basis_norm_sq(&self, idx: &BasisIndex) -> Result<f64, SpaceError> {
        let log_value = self.basis_log_norm_sq(idx)?;
        let value = log_value.exp();
        if !value.is_finite() {
            return Err(SpaceError::Overflow { log_value });
        }
        Ok(value)
    }

    /// `e_{n,k}(u) / ‖e_{n,k}‖`, the orthonormal variant.
    pub fn normalized_basis_eval(&self, idx: &BasisIndex, u: &PointCoordinates) -> Result<Complex64, SpaceError> {
        self.check_index(idx)?;
        self.check_point(u)?;
        let (z0, _, log_j) = self.reduce(&u.z);
        let half_log_norm = 0.5 * self.basis_log_norm_sq(idx)?;
        Ok((self.basis_exponent(&z0, &idx.n) + log_j - half_log_norm).exp() * Self::monomial(&u.z_perp, &idx.k))
    }

    /// `Σ a_{n,k} e_{n,k}(u)`.
    pub fn synthesize(&self, coeffs: &CoefficientField, u: &PointCoordinates) -> Result<Complex64, SpaceError> {
        self.check_point(u)?;
        let (z0, _, log_j) = self.reduce(&u.z);
        let mut acc = CompensatedComplexSum::new();
        for (idx, a) in coeffs.iter() {
            self.check_index(idx)?;
            acc.add(a * (self.basis_exponent(&z0, &idx.n) + log_j).exp() * Self::monomial(&u.z_perp, &idx.k));
        }
        Ok(acc.value())
    }

    /// `Σ |a_{n,k}|² ‖e_{n,k}‖²`, which is `‖f‖²` for the synthesized `f`.
    pub fn growth_functional(&self, coeffs: &CoefficientField) -> Result<f64, SpaceError> {
        let mut acc = CompensatedSum::new();
        for (idx, a) in coeffs.iter() {
            let m = a.norm_sqr();
            if m == 0.0 {
                continue;
            }
            acc.add((m.ln() + self.basis_log_norm_sq(idx)?).exp());
        }
        let value = acc.value();
        if !value.is_finite() {
            return Err(SpaceError::Overflow { log_value: f64::INFINITY });
        }
        Ok(value)
    }

    /// Theta options used by the kernel at a pair of (reduced) lattice points:
    /// the requested absolute tolerance divided by the prefactor modulus, but
    /// never looser than 1e-15 relative to the largest possible theta term.
    pub fn kernel_theta_options(&self, diff: &[Complex64], prefactor_modulus: f64, tol: f64) -> ThetaOptions {
        let (_, log_peak) = self.theta.center(diff);
        let relative_floor = 1e-15 * log_peak.exp();
        let absolute = tol / prefactor_modulus;
        let t = if absolute.is_finite() && absolute > 0.0 { absolute.min(relative_floor) } else { relative_floor };
        ThetaOptions::new(if t > 0.0 { t } else { f64::MIN_POSITIVE })
    }

    /// Reproducing kernel
    ///
    /// ```text
    /// K(u,v) = √det B (2ν/π)^{r/2} (ν/π)^{g-r} exp(ν/2 (B(z,z) + conj B(w,w)))
    ///          Θ_{α,0}(z - conj w | (2πi/ν) B⁻¹) exp(ν <z_perp, w_perp>)
    /// ```
    ///
    /// with absolute accuracy `tol` on the theta contribution.
    pub fn kernel_eval(&self, u: &PointCoordinates, v: &PointCoordinates, tol: f64) -> Result<Complex64, SpaceError> {
        self.check_point(u)?;
        self.check_point(v)?;
        let (z0, _, log_ju) = self.reduce(&u.z);
        let (w0, _, log_jv) = self.reduce(&v.z);
        let gauss = (self.b_form(&z0, &z0) + self.b_form(&w0, &w0).conj()) * (0.5 * self.nu) + log_ju + log_jv.conj();
        let mut inner = Complex64::new(0.0, 0.0);
        for (a, b) in u.z_perp.iter().zip(&v.z_perp) {
            inner += a * b.conj();
        }
        let exponent = gauss + inner * self.nu;
        let diff: Vec<Complex64> = z0.iter().zip(&w0).map(|(a, b)| a - b.conj()).collect();
        let opts = self.kernel_theta_options(&diff, self.kernel_constant * exponent.re.exp(), tol);
        let theta = self.theta.evaluate(&diff, &opts)?.value;
        Ok(exponent.exp() * theta * self.kernel_constant)
    }

    /// `K~(u) = K(u,u)` computed in real arithmetic; strictly positive.
    pub fn kernel_diagonal(&self, u: &PointCoordinates, tol: f64) -> Result<f64, SpaceError> {
        self.check_point(u)?;
        let (z0, _, log_j) = self.reduce(&u.z);
        let exponent = self.nu * self.b_form(&z0, &z0).re
            + 2.0 * log_j.re
            + self.nu * u.z_perp.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let diff: Vec<Complex64> = z0.iter().map(|x| Complex64::new(0.0, 2.0 * x.im)).collect();
        let opts = self.kernel_theta_options(&diff, self.kernel_constant * exponent.exp(), tol);
        let theta = self.theta.evaluate(&diff, &opts)?.value.re;
        Ok(self.kernel_constant * exponent.exp() * theta)
    }

    /// Basis labels with `|n_i| ≤ n_radius` and `|k| ≤ k_max`, ordered by
    /// increasing `(n+α)·B⁻¹(n+α)`, then `|k|`, then lexicographically.
    pub fn basis_indices(&self, n_radius: i64, k_max: u32) -> Vec<BasisIndex> {
        let ns = crate::geometry::integer_box(self.r(), n_radius);
        let ks = multi_indices(self.g() - self.r(), k_max);
        let mut keyed: Vec<(f64, BasisIndex)> = Vec::with_capacity(ns.len() * ks.len());
        for n in &ns {
            let x: Vec<f64> = n.iter().zip(self.alpha()).map(|(&a, b)| a as f64 + b).collect();
            let q = linalg::real_quadratic(self.lattice.b_inverse(), &x);
            for k in &ks {
                keyed.push((q, BasisIndex::new(n.clone(), k.clone())));
            }
        }
        keyed.sort_by(|(qa, a), (qb, b)| {
            qa.total_cmp(qb)
                .then(a.degree().cmp(&b.degree()))
                .then_with(|| a.cmp(b))
        });
        keyed.into_iter().map(|(_, idx)| idx).collect()
    }

    /// Truncated basis expansion `Σ e_{n,k}(u) conj(e_{n,k}(v)) / ‖e_{n,k}‖²`
    /// of the kernel over [`SpaceConfig::basis_indices`].
    pub fn kernel_series(
        &self,
        u: &PointCoordinates,
        v: &PointCoordinates,
        n_radius: i64,
        k_max: u32,
    ) -> Result<Complex64, SpaceError> {
        self.check_point(u)?;
        self.check_point(v)?;
        let (z0, _, log_ju) = self.reduce(&u.z);
        let (w0, _, log_jv) = self.reduce(&v.z);
        let mut acc = CompensatedComplexSum::new();
        for idx in self.basis_indices(n_radius, k_max) {
            let expo = self.basis_exponent(&z0, &idx.n) + log_ju + (self.basis_exponent(&w0, &idx.n) + log_jv).conj()
                - self.basis_log_norm_sq(&idx)?;
            let poly = Self::monomial(&u.z_perp, &idx.k) * Self::monomial(&v.z_perp, &idx.k).conj();
            acc.add(expo.exp() * poly);
        }
        Ok(acc.value())
    }

    /// `|f(u)| ≤ √K~(u) ‖f‖` for the synthesized `f`.
    pub fn evaluation_bound_check(
        &self,
        coeffs: &CoefficientField,
        u: &PointCoordinates,
        tol: f64,
    ) -> Result<EvaluationBound, SpaceError> {
        let lhs = self.synthesize(coeffs, u)?.norm();
        let rhs = self.kernel_diagonal(u, tol)?.sqrt() * self.growth_functional(coeffs)?.sqrt();
        Ok(EvaluationBound { lhs, rhs, holds: lhs <= rhs * (1.0 + EVALUATION_BOUND_SLACK) })
    }

    /// Relative defect of the automorphy relation for `f` at `u` and `m`:
    /// `|f(z+m) - J(z,m) f(z)| / max(|f(z+m)|, |J f(z)|)`.
    pub fn functional_equation_defect<F>(&self, f: F, u: &PointCoordinates, m: &[i64]) -> Result<f64, SpaceError>
    where
        F: Fn(&PointCoordinates) -> Result<Complex64, SpaceError>,
    {
        self.check_point(u)?;
        if m.len() != self.r() {
            return Err(SpaceError::DimensionMismatch { what: "m", expected: self.r(), found: m.len() });
        }
        let lhs = f(&u.translated(m))?;
        let rhs = self.automorphy_factor(&u.z, m) * f(u)?;
        let scale = lhs.norm().max(rhs.norm());
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok((lhs - rhs).norm() / scale)
    }

    /// Kernel matrix `[K(u_i, u_j)]`; rows are computed in parallel, each
    /// entry independently, so the result does not depend on scheduling.
    pub fn kernel_matrix(&self, points: &[PointCoordinates], tol: f64) -> Result<CMatrix, SpaceError> {
        let rows: Result<Vec<Vec<Complex64>>, SpaceError> = points
            .par_iter()
            .map(|u| points.iter().map(|v| self.kernel_eval(u, v, tol)).collect())
            .collect();
        let rows = rows?;
        Ok(CMatrix::from_fn(points.len(), points.len(), |i, j| rows[i][j]))
    }
}

fn log_factorial(k: u32) -> f64 {
    if k <= 30 {
        let p: f64 = (2..=k).map(|i| i as f64).product();
        p.ln()
    } else {
        (2..=k).map(|i| (i as f64).ln()).sum()
    }
}

/// All `k ∈ N^d` with `|k| ≤ max_degree`, lexicographic order.
pub(crate) fn multi_indices(d: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        let mut next = Vec::new();
        for prefix in &out {
            let used: u32 = prefix.iter().sum();
            for v in 0..=(max_degree - used) {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HermitianSpace;
    use crate::linalg::CVector;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn config(g: usize, r: usize, nu: f64, alpha: &[f64]) -> SpaceConfig {
        let space = HermitianSpace::new(CMatrix::identity(g, g)).unwrap();
        let gens = (0..r)
            .map(|i| {
                let mut v = CVector::zeros(g);
                v[i] = c(1.0, 0.0);
                v
            })
            .collect();
        SpaceConfig::new(IsotropicLattice::new(space, gens).unwrap(), Character::new(alpha), nu).unwrap()
    }

    #[test]
    fn weight_factor_examples() {
        let cfg = config(1, 1, 2.0, &[0.0]);
        let origin = PointCoordinates::origin(1, 1);
        assert_eq!(cfg.weight_factor(&origin).unwrap(), c(1.0, 0.0));
        let one = PointCoordinates::new(vec![c(1.0, 0.0)], vec![]);
        assert!((cfg.weight_factor(&one).unwrap() - c(1f64.exp(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn basis_eval_examples() {
        let cfg = config(2, 1, 1.0, &[0.0]);
        let idx = BasisIndex::new(vec![0], vec![0]);
        assert_eq!(cfg.basis_eval(&idx, &PointCoordinates::origin(1, 2)).unwrap(), c(1.0, 0.0));

        let cfg = config(1, 1, PI, &[0.0]);
        let u = PointCoordinates::new(vec![c(0.0, 1.0)], vec![]);
        let value = cfg.basis_eval(&BasisIndex::new(vec![1], vec![]), &u).unwrap();
        let expected = (-PI / 2.0 - 2.0 * PI).exp();
        assert!((value - c(expected, 0.0)).norm() < 1e-15 * expected.max(1e-300) * 10.0);

        assert!(matches!(
            cfg.basis_eval(&BasisIndex::new(vec![1, 2], vec![]), &u),
            Err(SpaceError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn norm_examples() {
        let cfg = config(1, 1, PI, &[0.0]);
        let v = cfg.basis_norm_sq(&BasisIndex::new(vec![0], vec![])).unwrap();
        assert!((v - 0.5f64.sqrt()).abs() < 1e-15);

        let cfg0 = config(1, 0, PI, &[]);
        let v = cfg0.basis_norm_sq(&BasisIndex::new(vec![], vec![2])).unwrap();
        assert!((v - 2.0 / (PI * PI)).abs() < 1e-15);
        assert!((v - 0.2026423672).abs() < 1e-10);

        let cfg = config(1, 1, 1.7, &[0.3]);
        let a = cfg.basis_log_norm_sq(&BasisIndex::new(vec![2], vec![])).unwrap();
        let b = cfg.basis_log_norm_sq(&BasisIndex::new(vec![3], vec![])).unwrap();
        let expected = 2.0 * PI * PI / 1.7 * (2.0 * 2.0 + 2.0 * 0.3 + 1.0);
        assert!((b - a - expected).abs() < 1e-12);
    }

    #[test]
    fn huge_degree_norm_overflows_cleanly() {
        let cfg = config(1, 0, 1e-3, &[]);
        let idx = BasisIndex::new(vec![], vec![400]);
        assert!(cfg.basis_log_norm_sq(&idx).unwrap() > 709.0);
        assert!(matches!(cfg.basis_norm_sq(&idx), Err(SpaceError::Overflow { .. })));
    }

    #[test]
    fn growth_functional_examples() {
        let cfg = config(2, 1, 1.3, &[0.25]);
        assert_eq!(cfg.growth_functional(&CoefficientField::new()).unwrap(), 0.0);
        let a = BasisIndex::new(vec![1], vec![2]);
        let b = BasisIndex::new(vec![-1], vec![0]);
        let fa = CoefficientField::single(a.clone(), c(1.0, 0.0));
        let fb = CoefficientField::single(b.clone(), c(0.0, 2.0));
        assert!((cfg.growth_functional(&fa).unwrap() - cfg.basis_norm_sq(&a).unwrap()).abs() < 1e-14);
        let both = fa.combine(c(1.0, 0.0), &fb, c(1.0, 0.0));
        let sum = cfg.growth_functional(&fa).unwrap() + cfg.growth_functional(&fb).unwrap();
        assert!((cfg.growth_functional(&both).unwrap() - sum).abs() < 1e-13 * sum);
    }

    #[test]
    fn rank_zero_kernel_is_classical() {
        let cfg = config(2, 0, 1.5, &[]);
        let u = PointCoordinates::new(vec![], vec![c(0.3, -0.2), c(0.1, 0.4)]);
        let v = PointCoordinates::new(vec![], vec![c(-0.5, 0.2), c(0.7, 0.0)]);
        let k = cfg.kernel_eval(&u, &v, 1e-14).unwrap();
        let mut inner = c(0.0, 0.0);
        for (a, b) in u.z_perp.iter().zip(&v.z_perp) {
            inner += a * b.conj();
        }
        assert_eq!(k, (inner * 1.5).exp() * (1.5 / PI).powi(2));
        let origin = PointCoordinates::origin(0, 2);
        assert!((cfg.kernel_diagonal(&origin, 1e-14).unwrap() - (1.5 / PI).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn kernel_diagonal_matches_kernel_eval() {
        let cfg = config(2, 1, 2.3, &[0.4]);
        let u = PointCoordinates::new(vec![c(3.7, -0.4)], vec![c(0.2, 0.5)]);
        let kd = cfg.kernel_diagonal(&u, 1e-12).unwrap();
        let k = cfg.kernel_eval(&u, &u, 1e-12).unwrap();
        assert!(kd > 0.0);
        assert!((k.re - kd).abs() <= 1e-12 + 1e-14 * kd);
        assert!(k.im.abs() <= 1e-12 + 1e-14 * kd);
        let doubled = PointCoordinates::new(u.z.clone(), vec![u.z_perp[0] * 2.0]);
        assert!(cfg.kernel_diagonal(&doubled, 1e-12).unwrap() >= kd);
    }

    #[test]
    fn kernel_matches_series_near_origin() {
        let cfg = config(2, 1, PI, &[0.3]);
        let u = PointCoordinates::new(vec![c(0.2, 0.1)], vec![c(0.3, -0.1)]);
        let v = PointCoordinates::new(vec![c(0.7, -0.2)], vec![c(-0.2, 0.25)]);
        let closed = cfg.kernel_eval(&u, &v, 1e-14).unwrap();
        let series = cfg.kernel_series(&u, &v, 8, 30).unwrap();
        assert!((closed - series).norm() < 1e-12, "{closed} vs {series}");
    }

    #[test]
    fn basis_functional_equation() {
        let cfg = config(2, 1, 1.1, &[0.7]);
        let idx = BasisIndex::new(vec![-2], vec![3]);
        let u = PointCoordinates::new(vec![c(0.4, 0.3)], vec![c(0.5, 0.1)]);
        for m in [-3i64, -1, 1, 4] {
            let d = cfg.functional_equation_defect(|p| cfg.basis_eval(&idx, p), &u, &[m]).unwrap();
            assert!(d < 1e-12, "m={m}: {d}");
        }
    }

    #[test]
    fn basis_index_order() {
        let cfg = config(2, 1, 1.0, &[0.25]);
        let ids = cfg.basis_indices(1, 1);
        assert_eq!(ids.len(), 6);
        assert_eq!(ids[0], BasisIndex::new(vec![0], vec![0]));
        assert_eq!(ids[1], BasisIndex::new(vec![0], vec![1]));
        assert_eq!(ids[2].n, vec![-1]);
    }

    #[test]
    fn multi_indices_count() {
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert_eq!(multi_indices(0, 5), vec![Vec::<u32>::new()]);
    }
}
