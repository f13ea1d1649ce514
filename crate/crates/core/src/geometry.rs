//! Hermitian and symplectic forms on `C^g`, isotropic lattices, the adapted
//! basis `(ω_1, ..., ω_g)` and characters of `Z^r`.
//!
//! Conventions: `H(u, v) = Σ_{j,k} u_j H_{jk} conj(v_k)` is linear in its first
//! argument, and `E(u, v) = Im H(u, v)`. Points of `C^g` are either *ambient*
//! vectors or [`PointCoordinates`] with respect to the adapted basis, in which
//! the first `r` coordinates `z` refer to the lattice generators and the last
//! `g - r` coordinates `z_perp` to an H-orthonormal basis of the complement.

use std::f64::consts::PI;

use nalgebra::linalg::LU;
use nalgebra::{Dyn, SVD};
use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, CMatrix, CVector, RMatrix};

/// Relative tolerance used for every "equal up to rounding" decision on forms.
pub const DEFAULT_FORM_TOLERANCE: f64 = 1e-10;

/// Threshold on `|χ(γ+γ') − χ(γ)χ(γ')e^{iνE(γ,γ')}|` below which the cocycle
/// condition is considered satisfied.
pub const RDQ_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("empty space: dimension g must be at least 1")]
    EmptySpace,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("H is not hermitian: H[{row}][{col}] differs from conj(H[{col}][{row}]) by {defect:e}")]
    NotHermitian { row: usize, col: usize, defect: f64 },
    #[error("H is not positive definite: leading principal minor of order {order} is not positive")]
    NotPositiveDefinite { order: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{rank} generators exceed the complex dimension g = {g}")]
    RankExceedsG { rank: usize, g: usize },
    #[error("generators are not R-linearly independent (numerical rank {rank} of {count})")]
    NotIndependent { rank: usize, count: usize },
    /// Generator indices are 1-based, matching the labels ω_1, ..., ω_r.
    #[error("lattice is not isotropic: E(ω_{j}, ω_{k}) = {value:e}")]
    NotIsotropic { j: usize, k: usize, value: f64 },
    #[error("lattice Gram matrix B is not positive definite (pivot {order})")]
    FormNotPositiveDefinite { order: usize },
    #[error("adapted basis is numerically singular")]
    SingularBasis,
    #[error("|χ(m)| = {modulus} differs from 1 at m = {index:?}")]
    NonUnitModulus { index: Vec<i64>, modulus: f64 },
}

/// `C^g` with a validated positive definite hermitian form.
#[derive(Clone, Debug)]
pub struct HermitianSpace {
    h: CMatrix,
    tol: f64,
}

impl HermitianSpace {
    /// Validates `h` with the default relative tolerance.
    pub fn new(h: CMatrix) -> Result<Self, GeometryError> {
        Self::with_tolerance(h, DEFAULT_FORM_TOLERANCE)
    }

    /// Validates `h`; `relative_tol` is scaled by the largest entry modulus.
    pub fn with_tolerance(h: CMatrix, relative_tol: f64) -> Result<Self, GeometryError> {
        let (rows, cols) = h.shape();
        if rows != cols {
            return Err(GeometryError::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(GeometryError::EmptySpace);
        }
        for row in 0..rows {
            for col in 0..cols {
                if !h[(row, col)].is_finite() {
                    return Err(GeometryError::NonFinite { row, col });
                }
            }
        }
        let scale = h.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let tol = relative_tol * scale.max(f64::MIN_POSITIVE);
        for row in 0..rows {
            for col in row..cols {
                let defect = (h[(row, col)] - h[(col, row)].conj()).norm();
                if defect > tol {
                    return Err(GeometryError::NotHermitian { row, col, defect });
                }
            }
        }
        // Symmetrize away the admitted rounding so downstream forms are exact.
        let h = (&h + h.adjoint()).map(|x| x * 0.5);
        linalg::hermitian_cholesky(&h)
            .map_err(|pivot| GeometryError::NotPositiveDefinite { order: pivot + 1 })?;
        Ok(Self { h, tol })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    /// Absolute tolerance `tol_form` (relative tolerance times the scale of H).
    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    fn check_dim(&self, v: &CVector) -> Result<(), GeometryError> {
        if v.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(())
    }

    /// `H(u, v)`.
    pub fn hermitian(&self, u: &CVector, v: &CVector) -> Result<Complex64, GeometryError> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        Ok(self.hermitian_unchecked(u, v))
    }

    pub(crate) fn hermitian_unchecked(&self, u: &CVector, v: &CVector) -> Complex64 {
        let g = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..g {
            let mut row = Complex64::new(0.0, 0.0);
            for k in 0..g {
                row += self.h[(j, k)] * v[k].conj();
            }
            acc += u[j] * row;
        }
        acc
    }

    /// `E(u, v) = Im H(u, v)`.
    pub fn symplectic_form(&self, u: &CVector, v: &CVector) -> Result<f64, GeometryError> {
        Ok(self.hermitian(u, v)?.im)
    }
}

/// Coordinates of a point with respect to the adapted basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCoordinates {
    pub z: Vec<Complex64>,
    pub z_perp: Vec<Complex64>,
}

impl PointCoordinates {
    pub fn new(z: Vec<Complex64>, z_perp: Vec<Complex64>) -> Self {
        Self { z, z_perp }
    }

    pub fn origin(r: usize, g: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self { z: vec![zero; r], z_perp: vec![zero; g - r] }
    }

    /// Splits a full coordinate vector `(z_1, ..., z_g)` at `r`.
    pub fn from_full(full: &[Complex64], r: usize) -> Self {
        Self { z: full[..r].to_vec(), z_perp: full[r..].to_vec() }
    }

    pub fn full(&self) -> Vec<Complex64> {
        self.z.iter().chain(self.z_perp.iter()).copied().collect()
    }

    /// Translate the lattice part by an integer vector.
    pub fn translated(&self, m: &[i64]) -> Self {
        let z = self
            .z
            .iter()
            .zip(m)
            .map(|(zj, &mj)| zj + mj as f64)
            .collect();
        Self { z, z_perp: self.z_perp.clone() }
    }
}

/// Rank-`r` lattice `Γ_r = Zω_1 + ... + Zω_r` on which `E` vanishes, together
/// with an H-orthonormal completion `ω_{r+1}, ..., ω_g` of `span_C(Γ_r)`.
#[derive(Clone, Debug)]
pub struct IsotropicLattice {
    space: HermitianSpace,
    generators: Vec<CVector>,
    complement: Vec<CVector>,
    basis: CMatrix,
    basis_lu: LU<Complex64, Dyn, Dyn>,
    b: RMatrix,
    b_inv: RMatrix,
    b_chol: RMatrix,
    b_det: f64,
}

impl IsotropicLattice {
    pub fn new(space: HermitianSpace, generators: Vec<CVector>) -> Result<Self, GeometryError> {
        let g = space.dim();
        let r = generators.len();
        if r > g {
            return Err(GeometryError::RankExceedsG { rank: r, g });
        }
        for w in &generators {
            space.check_dim(w)?;
            for (row, x) in w.iter().enumerate() {
                if !x.is_finite() {
                    return Err(GeometryError::NonFinite { row, col: 0 });
                }
            }
        }

        let rank = real_rank(&generators, g);
        if rank < r {
            return Err(GeometryError::NotIndependent { rank, count: r });
        }

        let tol = space.tolerance();
        for j in 0..r {
            for k in (j + 1)..r {
                let value = space.hermitian_unchecked(&generators[j], &generators[k]).im;
                if value.abs() > tol * scale_of(&generators[j]) * scale_of(&generators[k]) {
                    return Err(GeometryError::NotIsotropic { j: j + 1, k: k + 1, value });
                }
            }
        }

        let mut b = RMatrix::zeros(r, r);
        for j in 0..r {
            for k in 0..r {
                b[(j, k)] = space.hermitian_unchecked(&generators[j], &generators[k]).re;
            }
        }
        let b = (&b + b.transpose()) * 0.5;
        let b_chol = linalg::real_cholesky(&b)
            .map_err(|pivot| GeometryError::FormNotPositiveDefinite { order: pivot + 1 })?;
        let b_det = (0..r).map(|i| b_chol[(i, i)] * b_chol[(i, i)]).product::<f64>();
        let mut b_inv = RMatrix::zeros(r, r);
        for i in 0..r {
            let mut e = linalg::RVector::zeros(r);
            e[i] = 1.0;
            b_inv.set_column(i, &linalg::cholesky_solve(&b_chol, &e));
        }
        let b_inv = (&b_inv + b_inv.transpose()) * 0.5;

        let complement = complete_basis(&space, &generators);

        let mut basis = CMatrix::zeros(g, g);
        for (i, w) in generators.iter().chain(complement.iter()).enumerate() {
            basis.set_column(i, w);
        }
        let basis_lu = basis.clone().lu();
        if !basis_lu.is_invertible() {
            return Err(GeometryError::SingularBasis);
        }
        let det_mod = basis_lu.determinant().norm();
        let col_scale: f64 = (0..g).map(|i| basis.column(i).norm()).product();
        if det_mod.is_nan() || det_mod <= 1e-12 * col_scale {
            return Err(GeometryError::SingularBasis);
        }

        Ok(Self { space, generators, complement, basis, basis_lu, b, b_inv, b_chol, b_det })
    }

    pub fn space(&self) -> &HermitianSpace {
        &self.space
    }

    pub fn g(&self) -> usize {
        self.space.dim()
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[CVector] {
        &self.generators
    }

    pub fn complement(&self) -> &[CVector] {
        &self.complement
    }

    /// Columns are `ω_1, ..., ω_g` in ambient coordinates.
    pub fn basis_matrix(&self) -> &CMatrix {
        &self.basis
    }

    /// `B_{jk} = H(ω_j, ω_k)`, real symmetric positive definite.
    pub fn b_matrix(&self) -> &RMatrix {
        &self.b
    }

    pub fn b_inverse(&self) -> &RMatrix {
        &self.b_inv
    }

    /// Lower Cholesky factor of `B`.
    pub fn b_cholesky(&self) -> &RMatrix {
        &self.b_chol
    }

    /// `det B`, equal to 1 for `r = 0`.
    pub fn b_determinant(&self) -> f64 {
        self.b_det
    }

    /// Jacobian `|det P|^2` between Lebesgue measure in ω-coordinates and in
    /// ambient coordinates (`dλ_ambient = |det P|^2 dλ_ω`).
    pub fn measure_conversion_factor(&self) -> f64 {
        self.basis_lu.determinant().norm_sqr()
    }

    /// Ambient vector of the lattice point `Σ m_j ω_j`.
    pub fn lattice_point(&self, m: &[i64]) -> Result<CVector, GeometryError> {
        if m.len() != self.rank() {
            return Err(GeometryError::DimensionMismatch { expected: self.rank(), found: m.len() });
        }
        let mut out = CVector::zeros(self.g());
        for (w, &mj) in self.generators.iter().zip(m) {
            out += w * Complex64::new(mj as f64, 0.0);
        }
        Ok(out)
    }

    pub fn coordinates(&self, u: &CVector) -> Result<PointCoordinates, GeometryError> {
        self.space.check_dim(u)?;
        let c = self.basis_lu.solve(u).ok_or(GeometryError::SingularBasis)?;
        Ok(PointCoordinates::from_full(c.as_slice(), self.rank()))
    }

    pub fn to_ambient(&self, p: &PointCoordinates) -> Result<CVector, GeometryError> {
        if p.z.len() != self.rank() {
            return Err(GeometryError::DimensionMismatch { expected: self.rank(), found: p.z.len() });
        }
        let perp = self.g() - self.rank();
        if p.z_perp.len() != perp {
            return Err(GeometryError::DimensionMismatch { expected: perp, found: p.z_perp.len() });
        }
        Ok(&self.basis * CVector::from_vec(p.full()))
    }

    /// `B(z, w) = z^T B w` (bilinear, no conjugation).
    pub fn b_form(&self, z: &[Complex64], w: &[Complex64]) -> Result<Complex64, GeometryError> {
        let r = self.rank();
        for v in [z, w] {
            if v.len() != r {
                return Err(GeometryError::DimensionMismatch { expected: r, found: v.len() });
            }
        }
        Ok(linalg::bilinear(&self.b, z, w))
    }

    /// Conjugation in ω-coordinates: `Σ z_k ω_k ↦ Σ conj(z_k) ω_k`.
    pub fn conjugate_in_basis(&self, u: &CVector) -> Result<CVector, GeometryError> {
        let c = self.basis_lu.solve(u).ok_or(GeometryError::SingularBasis)?;
        Ok(&self.basis * c.map(|x| x.conj()))
    }

    /// Extension `B~(u, v) = H(u, conj(v))` of the lattice form to all of `C^g`.
    pub fn b_tilde(&self, u: &CVector, v: &CVector) -> Result<Complex64, GeometryError> {
        let v_bar = self.conjugate_in_basis(v)?;
        self.space.hermitian(u, &v_bar)
    }

    /// `H(u, v)` evaluated from coordinates: `B(z, conj w) + <z_perp, w_perp>`.
    pub fn hermitian_in_coordinates(&self, p: &PointCoordinates, q: &PointCoordinates) -> Complex64 {
        let w_bar: Vec<Complex64> = q.z.iter().map(|x| x.conj()).collect();
        let lattice_part = linalg::bilinear(&self.b, &p.z, &w_bar);
        let perp: Complex64 = p
            .z_perp
            .iter()
            .zip(&q.z_perp)
            .map(|(a, b)| a * b.conj())
            .sum();
        lattice_part + perp
    }

    /// Checks the cocycle condition `χ(γ+γ') = χ(γ)χ(γ')e^{iνE(γ,γ')}` on all
    /// pairs of lattice points with coordinates in `[-radius, radius]`.
    pub fn check_rdq<F>(&self, chi: F, nu: f64, radius: i64) -> Result<RdqReport, GeometryError>
    where
        F: Fn(&[i64]) -> Complex64,
    {
        let r = self.rank();
        let points = integer_box(r, radius);
        let mut values = Vec::with_capacity(points.len());
        let mut ambient = Vec::with_capacity(points.len());
        for m in &points {
            let value = chi(m);
            let modulus = value.norm();
            if (modulus - 1.0).abs() > 1e-10 {
                return Err(GeometryError::NonUnitModulus { index: m.clone(), modulus });
            }
            values.push(value);
            ambient.push(self.lattice_point(m)?);
        }
        let mut report = RdqReport { passes: true, max_defect: 0.0, worst_pair: None, pairs_checked: 0 };
        for (a, ma) in points.iter().enumerate() {
            for (b, mb) in points.iter().enumerate() {
                let sum: Vec<i64> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                let e = self.space.hermitian_unchecked(&ambient[a], &ambient[b]).im;
                let lhs = chi(&sum);
                let rhs = values[a] * values[b] * Complex64::from_polar(1.0, nu * e);
                let defect = (lhs - rhs).norm();
                report.pairs_checked += 1;
                if defect > report.max_defect || report.worst_pair.is_none() {
                    report.max_defect = report.max_defect.max(defect);
                    report.worst_pair = Some((ma.clone(), mb.clone()));
                }
            }
        }
        report.passes = report.max_defect <= RDQ_TOLERANCE;
        Ok(report)
    }
}

/// Outcome of [`IsotropicLattice::check_rdq`].
#[derive(Clone, Debug, PartialEq)]
pub struct RdqReport {
    pub passes: bool,
    pub max_defect: f64,
    pub worst_pair: Option<(Vec<i64>, Vec<i64>)>,
    pub pairs_checked: usize,
}

/// A character `χ_α(m) = e^{2πi α·m}` of `Z^r`, stored with `α ∈ [0, 1)^r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Character {
    alpha: Vec<f64>,
}

impl Character {
    pub fn new(alpha: &[f64]) -> Self {
        let alpha = alpha
            .iter()
            .map(|&a| {
                let reduced = a - a.floor();
                if reduced >= 1.0 {
                    0.0
                } else {
                    reduced
                }
            })
            .collect();
        Self { alpha }
    }

    pub fn trivial(r: usize) -> Self {
        Self { alpha: vec![0.0; r] }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// `α·m` reduced to `[-1/2, 1/2]`.
    pub fn reduced_phase(&self, m: &[i64]) -> f64 {
        let mut phase = 0.0;
        for (a, &mj) in self.alpha.iter().zip(m) {
            let t = a * mj as f64;
            phase += t - t.round();
        }
        phase - phase.round()
    }

    pub fn value(&self, m: &[i64]) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.reduced_phase(m))
    }
}

/// All integer vectors of length `r` with entries in `[-radius, radius]`, in
/// lexicographic order.
pub(crate) fn integer_box(r: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..r {
        let mut next = Vec::with_capacity(out.len() * (2 * radius as usize + 1));
        for prefix in &out {
            for v in -radius..=radius {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

fn scale_of(v: &CVector) -> f64 {
    v.norm().max(1.0)
}

fn real_rank(generators: &[CVector], g: usize) -> usize {
    let r = generators.len();
    if r == 0 {
        return 0;
    }
    let mut m = RMatrix::zeros(2 * g, r);
    for (j, w) in generators.iter().enumerate() {
        for i in 0..g {
            m[(i, j)] = w[i].re;
            m[(g + i, j)] = w[i].im;
        }
    }
    let sv = SVD::new(m, false, false).singular_values;
    let largest = sv.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-10 * largest).count()
}

/// H-orthonormal completion of `span_C(generators)`: at each step the ambient
/// standard basis vector with the largest residual after H-orthogonal
/// projection is chosen (first index wins ties) and normalized.
fn complete_basis(space: &HermitianSpace, generators: &[CVector]) -> Vec<CVector> {
    let g = space.dim();
    let mut ortho: Vec<CVector> = Vec::with_capacity(g);
    for w in generators {
        let v = project_out(space, &ortho, w.clone());
        let norm = space.hermitian_unchecked(&v, &v).re.sqrt();
        ortho.push(v / Complex64::new(norm, 0.0));
    }
    let mut complement = Vec::with_capacity(g - generators.len());
    while ortho.len() < g {
        let mut best: Option<(f64, CVector)> = None;
        for i in 0..g {
            let mut e = CVector::zeros(g);
            e[i] = Complex64::new(1.0, 0.0);
            let v = project_out(space, &ortho, e);
            let norm = space.hermitian_unchecked(&v, &v).re.max(0.0).sqrt();
            if best.as_ref().is_none_or(|(n, _)| norm > *n) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("g >= 1");
        let q = v / Complex64::new(norm, 0.0);
        ortho.push(q.clone());
        complement.push(q);
    }
    complement
}

/// Removes the components along an H-orthonormal family (two passes).
fn project_out(space: &HermitianSpace, ortho: &[CVector], mut v: CVector) -> CVector {
    for _ in 0..2 {
        for q in ortho {
            let c = space.hermitian_unchecked(&v, q);
            v -= q * c;
        }
    }
    v
}
