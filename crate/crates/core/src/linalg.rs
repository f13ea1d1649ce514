//! Small dense linear-algebra routines that nalgebra does not expose in the
//! form needed here (pivot diagnostics, complex-symmetric factorizations).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

/// Cholesky factorization `A = L L^*` of a hermitian matrix.
///
/// On failure returns the zero-based index of the first non-positive pivot;
/// pivot `k` fails exactly when the leading principal minor of order `k + 1`
/// is not positive.
pub fn hermitian_cholesky(a: &CMatrix) -> Result<CMatrix, usize> {
    let n = a.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !d.is_finite() || d <= 0.0 {
            return Err(j);
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Cholesky factorization `A = L L^T` of a real symmetric matrix, with the
/// same failure convention as [`hermitian_cholesky`].
pub fn real_cholesky(a: &RMatrix) -> Result<RMatrix, usize> {
    let n = a.nrows();
    let mut l = RMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !d.is_finite() || d <= 0.0 {
            return Err(j);
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L L^T x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &RMatrix, b: &RVector) -> RVector {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// Smallest eigenvalue of a real symmetric matrix (`+inf` for the empty matrix).
pub fn min_symmetric_eigenvalue(a: &RMatrix) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `A = L D L^T` for a complex symmetric (not hermitian) matrix, no pivoting.
///
/// For matrices with positive definite real part every Schur complement keeps
/// a positive definite real part, so all pivots lie in the open right half
/// plane and the factorization exists.
#[derive(Clone, Debug)]
pub struct SymmetricLdlt {
    lower: CMatrix,
    diag: Vec<Complex64>,
}

impl SymmetricLdlt {
    pub fn new(a: &CMatrix) -> Option<Self> {
        let n = a.nrows();
        let mut lower = CMatrix::identity(n, n);
        let mut diag = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= lower[(j, k)] * lower[(j, k)] * diag[k];
            }
            if d.norm() == 0.0 || !d.is_finite() {
                return None;
            }
            diag[j] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= lower[(i, k)] * lower[(j, k)] * diag[k];
                }
                lower[(i, j)] = s / d;
            }
        }
        Some(Self { lower, diag })
    }

    pub fn pivots(&self) -> &[Complex64] {
        &self.diag
    }

    /// `det(A)^{-1/2}` on the branch continuous from real positive definite
    /// matrices: the product of principal square roots of the pivots.
    pub fn inverse_sqrt_det(&self) -> Complex64 {
        self.diag
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, d| acc / d.sqrt())
    }

    pub fn solve(&self, b: &CVector) -> CVector {
        let n = self.diag.len();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lower[(i, k)] * y[k];
            }
            y[i] = s;
        }
        for i in 0..n {
            y[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.lower[(k, i)] * y[k];
            }
            y[i] = s;
        }
        y
    }
}

/// Real bilinear form `x^T M y` for real `M` and complex vectors (no conjugation).
pub fn bilinear(m: &RMatrix, x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..x.len() {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..y.len() {
            row += y[j] * m[(i, j)];
        }
        acc += x[i] * row;
    }
    acc
}

/// Real quadratic form `x^T M x`.
pub fn real_quadratic(m: &RMatrix, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        let mut row = 0.0;
        for j in 0..x.len() {
            row += m[(i, j)] * x[j];
        }
        acc += x[i] * row;
    }
    acc
}
