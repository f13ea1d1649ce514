//! Independent numerical oracle for the closed forms of the space.
//!
//! Inner products `⟨f, h⟩ = ∫_Λ f(u) conj(h(u)) e^{-ν H(u,u)} dλ(u)` are computed
//! over the fundamental domain `Λ = ([t, 1+t] × R)^r × C^{g-r}` in ω-coordinates
//! with a tensor rule: Gauss–Legendre on every compact direction `Re z_j`,
//! Gauss–Hermite on `Im z` after diagonalizing `2νB`, and Gauss–Hermite with
//! weight `e^{-ν|·|²}` on the real and imaginary parts of `z_perp`.
//!
//! The Hermite weight is compensated exactly at every node, and `H(u,u)` is
//! evaluated from the ambient hermitian matrix rather than from `B`, so the
//! oracle shares no closed-form algebra with the space module.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::PointCoordinates;
use crate::linalg::{self, CMatrix, CVector, RMatrix, RVector, SymmetricLdlt};
use crate::space::{SpaceConfig, SpaceError};
use crate::summation::CompensatedComplexSum;

pub const DEFAULT_COMPACT_NODES: usize = 32;
pub const DEFAULT_UNBOUNDED_NODES: usize = 48;
/// Largest `g` accepted by [`build_grid`]; `g = 3` runs with the reduced
/// default node counts below.
pub const DIMENSION_CAP: usize = 3;
pub const REDUCED_COMPACT_NODES: usize = 8;
pub const REDUCED_UNBOUNDED_NODES: usize = 16;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("scale a must be positive, got {0}")]
    InvalidScale(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("real part of A is not positive definite")]
    RealPartNotPositiveDefinite,
    #[error("g = {g} exceeds the quadrature dimension cap {cap}")]
    DimensionCapExceeded { g: usize, cap: usize },
    #[error("node count must be at least 2, got {0}")]
    InvalidNodeCount(usize),
    #[error("grid too coarse: estimated error {estimated:e} exceeds {threshold:e}")]
    GridTooCoarse { estimated: f64, threshold: f64 },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Nodes and positive weights of a one-dimensional rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Affine image of a `[-1, 1]` rule on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| half * w).collect(),
        }
    }
}

/// Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    Rule { nodes, weights }
}

/// Gauss–Hermite rule for the weight `e^{-t²}` on `R`, nodes ascending.
pub fn gauss_hermite(n: usize) -> Rule {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z: f64 = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j + 1) as f64).sqrt() * p2 - (j as f64 / (j + 1) as f64).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.reverse();
    w.reverse();
    Rule { nodes: x, weights: w }
}

/// Closed-form Gaussian integral
///
/// ```text
/// ∫_{R^r} exp(-a y·A y + b·y) dy = det(A)^{-1/2} (π/a)^{r/2} exp(b·A⁻¹b / (4a))
/// ```
///
/// for `a > 0` and complex symmetric `A` with positive definite real part.
/// The square root is taken on the branch continuous from real positive
/// definite `A` (product of principal roots of the LDLᵀ pivots), which agrees
/// with the principal root of `det A` whenever `r ≤ 2`.
pub fn gaussian_integral(a: f64, a_mat: &CMatrix, b: &CVector) -> Result<Complex64, QuadratureError> {
    if !a.is_finite() || a <= 0.0 {
        return Err(QuadratureError::InvalidScale(a));
    }
    let r = a_mat.nrows();
    if a_mat.ncols() != r {
        return Err(QuadratureError::DimensionMismatch { expected: r, found: a_mat.ncols() });
    }
    if b.len() != r {
        return Err(QuadratureError::DimensionMismatch { expected: r, found: b.len() });
    }
    let scale = a_mat.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if (a_mat - a_mat.transpose()).iter().any(|x| x.norm() > 1e-12 * scale) {
        return Err(QuadratureError::NotSymmetric);
    }
    let re: RMatrix = a_mat.map(|x| x.re);
    linalg::real_cholesky(&re).map_err(|_| QuadratureError::RealPartNotPositiveDefinite)?;
    let ldlt = SymmetricLdlt::new(a_mat).ok_or(QuadratureError::RealPartNotPositiveDefinite)?;
    let solved = ldlt.solve(b);
    let quad: Complex64 = b.iter().zip(solved.iter()).map(|(x, y)| x * y).sum();
    Ok(ldlt.inverse_sqrt_det() * (PI / a).powf(r as f64 / 2.0) * (quad / (4.0 * a)).exp())
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let center = f(mid);
    let mut kronrod = center * GK_WEIGHTS[7];
    let mut gauss = center * G_WEIGHTS[3];
    for i in 0..7 {
        let dx = half * GK_NODES[i];
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += pair * GK_WEIGHTS[i];
        if i % 2 == 1 {
            gauss += pair * G_WEIGHTS[i / 2];
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).norm())
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of a complex integrand
/// over `[a, b]`, refining the interval with the largest error estimate until
/// the total estimate is below `tol` (absolute).
pub fn adaptive_integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    let mut intervals = vec![(a, b, gauss_kronrod(&f, a, b))];
    for _ in 0..20_000 {
        let total_err: f64 = intervals.iter().map(|(_, _, (_, e))| e).sum();
        if total_err <= tol {
            break;
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("non-empty");
        let (lo, hi, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, gauss_kronrod(&f, lo, mid)));
        intervals.push((mid, hi, gauss_kronrod(&f, mid, hi)));
    }
    intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
    intervals.iter().map(|(_, _, (v, _))| *v).collect::<CompensatedComplexSum>().value()
}

/// Truncated description of `Λ(Γ_r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalDomain {
    pub r: usize,
    pub g: usize,
    /// Compact directions are `[offset, offset + 1]`.
    pub offset: f64,
    /// Center of the Gaussian weight in `Im z`.
    pub y_center: Vec<f64>,
    /// Half-width along each eigendirection of `B`.
    pub y_radii: Vec<f64>,
    /// Half-width of each real direction of `z_perp`.
    pub perp_radius: f64,
    pub tail_fraction: f64,
}

impl FundamentalDomain {
    /// Radii outside which each one-dimensional Gaussian factor of the weight
    /// carries at most `tail_fraction / (number of unbounded directions)` of its
    /// mass (using `erfc(T) ≤ e^{-T²}`).
    pub fn new(config: &SpaceConfig, offset: f64, tail_fraction: f64) -> Self {
        let (r, g, nu) = (config.r(), config.g(), config.nu());
        let dirs = (r + 2 * (g - r)).max(1) as f64;
        let t = (dirs / tail_fraction).ln().max(0.0).sqrt();
        let (values, _) = eigen(config.lattice().b_matrix());
        let y_radii = values.iter().map(|l| t / (2.0 * nu * l).sqrt()).collect();
        Self {
            r,
            g,
            offset,
            y_center: gaussian_center(config).iter().copied().collect(),
            y_radii,
            perp_radius: t / nu.sqrt(),
            tail_fraction,
        }
    }
}

fn eigen(b: &RMatrix) -> (RVector, RMatrix) {
    if b.nrows() == 0 {
        return (RVector::zeros(0), RMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(b.clone());
    (eig.eigenvalues, eig.eigenvectors)
}

fn gaussian_center(config: &SpaceConfig) -> RVector {
    let r = config.r();
    let alpha = RVector::from_column_slice(config.alpha());
    debug_assert_eq!(alpha.len(), r);
    -(config.lattice().b_inverse() * alpha) * (PI / config.nu())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridOptions {
    pub compact_nodes: usize,
    pub unbounded_nodes: usize,
    pub offset: f64,
    /// `GridTooCoarse` is raised when the refinement error estimate exceeds
    /// this fraction of the Cauchy–Schwarz scale `√(⟨f,f⟩⟨h,h⟩)`.
    pub max_relative_error: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            compact_nodes: DEFAULT_COMPACT_NODES,
            unbounded_nodes: DEFAULT_UNBOUNDED_NODES,
            offset: 0.0,
            max_relative_error: 1e-4,
        }
    }
}

/// Tensor grid on the fundamental domain of a given space.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    r: usize,
    g: usize,
    nu: f64,
    options: GridOptions,
    compact: Rule,
    hermite: Rule,
    y_center: RVector,
    y_map: RMatrix,
    y_jacobian: f64,
    perp_scale: f64,
    hermitian: CMatrix,
    basis: CMatrix,
    /// Relative error on the calibration integrand.
    pub estimated_error: f64,
}

impl QuadratureGrid {
    pub fn node_count(&self) -> usize {
        let (r, p) = (self.r, 2 * (self.g - self.r));
        self.compact.len().pow(r as u32) * self.hermite.len().pow((r + p) as u32)
    }

    pub fn options(&self) -> &GridOptions {
        &self.options
    }

    pub fn compact_rule(&self) -> &Rule {
        &self.compact
    }

    pub fn hermite_rule(&self) -> &Rule {
        &self.hermite
    }

    /// Point and effective weight of node `index`: the weight integrates
    /// `F(u) e^{-νH(u,u)} dλ_ω(u)` when multiplied by `F(point)`.
    pub fn node(&self, index: usize) -> (PointCoordinates, f64) {
        let (r, g) = (self.r, self.g);
        let mut rest = index;
        let mut weight = self.y_jacobian * self.perp_scale.powi(2 * (g - r) as i32);
        let mut gauss_exponent = 0.0;

        let mut x = vec![0.0; r];
        for xj in x.iter_mut() {
            let i = rest % self.compact.len();
            rest /= self.compact.len();
            *xj = self.compact.nodes[i];
            weight *= self.compact.weights[i];
        }
        let mut t = RVector::zeros(r);
        for j in 0..r {
            let i = rest % self.hermite.len();
            rest /= self.hermite.len();
            t[j] = self.hermite.nodes[i];
            weight *= self.hermite.weights[i];
            gauss_exponent += t[j] * t[j];
        }
        let y = &self.y_center + &self.y_map * &t;
        let mut z_perp = Vec::with_capacity(g - r);
        for _ in 0..(g - r) {
            let mut parts = [0.0; 2];
            for p in parts.iter_mut() {
                let i = rest % self.hermite.len();
                rest /= self.hermite.len();
                let s = self.hermite.nodes[i];
                *p = s * self.perp_scale;
                weight *= self.hermite.weights[i];
                gauss_exponent += s * s;
            }
            z_perp.push(Complex64::new(parts[0], parts[1]));
        }
        let z: Vec<Complex64> = (0..r).map(|j| Complex64::new(x[j], y[j])).collect();
        let point = PointCoordinates::new(z, z_perp);

        let ambient = &self.basis * CVector::from_vec(point.full());
        let mut h = 0.0;
        for j in 0..g {
            let mut row = Complex64::new(0.0, 0.0);
            for k in 0..g {
                row += self.hermitian[(j, k)] * ambient[k].conj();
            }
            h += (ambient[j] * row).re;
        }
        (point, weight * (gauss_exponent - self.nu * h).exp())
    }

    /// Same construction with both node counts halved (at least 2).
    pub fn coarsened(&self) -> QuadratureGrid {
        let options = GridOptions {
            compact_nodes: (self.options.compact_nodes / 2).max(2),
            unbounded_nodes: (self.options.unbounded_nodes / 2).max(2),
            ..self.options
        };
        let mut coarse = self.clone();
        coarse.options = options;
        coarse.compact = gauss_legendre(options.compact_nodes).mapped(options.offset, options.offset + 1.0);
        coarse.hermite = gauss_hermite(options.unbounded_nodes);
        coarse
    }
}

/// Builds the tensor grid for `config`, doubling node counts (at most three
/// times) until the calibration integrand
/// `exp(-2ν y·B y + b·y) · |z_perp,1|² e^{-ν|z_perp|²}` is reproduced to
/// `requested_tol` relative error.
pub fn build_grid(
    config: &SpaceConfig,
    requested_tol: f64,
    options: GridOptions,
) -> Result<QuadratureGrid, QuadratureError> {
    let (r, g, nu) = (config.r(), config.g(), config.nu());
    if g > DIMENSION_CAP {
        return Err(QuadratureError::DimensionCapExceeded { g, cap: DIMENSION_CAP });
    }
    let mut options = options;
    if g == DIMENSION_CAP && options.unbounded_nodes == DEFAULT_UNBOUNDED_NODES {
        options.compact_nodes = REDUCED_COMPACT_NODES;
        options.unbounded_nodes = REDUCED_UNBOUNDED_NODES;
    }
    for n in [options.compact_nodes, options.unbounded_nodes] {
        if n < 2 {
            return Err(QuadratureError::InvalidNodeCount(n));
        }
    }

    let (values, vectors) = eigen(config.lattice().b_matrix());
    let mut y_map = vectors;
    let mut y_jacobian = 1.0;
    for j in 0..r {
        let s = 1.0 / (2.0 * nu * values[j]).sqrt();
        y_jacobian *= s;
        for i in 0..r {
            y_map[(i, j)] *= s;
        }
    }
    let lattice = config.lattice();
    let mut grid = QuadratureGrid {
        r,
        g,
        nu,
        options,
        compact: gauss_legendre(options.compact_nodes).mapped(options.offset, options.offset + 1.0),
        hermite: gauss_hermite(options.unbounded_nodes),
        y_center: gaussian_center(config),
        y_map,
        y_jacobian,
        perp_scale: 1.0 / nu.sqrt(),
        hermitian: lattice.space().matrix().clone(),
        basis: lattice.basis_matrix().clone(),
        estimated_error: f64::INFINITY,
    };

    for _ in 0..4 {
        grid.estimated_error = calibration_error(config, &grid)?;
        if grid.estimated_error <= requested_tol {
            return Ok(grid);
        }
        grid.options.compact_nodes *= 2;
        grid.options.unbounded_nodes *= 2;
        grid.compact = gauss_legendre(grid.options.compact_nodes)
            .mapped(grid.options.offset, grid.options.offset + 1.0);
        grid.hermite = gauss_hermite(grid.options.unbounded_nodes);
    }
    Err(QuadratureError::GridTooCoarse { estimated: grid.estimated_error, threshold: requested_tol })
}

fn calibration_error(config: &SpaceConfig, grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    let (r, g, nu) = (config.r(), config.g(), config.nu());
    let b_mat = config.lattice().b_matrix();
    let b_vec: Vec<f64> = (0..r).map(|j| 0.5 + 0.25 * j as f64).collect();
    let b_c = CVector::from_iterator(r, b_vec.iter().map(|&x| Complex64::new(x, 0.0)));
    let a_c = b_mat.map(|x| Complex64::new(x, 0.0));
    let mut exact = gaussian_integral(2.0 * nu, &a_c, &b_c)?.re * (PI / nu).powi((g - r) as i32);
    if g > r {
        exact /= nu;
    }
    // exp(-2ν y·By + b·y) |z_perp,1|² e^{-ν|z_perp|²} divided by the node weight
    // e^{-νH(u,u)}, where H(u,u) = B(x,x) + B(y,y) + |z_perp|².
    let integrand = |u: &PointCoordinates| {
        let y: Vec<f64> = u.z.iter().map(|z| z.im).collect();
        let x: Vec<f64> = u.z.iter().map(|z| z.re).collect();
        let lin: f64 = y.iter().zip(&b_vec).map(|(a, b)| a * b).sum();
        let first = u.z_perp.first().map_or(1.0, |z| z.norm_sqr());
        let expo = nu * (linalg::real_quadratic(b_mat, &x) - linalg::real_quadratic(b_mat, &y)) + lin;
        expo.exp() * first
    };
    let mut acc = CompensatedComplexSum::new();
    for i in 0..grid.node_count() {
        let (u, w) = grid.node(i);
        acc.add(Complex64::new(integrand(&u) * w, 0.0));
    }
    Ok((acc.value().re - exact).abs() / exact.abs())
}

/// Boxed evaluable function on the space.
pub type Evaluable<'a> = dyn Fn(&PointCoordinates) -> Result<Complex64, SpaceError> + Sync + 'a;

/// Gram matrix of a family of functions with a refinement error estimate.
#[derive(Clone, Debug)]
pub struct GramResult {
    /// `⟨f_i, f_j⟩` on the given grid.
    pub matrix: CMatrix,
    /// `|G_fine - G_coarse|` entrywise, with the coarse grid at half the nodes.
    pub error: RMatrix,
}

impl GramResult {
    /// Largest entrywise error relative to `√(G_ii G_jj)`.
    pub fn max_relative_error(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let scale = (self.matrix[(i, i)].re * self.matrix[(j, j)].re).sqrt();
                if scale > 0.0 {
                    worst = worst.max(self.error[(i, j)] / scale);
                }
            }
        }
        worst
    }
}

fn gram_on(grid: &QuadratureGrid, functions: &[&Evaluable<'_>]) -> Result<CMatrix, QuadratureError> {
    let m = functions.len();
    let total = grid.node_count();
    let chunks = total.div_ceil(CHUNK);
    let partials: Result<Vec<Vec<CompensatedComplexSum>>, SpaceError> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![CompensatedComplexSum::new(); m * m];
            let mut values = vec![Complex64::new(0.0, 0.0); m];
            for i in (c * CHUNK)..((c + 1) * CHUNK).min(total) {
                let (u, w) = grid.node(i);
                if w == 0.0 {
                    continue;
                }
                for (slot, f) in values.iter_mut().zip(functions) {
                    *slot = f(&u)?;
                }
                for a in 0..m {
                    let wa = values[a] * w;
                    for b in a..m {
                        acc[a * m + b].add(wa * values[b].conj());
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let partials = partials?;
    let mut total_acc = vec![CompensatedComplexSum::new(); m * m];
    for part in &partials {
        for (t, p) in total_acc.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(CMatrix::from_fn(m, m, |a, b| {
        if a <= b {
            total_acc[a * m + b].value()
        } else {
            total_acc[b * m + a].value().conj()
        }
    }))
}

/// Gram matrix `[⟨f_i, f_j⟩]` on `grid`, with the error estimated against the
/// half-resolution grid.
pub fn gram_matrix(grid: &QuadratureGrid, functions: &[&Evaluable<'_>]) -> Result<GramResult, QuadratureError> {
    let fine = gram_on(grid, functions)?;
    let coarse = gram_on(&grid.coarsened(), functions)?;
    let error = RMatrix::from_fn(fine.nrows(), fine.ncols(), |i, j| (fine[(i, j)] - coarse[(i, j)]).norm());
    Ok(GramResult { matrix: fine, error })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerProduct {
    pub value: Complex64,
    pub error: f64,
    pub norm_f_sq: f64,
    pub norm_h_sq: f64,
}

/// `⟨f, h⟩` over the fundamental domain. Raises `GridTooCoarse` when the
/// refinement estimate exceeds `max_relative_error · √(⟨f,f⟩⟨h,h⟩)`.
pub fn inner_product(
    grid: &QuadratureGrid,
    f: &Evaluable<'_>,
    h: &Evaluable<'_>,
) -> Result<InnerProduct, QuadratureError> {
    let gram = gram_matrix(grid, &[f, h])?;
    let norm_f_sq = gram.matrix[(0, 0)].re;
    let norm_h_sq = gram.matrix[(1, 1)].re;
    let error = gram.error[(0, 1)];
    let threshold = grid.options.max_relative_error * (norm_f_sq * norm_h_sq).sqrt();
    if error > threshold {
        return Err(QuadratureError::GridTooCoarse { estimated: error, threshold });
    }
    Ok(InnerProduct { value: gram.matrix[(0, 1)], error, norm_f_sq, norm_h_sq })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        for d in 0..16u32 {
            let q: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(d as i32)).sum();
            let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d + 1) as f64 };
            assert!((q - exact).abs() < 1e-14, "degree {d}");
        }
        assert!(rule.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn hermite_moments() {
        let rule = gauss_hermite(20);
        let mut moment = PI.sqrt();
        for d in (0..40u32).step_by(2) {
            let q: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(d as i32)).sum();
            assert!((q - moment).abs() < 1e-12 * moment, "degree {d}: {q} vs {moment}");
            moment *= (d + 1) as f64 / 2.0;
        }
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn gaussian_integral_examples() {
        let one = CMatrix::from_element(1, 1, c(1.0, 0.0));
        let v = gaussian_integral(1.0, &one, &CVector::from_element(1, c(0.0, 0.0))).unwrap();
        assert!((v - c(PI.sqrt(), 0.0)).norm() < 1e-15);
        let v = gaussian_integral(1.0, &one, &CVector::from_element(1, c(2.0, 0.0))).unwrap();
        assert!((v.re - PI.sqrt() * 1f64.exp()).abs() < 1e-14);
        assert!((v.re - 4.818_03).abs() < 1e-5);
        let diag = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(4.0, 0.0)]));
        let v = gaussian_integral(2.0, &diag, &CVector::zeros(2)).unwrap();
        assert!((v.re - PI / 4.0).abs() < 1e-15);
        let bad = CMatrix::from_element(1, 1, c(-1.0, 0.3));
        assert_eq!(
            gaussian_integral(1.0, &bad, &CVector::zeros(1)),
            Err(QuadratureError::RealPartNotPositiveDefinite)
        );
    }

    #[test]
    fn adaptive_matches_closed_form() {
        let v = adaptive_integrate(|y| c((-y * y + 2.0 * y).exp(), 0.0), -12.0, 14.0, 1e-14);
        assert!((v.re - PI.sqrt() * 1f64.exp()).abs() < 1e-12);
    }
}
