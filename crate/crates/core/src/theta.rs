//! Riemann theta function with characteristics
//!
//! ```text
//! Θ_{α,β}(z | F) = Σ_{n ∈ Z^r} exp(2πi [ ½ (α+n)·F(α+n) + (α+n)·(z+β) ])
//! ```
//!
//! evaluated by summing over an ellipsoid of lattice points with a certified
//! bound on the omitted tail.
//!
//! With `Y = Im F` and `η = Im z`, the modulus of the `n`-th term is
//! `exp(π η·Y⁻¹η) · exp(-π d(n)²)` where `d(n)² = (n - c)·Y(n - c)` and
//! `c = -α - Y⁻¹η` is the real minimizer of the quadratic part. The index set
//! is `{ n : d(n) ≤ R }`, and for every `θ ∈ (0, 1)`
//!
//! ```text
//! Σ_{d(n) > R} e^{-π d(n)²} ≤ e^{-π(1-θ)R²} Σ_n e^{-πθ λ_min |n - c|²}
//!                          ≤ e^{-π(1-θ)R²} (1 + 1/√(θ λ_min))^r
//! ```
//!
//! using `Y ⪰ λ_min I` and, per coordinate, `Σ_m f(m) ≤ max f + ∫ f` for the
//! unimodal Gaussian `f`. The reported tail bound is the minimum over a fixed
//! grid of `θ`, which keeps it monotone in `R`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, CMatrix, RMatrix, RVector};
use crate::summation::CompensatedComplexSum;

/// Largest admissible truncation radius, measured in the `Im F` metric. In
/// lattice units this is `40 / √λ_min`.
pub const DEFAULT_MAX_RADIUS: f64 = 40.0;

const THETA_GRID: usize = 49;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThetaError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("F is not symmetric: F[{row}][{col}] - F[{col}][{row}] = {defect:e}")]
    NotSymmetric { row: usize, col: usize, defect: f64 },
    #[error("Im F is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    ImaginaryPartNotPositiveDefinite { min_eigenvalue: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("tail bound unreachable: radius {required:.3} needed, limit is {max_radius:.3}")]
    TailBoundUnreachable { required: f64, max_radius: f64 },
}

/// Validated `(F, α, β)`.
#[derive(Clone, Debug)]
pub struct ThetaParameters {
    f: CMatrix,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    im_chol: RMatrix,
    lambda_min: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaOptions {
    /// Absolute bound on `|Θ - S|`.
    pub tol: f64,
    pub max_radius: f64,
}

impl ThetaOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, max_radius: DEFAULT_MAX_RADIUS }
    }

    pub fn with_max_radius(mut self, max_radius: f64) -> Self {
        self.max_radius = max_radius;
        self
    }
}

impl Default for ThetaOptions {
    fn default() -> Self {
        Self::new(1e-14)
    }
}

/// Index set and certified tail for one evaluation point.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationPlan {
    /// Ellipsoid radius in the `Im F` metric.
    pub radius: f64,
    /// Real center `c = -α - (Im F)⁻¹ Im z`.
    pub center: Vec<f64>,
    /// Indices sorted by increasing `d(n)`, ties broken lexicographically.
    pub indices: Vec<Vec<i64>>,
    /// Upper bound on the modulus of the omitted sum.
    pub tail_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub terms: usize,
    pub radius: f64,
}

impl ThetaParameters {
    pub fn new(f: CMatrix, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self, ThetaError> {
        let r = f.nrows();
        if f.ncols() != r {
            return Err(ThetaError::DimensionMismatch { expected: r, found: f.ncols() });
        }
        for v in [&alpha, &beta] {
            if v.len() != r {
                return Err(ThetaError::DimensionMismatch { expected: r, found: v.len() });
            }
        }
        if !f.iter().all(|x| x.is_finite()) || !alpha.iter().chain(&beta).all(|x| x.is_finite()) {
            return Err(ThetaError::NonFinite);
        }
        let scale = f.iter().map(|x| x.norm()).fold(0.0, f64::max);
        for row in 0..r {
            for col in (row + 1)..r {
                let defect = (f[(row, col)] - f[(col, row)]).norm();
                if defect > 1e-10 * scale {
                    return Err(ThetaError::NotSymmetric { row, col, defect });
                }
            }
        }
        let f = (&f + f.transpose()).map(|x| x * 0.5);
        let im_f = f.map(|x| x.im);
        let lambda_min = linalg::min_symmetric_eigenvalue(&im_f);
        let im_chol = match linalg::real_cholesky(&im_f) {
            Ok(l) if lambda_min > 0.0 => l,
            _ => return Err(ThetaError::ImaginaryPartNotPositiveDefinite { min_eigenvalue: lambda_min }),
        };
        Ok(Self { f, alpha, beta, im_chol, lambda_min })
    }

    pub fn dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn f(&self) -> &CMatrix {
        &self.f
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Smallest eigenvalue of `Im F` (`+inf` when `r = 0`).
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Same `F` and `β` with a different `α`.
    pub fn with_alpha(&self, alpha: Vec<f64>) -> Result<Self, ThetaError> {
        Self::new(self.f.clone(), alpha, self.beta.clone())
    }

    fn check_point(&self, z: &[Complex64]) -> Result<(), ThetaError> {
        if z.len() != self.dim() {
            return Err(ThetaError::DimensionMismatch { expected: self.dim(), found: z.len() });
        }
        if !z.iter().all(|x| x.is_finite()) {
            return Err(ThetaError::NonFinite);
        }
        Ok(())
    }

    /// Real center of the ellipsoid and `ln` of the largest possible term
    /// modulus, `π η·Y⁻¹η`.
    pub fn center(&self, z: &[Complex64]) -> (Vec<f64>, f64) {
        let r = self.dim();
        let eta = RVector::from_iterator(r, z.iter().map(|x| x.im));
        let shift = linalg::cholesky_solve(&self.im_chol, &eta);
        let center = (0..r).map(|i| -self.alpha[i] - shift[i]).collect();
        (center, PI * eta.dot(&shift))
    }

    /// `ln` of the certified tail bound for radius `radius` around `z`.
    fn log_tail_bound(&self, log_peak: f64, radius: f64) -> f64 {
        let r = self.dim() as f64;
        theta_grid()
            .map(|t| log_peak + r * (1.0 / (t * self.lambda_min).sqrt()).ln_1p() - PI * (1.0 - t) * radius * radius)
            .fold(f64::INFINITY, f64::min)
    }

    /// Certified bound on the omitted sum for the ellipsoid of radius `radius`.
    pub fn tail_bound(&self, z: &[Complex64], radius: f64) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let (_, log_peak) = self.center(z);
        self.log_tail_bound(log_peak, radius).exp()
    }

    /// Smallest radius (over the θ grid) whose certified tail is below `tol`.
    pub fn required_radius(&self, z: &[Complex64], tol: f64) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let (_, log_peak) = self.center(z);
        let r = self.dim() as f64;
        theta_grid()
            .map(|t| {
                let num = log_peak + r * (1.0 / (t * self.lambda_min).sqrt()).ln_1p() - tol.ln();
                (num.max(0.0) / (PI * (1.0 - t))).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Builds the truncation plan meeting `opts.tol`.
    pub fn plan(&self, z: &[Complex64], opts: &ThetaOptions) -> Result<TruncationPlan, ThetaError> {
        self.check_point(z)?;
        if !opts.tol.is_finite() || opts.tol <= 0.0 {
            return Err(ThetaError::InvalidTolerance(opts.tol));
        }
        let required = self.required_radius(z, opts.tol);
        if required > opts.max_radius {
            return Err(ThetaError::TailBoundUnreachable { required, max_radius: opts.max_radius });
        }
        // a relative margin absorbs rounding in the bound at exactly `required`
        Ok(self.plan_with_radius(z, required * (1.0 + 1e-9)))
    }

    /// Index set for an explicit radius.
    pub fn plan_with_radius(&self, z: &[Complex64], radius: f64) -> TruncationPlan {
        let r = self.dim();
        if r == 0 {
            return TruncationPlan { radius: 0.0, center: vec![], indices: vec![vec![]], tail_bound: 0.0 };
        }
        let (center, log_peak) = self.center(z);
        let mut found = Vec::new();
        let mut n = vec![0i64; r];
        enumerate_ellipsoid(&self.im_chol, &center, radius * radius, r - 1, 0.0, &mut n, &mut found);
        found.sort_by(|(da, na), (db, nb)| match da.total_cmp(db) {
            Ordering::Equal => na.cmp(nb),
            other => other,
        });
        TruncationPlan {
            radius,
            center,
            indices: found.into_iter().map(|(_, n)| n).collect(),
            tail_bound: self.log_tail_bound(log_peak, radius).exp(),
        }
    }

    /// The `n`-th term of the series at `z`.
    pub fn term(&self, n: &[i64], z: &[Complex64]) -> Complex64 {
        let r = self.dim();
        let x: Vec<f64> = (0..r).map(|i| self.alpha[i] + n[i] as f64).collect();
        let mut quad = Complex64::new(0.0, 0.0);
        for i in 0..r {
            let row: Complex64 = x.iter().enumerate().map(|(j, &xj)| self.f[(i, j)] * xj).sum();
            quad += row * x[i];
        }
        let mut lin = Complex64::new(0.0, 0.0);
        for i in 0..r {
            lin += (z[i] + self.beta[i]) * x[i];
        }
        let exponent = (quad * 0.5 + lin) * Complex64::new(0.0, 2.0 * PI);
        exponent.exp()
    }

    /// Sums the terms of `plan` in plan order.
    pub fn sum_plan(&self, z: &[Complex64], plan: &TruncationPlan) -> Complex64 {
        let mut acc = CompensatedComplexSum::new();
        for n in &plan.indices {
            acc.add(self.term(n, z));
        }
        acc.value()
    }

    pub fn evaluate(&self, z: &[Complex64], opts: &ThetaOptions) -> Result<ThetaValue, ThetaError> {
        let plan = self.plan(z, opts)?;
        Ok(ThetaValue {
            value: self.sum_plan(z, &plan),
            tail_bound: plan.tail_bound,
            terms: plan.indices.len(),
            radius: plan.radius,
        })
    }
}

/// `Θ_{α,β}(z | F)` with `|Θ - value| ≤ tail_bound ≤ opts.tol`.
pub fn theta_eval(params: &ThetaParameters, z: &[Complex64], opts: &ThetaOptions) -> Result<ThetaValue, ThetaError> {
    params.evaluate(z, opts)
}

/// Self-test of the two quasi-periodicity relations
///
/// ```text
/// Θ(z + m)    = e^{2πi α·m} Θ(z)
/// Θ(z + F m2) = e^{-2πi (½ m2·F m2 + m2·(z+β))} Θ(z)
/// ```
///
/// Returns the larger of the two defects. Each side is evaluated so that the
/// defect is at most `2·tol` up to rounding.
pub fn theta_quasiperiodicity_defect(
    params: &ThetaParameters,
    z: &[Complex64],
    m: &[i64],
    m2: &[i64],
    opts: &ThetaOptions,
) -> Result<f64, ThetaError> {
    let r = params.dim();
    for v in [m, m2] {
        if v.len() != r {
            return Err(ThetaError::DimensionMismatch { expected: r, found: v.len() });
        }
    }
    let base = params.evaluate(z, opts)?.value;

    let shifted: Vec<Complex64> = z.iter().zip(m).map(|(zi, &mi)| zi + mi as f64).collect();
    let mut phase = 0.0;
    for (a, &mi) in params.alpha().iter().zip(m) {
        let t = a * mi as f64;
        phase += t - t.round();
    }
    let first = (params.evaluate(&shifted, opts)?.value - Complex64::from_polar(1.0, 2.0 * PI * phase) * base).norm();

    let fm: Vec<Complex64> = (0..r)
        .map(|i| (0..r).map(|j| params.f()[(i, j)] * m2[j] as f64).sum())
        .collect();
    let shifted2: Vec<Complex64> = z.iter().zip(&fm).map(|(a, b)| a + b).collect();
    let mut expo = Complex64::new(0.0, 0.0);
    for i in 0..r {
        expo += fm[i] * (0.5 * m2[i] as f64) + (z[i] + params.beta()[i]) * m2[i] as f64;
    }
    let factor = (expo * Complex64::new(0.0, -2.0 * PI)).exp();
    let scale = factor.norm().max(1.0);
    let base_scaled = params.evaluate(z, &ThetaOptions { tol: opts.tol / scale, ..*opts })?.value;
    let second = (params.evaluate(&shifted2, opts)?.value - factor * base_scaled).norm();

    Ok(first.max(second))
}

fn theta_grid() -> impl Iterator<Item = f64> {
    (1..=THETA_GRID).map(|i| i as f64 / (THETA_GRID + 1) as f64)
}

/// Depth-first enumeration of `{ n : ‖Lᵀ(n - c)‖² ≤ r2 }`, last coordinate
/// first, for the lower Cholesky factor `L`.
fn enumerate_ellipsoid(
    l: &RMatrix,
    c: &[f64],
    r2: f64,
    i: usize,
    partial: f64,
    n: &mut Vec<i64>,
    out: &mut Vec<(f64, Vec<i64>)>,
) {
    let r = c.len();
    let mut s = 0.0;
    for j in (i + 1)..r {
        s += l[(j, i)] * (n[j] as f64 - c[j]);
    }
    let uii = l[(i, i)];
    let rem = r2 - partial;
    if rem < 0.0 {
        return;
    }
    let half = rem.sqrt() / uii;
    let mid = c[i] - s / uii;
    let lo = (mid - half).ceil() as i64;
    let hi = (mid + half).floor() as i64;
    for v in lo..=hi {
        let t = uii * (v as f64 - c[i]) + s;
        let p = partial + t * t;
        if p > r2 {
            continue;
        }
        n[i] = v;
        if i == 0 {
            out.push((p, n.clone()));
        } else {
            enumerate_ellipsoid(l, c, r2, i - 1, p, n, out);
        }
    }
    n[i] = 0;
}
