//! Problem files: a TOML description of `(H, Γ_r, χ_α, ν)`.
//!
//! ```toml
//! g = 2
//! r = 1
//! nu = 3.141592653589793
//! H = [[[1.0, 0.0], [0.0, 0.0]],
//!      [[0.0, 0.0], [1.0, 0.0]]]
//! omegas = [[[1.0, 0.0], [0.0, 0.0]]]
//! alpha = [0.25]
//!
//! [tolerances]
//! form = 1e-10
//! ```

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thetafock::geometry::DEFAULT_FORM_TOLERANCE;
use thetafock::linalg::{CMatrix, CVector};
use thetafock::{Character, GeometryError, HermitianSpace, IsotropicLattice, SpaceConfig, SpaceError};

use crate::CliError;

/// Complex number encoded as `[re, im]`.
pub type Pair = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub g: usize,
    pub r: usize,
    pub nu: f64,
    #[serde(rename = "H")]
    pub h: Vec<Vec<Pair>>,
    #[serde(default)]
    pub omegas: Vec<Vec<Pair>>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance for hermitian symmetry and isotropy.
    #[serde(default = "default_form")]
    pub form: f64,
    /// Default absolute tolerance for theta and kernel evaluation.
    #[serde(default = "default_eval")]
    pub eval: f64,
}

fn default_form() -> f64 {
    DEFAULT_FORM_TOLERANCE
}

fn default_eval() -> f64 {
    1e-12
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { form: default_form(), eval: default_eval() }
    }
}

/// Structured reason a problem does not describe a valid space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    /// Name of the failing invariant, e.g. `isotropy`.
    pub invariant: String,
    pub message: String,
}

impl Diagnostic {
    fn new(invariant: &str, message: impl Into<String>) -> Self {
        Self { invariant: invariant.to_string(), message: message.into() }
    }
}

pub fn to_complex(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| parse_error(text, "", &e))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            parse_error(text, &field, e.inner())
        })
    }

    /// SHA-256 of the canonical JSON encoding of the parsed problem.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("problem serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Shape checks that precede any numerical validation.
    fn check_shape(&self) -> Result<(), Diagnostic> {
        if self.h.len() != self.g || self.h.iter().any(|row| row.len() != self.g) {
            return Err(Diagnostic::new("shape", format!("H must be {0}x{0}", self.g)));
        }
        if self.omegas.len() != self.r {
            return Err(Diagnostic::new("shape", format!("expected r = {} generators, found {}", self.r, self.omegas.len())));
        }
        if let Some(j) = self.omegas.iter().position(|w| w.len() != self.g) {
            return Err(Diagnostic::new("shape", format!("omegas[{j}] must have length g = {}", self.g)));
        }
        if self.alpha.len() != self.r {
            return Err(Diagnostic::new("shape", format!("alpha must have length r = {}", self.r)));
        }
        Ok(())
    }

    pub fn space(&self) -> Result<HermitianSpace, Diagnostic> {
        self.check_shape()?;
        let h = CMatrix::from_fn(self.g, self.g, |i, j| to_complex(&self.h[i][j]));
        HermitianSpace::with_tolerance(h, self.tolerances.form).map_err(geometry_diagnostic)
    }

    pub fn generators(&self) -> Vec<CVector> {
        self.omegas
            .iter()
            .map(|w| CVector::from_iterator(w.len(), w.iter().map(to_complex)))
            .collect()
    }

    pub fn lattice(&self) -> Result<IsotropicLattice, Diagnostic> {
        let space = self.space()?;
        IsotropicLattice::new(space, self.generators()).map_err(geometry_diagnostic)
    }

    pub fn config(&self) -> Result<SpaceConfig, Diagnostic> {
        let lattice = self.lattice()?;
        SpaceConfig::new(lattice, Character::new(&self.alpha), self.nu).map_err(|e| match e {
            SpaceError::InvalidNu(_) => Diagnostic::new("nu_positive", e.to_string()),
            SpaceError::Geometry(g) => geometry_diagnostic(g),
            other => Diagnostic::new("space", other.to_string()),
        })
    }
}

pub fn geometry_diagnostic(e: GeometryError) -> Diagnostic {
    let invariant = match &e {
        GeometryError::NotSquare { .. } | GeometryError::DimensionMismatch { .. } | GeometryError::EmptySpace => "shape",
        GeometryError::NonFinite { .. } => "finite",
        GeometryError::NotHermitian { .. } => "hermitian",
        GeometryError::NotPositiveDefinite { .. } => "positive_definite",
        GeometryError::RankExceedsG { .. } => "rank",
        GeometryError::NotIndependent { .. } => "independence",
        GeometryError::NotIsotropic { .. } => "isotropy",
        GeometryError::FormNotPositiveDefinite { .. } => "b_positive_definite",
        GeometryError::SingularBasis => "basis",
        GeometryError::NonUnitModulus { .. } => "unit_modulus",
    };
    Diagnostic::new(invariant, e.to_string())
}

fn parse_error(text: &str, field: &str, e: &toml::de::Error) -> CliError {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    let message = e.message().trim().to_string();
    CliError::Parse { line, field: field.to_string(), message }
}
