//! Theta functions and reproducing-kernel Fock spaces of quasi-periodic
//! functions on `C^g` attached to an isotropic lattice of rank `r`.
//!
//! * [`geometry`]: hermitian spaces, isotropic lattices, characters, the
//!   Riemann–Dirichlet quasi-periodicity check.
//! * [`theta`]: certified truncation of Riemann theta functions with characteristics.
//! * [`space`]: orthogonal basis, norms, reproducing kernel and its checks.
//! * [`quadrature`]: an independent numerical oracle for inner products.

pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod space;
pub mod summation;
pub mod theta;

pub use geometry::{Character, GeometryError, HermitianSpace, IsotropicLattice, PointCoordinates};
pub use quadrature::{QuadratureError, QuadratureGrid};
pub use space::{BasisIndex, CoefficientField, SpaceConfig, SpaceError};
pub use theta::{ThetaError, ThetaOptions, ThetaParameters, ThetaValue};
