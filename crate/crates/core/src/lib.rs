//! Numerical laboratory for interlinking of cotangent fibers.
//!
//! The pipeline runs from Riemannian model geometries ([`manifolds`]) through the
//! filtered path-space Morse complex and its barcode ([`wfh`], [`persistence`]) to
//! Poisson-bracket lower bounds and interlinking constants ([`bounds`]). Those
//! predictions are then checked against Hamiltonian dynamics on `T*Tⁿ`
//! ([`dynamics`]) and against explicit admissible function pairs ([`pbopt`]).

pub mod error;
pub mod manifolds;
pub mod persistence;
pub mod wfh;
pub mod bounds;
pub mod spline;
pub mod dynamics;
pub mod pbopt;

pub use error::{Error, ErrorKind, Result};
