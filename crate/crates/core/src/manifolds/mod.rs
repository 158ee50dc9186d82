//! Model Riemannian manifolds with closed-form geodesic spectra.
//!
//! Two models ship: flat tori `ℝⁿ/ℤⁿ` with a constant metric and the round
//! 2-sphere. Both have every geodesic between two points in closed form, and
//! both are independently reachable through [`shoot_geodesic_bvp`].

mod shooting;
mod sphere;
mod torus;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use shooting::{shoot_geodesic_bvp, ShootConfig};
pub use sphere::RoundSphere;
pub use torus::FlatTorus;
pub(crate) use shooting::simpson;
pub(crate) use torus::reduce_mod1;

/// Points closer than this are treated as coincident (or antipodal on the sphere).
pub const COINCIDENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Manifold {
    Torus(FlatTorus),
    Sphere(RoundSphere),
}

/// A point of a model manifold: torus coordinates in `[0,1)ⁿ` or a unit direction in `ℝ³`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ManifoldPoint(Vec<f64>);

impl ManifoldPoint {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// Homotopy-class label of a geodesic: the lattice vector `k` of a torus geodesic
/// from `x` to `y + k`, or the wrap index `m` of a sphere geodesic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassTag {
    Lattice(Vec<i64>),
    Wrap(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicRecord {
    pub length: f64,
    #[serde(rename = "index")]
    pub morse_index: u32,
    #[serde(rename = "class")]
    pub class_tag: ClassTag,
}

impl Manifold {
    pub fn torus(metric: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Manifold::Torus(FlatTorus::new(metric)?))
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        Ok(Manifold::Sphere(RoundSphere::new(radius)?))
    }

    /// Short human-readable identifier (`t1`, `t2`, `s2(R=1)`, ...).
    pub fn id(&self) -> String {
        match self {
            Manifold::Torus(t) => format!("t{}", t.dim()),
            Manifold::Sphere(s) => format!("s2(R={})", s.radius()),
        }
    }

    /// Normalizes raw coordinates into a point of this manifold.
    pub fn point(&self, raw: &[f64]) -> Result<ManifoldPoint> {
        match self {
            Manifold::Torus(t) => t.point(raw),
            Manifold::Sphere(s) => s.point(raw),
        }
    }

    pub fn distance(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
        match self {
            Manifold::Torus(t) => t.distance(x, y),
            Manifold::Sphere(s) => s.distance(x, y),
        }
    }

    /// Every geodesic from `x` to `y` shorter than `cutoff`, ascending by length.
    pub fn geodesic_spectrum(
        &self,
        x: &ManifoldPoint,
        y: &ManifoldPoint,
        cutoff: f64,
    ) -> Result<Vec<GeodesicRecord>> {
        if !cutoff.is_finite() {
            return Err(Error::arg(format!("cutoff must be finite, got {cutoff}")));
        }
        match self {
            Manifold::Torus(t) => t.geodesic_spectrum(x, y, cutoff),
            Manifold::Sphere(s) => s.geodesic_spectrum(x, y, cutoff),
        }
    }

    /// Whether `x` and `y` are non-conjugate, so that the energy functional on
    /// paths from `x` to `y` is Morse.
    pub fn check_nonconjugate(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> bool {
        match self {
            Manifold::Torus(_) => true,
            Manifold::Sphere(s) => s.check_nonconjugate(x, y),
        }
    }
}

/// Serializes a spectrum as `[{"length", "index", "class"}, ...]`.
pub fn spectrum_json(records: &[GeodesicRecord]) -> String {
    serde_json::to_string(records).expect("spectrum serializes")
}
