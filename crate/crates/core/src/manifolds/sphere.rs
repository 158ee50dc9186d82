use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ClassTag, GeodesicRecord, ManifoldPoint, COINCIDENCE_TOL};
use crate::error::{Error, Result};

/// The round 2-sphere `{‖v‖ = R} ⊂ ℝ³`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SphereRepr", into = "SphereRepr")]
pub struct RoundSphere {
    radius: f64,
}

#[derive(Serialize, Deserialize)]
struct SphereRepr {
    radius: f64,
}

impl TryFrom<SphereRepr> for RoundSphere {
    type Error = Error;
    fn try_from(r: SphereRepr) -> Result<Self> {
        RoundSphere::new(r.radius)
    }
}

impl From<RoundSphere> for SphereRepr {
    fn from(s: RoundSphere) -> Self {
        SphereRepr { radius: s.radius }
    }
}

impl RoundSphere {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidMetric(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(RoundSphere { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn point(&self, raw: &[f64]) -> Result<ManifoldPoint> {
        if raw.len() != 3 {
            return Err(Error::arg(format!("sphere point needs 3 coordinates, got {}", raw.len())));
        }
        let norm = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::arg("sphere point direction must be a non-zero finite vector"));
        }
        Ok(ManifoldPoint(raw.iter().map(|v| v / norm).collect()))
    }

    /// The north pole and the point at polar angle `theta` in the xz-plane.
    pub fn polar_pair(&self, theta: f64) -> Result<(ManifoldPoint, ManifoldPoint)> {
        Ok((self.point(&[0.0, 0.0, 1.0])?, self.point(&[theta.sin(), 0.0, theta.cos()])?))
    }

    /// Angle between the unit directions of `x` and `y`.
    pub fn angle(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
        let (a, b) = (x.coords(), y.coords());
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let cross = cross(a, b);
        let cn = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        cn.atan2(dot)
    }

    pub fn check_nonconjugate(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> bool {
        let (a, b) = (x.coords(), y.coords());
        let diff = ((0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>()).sqrt();
        let anti = ((0..3).map(|i| (a[i] + b[i]).powi(2)).sum::<f64>()).sqrt();
        diff >= COINCIDENCE_TOL && anti >= COINCIDENCE_TOL
    }

    pub fn distance(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
        let diff = ((0..3).map(|i| (x.coords()[i] - y.coords()[i]).powi(2)).sum::<f64>()).sqrt();
        if diff < COINCIDENCE_TOL {
            return Err(Error::Degenerate("x and y coincide on the sphere".into()));
        }
        Ok(self.arc_length(self.angle(x, y), 0))
    }

    /// Length of the `m`-th geodesic between points at angle `theta`:
    /// `R(2πj + θ)` for `m = 2j`, `R(2π(j+1) − θ)` for `m = 2j + 1`.
    pub fn arc_length(&self, theta: f64, m: u32) -> f64 {
        let j = (m / 2) as f64;
        if m % 2 == 0 {
            self.radius * (2.0 * PI * j + theta)
        } else {
            self.radius * (2.0 * PI * (j + 1.0) - theta)
        }
    }

    /// Number of conjugate points `kπR` (k ≥ 1) strictly inside a geodesic of this length.
    pub fn conjugate_count(&self, length: f64) -> u32 {
        let mut k = 1u32;
        while (k as f64) * PI * self.radius < length {
            k += 1;
        }
        k - 1
    }

    pub fn geodesic_spectrum(
        &self,
        x: &ManifoldPoint,
        y: &ManifoldPoint,
        cutoff: f64,
    ) -> Result<Vec<GeodesicRecord>> {
        if !self.check_nonconjugate(x, y) {
            return Err(Error::NonMorse(
                "y equals x or its antipode, so x and y are conjugate along every geodesic".into(),
            ));
        }
        let theta = self.angle(x, y);
        let mut out = Vec::new();
        for m in 0u32.. {
            let length = self.arc_length(theta, m);
            if !(length < cutoff) {
                break;
            }
            out.push(GeodesicRecord {
                length,
                morse_index: self.conjugate_count(length),
                class_tag: ClassTag::Wrap(m),
            });
        }
        Ok(out)
    }
}

pub(crate) fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
