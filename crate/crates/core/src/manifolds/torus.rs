use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{ClassTag, GeodesicRecord, ManifoldPoint, COINCIDENCE_TOL};
use crate::error::{Error, Result};

/// `ℝⁿ/ℤⁿ` with a constant symmetric positive-definite metric `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TorusRepr", into = "TorusRepr")]
pub struct FlatTorus {
    metric: Vec<Vec<f64>>,
    inverse: Vec<Vec<f64>>,
    lambda_min: f64,
    lambda_max: f64,
}

#[derive(Serialize, Deserialize)]
struct TorusRepr {
    metric: Vec<Vec<f64>>,
}

impl TryFrom<TorusRepr> for FlatTorus {
    type Error = Error;
    fn try_from(r: TorusRepr) -> Result<Self> {
        FlatTorus::new(r.metric)
    }
}

impl From<FlatTorus> for TorusRepr {
    fn from(t: FlatTorus) -> Self {
        TorusRepr { metric: t.metric }
    }
}

impl FlatTorus {
    pub fn new(metric: Vec<Vec<f64>>) -> Result<Self> {
        let n = metric.len();
        if n == 0 || metric.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidMetric("metric must be a non-empty square matrix".into()));
        }
        if metric.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMetric("metric entries must be finite".into()));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (metric[i][j], metric[j][i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidMetric(format!("metric is not symmetric at ({i},{j})")));
                }
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| metric[i][j]);
        let eig = SymmetricEigen::new(m.clone());
        let lambda_min = eig.eigenvalues.min();
        let lambda_max = eig.eigenvalues.max();
        if !(lambda_min > 0.0) {
            return Err(Error::InvalidMetric(format!(
                "metric is not positive definite (smallest eigenvalue {lambda_min})"
            )));
        }
        let inv = m.try_inverse().ok_or_else(|| Error::InvalidMetric("metric is singular".into()))?;
        let inverse = (0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect();
        Ok(FlatTorus {
            metric,
            inverse,
            lambda_min,
            lambda_max,
        })
    }

    pub fn standard(n: usize) -> Self {
        let metric = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        FlatTorus::new(metric).expect("identity metric is valid")
    }

    pub fn dim(&self) -> usize {
        self.metric.len()
    }

    pub fn metric(&self) -> &[Vec<f64>] {
        &self.metric
    }

    /// Dual metric `G⁻¹`, which measures covectors.
    pub fn inverse_metric(&self) -> &[Vec<f64>] {
        &self.inverse
    }

    pub fn condition_number(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn point(&self, raw: &[f64]) -> Result<ManifoldPoint> {
        if raw.len() != self.dim() {
            return Err(Error::arg(format!(
                "torus point needs {} coordinates, got {}",
                self.dim(),
                raw.len()
            )));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("torus coordinates must be finite"));
        }
        Ok(ManifoldPoint(raw.iter().map(|&v| reduce_mod1(v)).collect()))
    }

    /// `‖w‖_G`.
    pub fn norm(&self, w: &[f64]) -> f64 {
        quad_form(&self.metric, w).sqrt()
    }

    /// `sqrt(pᵀ G⁻¹ p)`, the norm of a covector.
    pub fn dual_norm(&self, p: &[f64]) -> f64 {
        quad_form(&self.inverse, p).sqrt()
    }

    /// Length of the straight geodesic from `x` to `y + k` in the universal cover.
    pub fn lift_length(&self, x: &[f64], y: &[f64], k: &[i64]) -> f64 {
        let w: Vec<f64> = (0..self.dim()).map(|i| y[i] - x[i] + k[i] as f64).collect();
        self.norm(&w)
    }

    /// Distance on the torus between two arbitrary lifts.
    pub fn torus_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let v: Vec<f64> = a.iter().zip(b).map(|(a, b)| b - a).collect();
        let base: Vec<f64> = v.iter().map(|x| x - x.round()).collect();
        let zero = vec![0.0; self.dim()];
        let bound = self.norm(&base);
        let window = self.window(&base, bound);
        let mut best = f64::INFINITY;
        for_each_lattice(self.dim(), window, |k| {
            best = best.min(self.lift_length(&zero, &base, k));
        });
        best
    }

    /// Window half-width guaranteeing every `k` with `‖v + k‖_G < cutoff` is visited.
    fn window(&self, v: &[f64], cutoff: f64) -> i64 {
        let euclid = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (euclid + cutoff / self.lambda_min.sqrt()).ceil() as i64
    }

    pub fn distance(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
        self.check_points(x, y)?;
        let v = self.difference(x, y);
        let euclid = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let zero = vec![0i64; self.dim()];
        let own = self.lift_length(x.coords(), y.coords(), &zero);
        let window = ((self.condition_number() * (1.0 + euclid)).ceil() as i64).max(self.window(&v, own));
        let mut best = f64::INFINITY;
        for_each_lattice(self.dim(), window, |k| {
            best = best.min(self.lift_length(x.coords(), y.coords(), k));
        });
        Ok(best)
    }

    pub fn geodesic_spectrum(
        &self,
        x: &ManifoldPoint,
        y: &ManifoldPoint,
        cutoff: f64,
    ) -> Result<Vec<GeodesicRecord>> {
        self.check_points(x, y)?;
        let v = self.difference(x, y);
        let window = self.window(&v, cutoff.max(0.0));
        let mut out = Vec::new();
        for_each_lattice(self.dim(), window, |k| {
            let length = self.lift_length(x.coords(), y.coords(), k);
            if length < cutoff {
                out.push(GeodesicRecord {
                    length,
                    morse_index: 0,
                    class_tag: ClassTag::Lattice(k.to_vec()),
                });
            }
        });
        out.sort_by(|a, b| {
            a.length.total_cmp(&b.length).then_with(|| match (&a.class_tag, &b.class_tag) {
                (ClassTag::Lattice(p), ClassTag::Lattice(q)) => p.cmp(q),
                _ => std::cmp::Ordering::Equal,
            })
        });
        Ok(out)
    }

    fn difference(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Vec<f64> {
        x.coords().iter().zip(y.coords()).map(|(a, b)| b - a).collect()
    }

    fn check_points(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<()> {
        if x.coords().len() != self.dim() || y.coords().len() != self.dim() {
            return Err(Error::arg("point dimension does not match the torus"));
        }
        let sep = self.torus_distance(x.coords(), y.coords());
        if sep < COINCIDENCE_TOL {
            return Err(Error::Degenerate(format!(
                "x and y coincide on the torus (separation {sep:e})"
            )));
        }
        Ok(())
    }
}

pub(crate) fn reduce_mod1(v: f64) -> f64 {
    let r = v - v.floor();
    // v slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

pub(crate) fn quad_form(m: &[Vec<f64>], w: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, row) in m.iter().enumerate() {
        for (j, g) in row.iter().enumerate() {
            s += g * w[i] * w[j];
        }
    }
    s
}

/// Visits every `k ∈ ℤⁿ` with `‖k‖_∞ ≤ window` in lexicographic order.
pub(crate) fn for_each_lattice(n: usize, window: i64, mut f: impl FnMut(&[i64])) {
    let mut k = vec![-window; n];
    loop {
        f(&k);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if k[i] < window {
                k[i] += 1;
                break;
            }
            k[i] = -window;
        }
    }
}
