use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::FlatTorus;
use crate::spline::MonotoneSpline;

/// A smooth function on `T*Tⁿ` with analytic gradient, in coordinates `(q, p)`.
pub trait PhaseFunction: Sync {
    fn dim(&self) -> usize;
    fn value(&self, q: &[f64], p: &[f64]) -> f64;
    /// Writes `∂/∂q` into `dq` and `∂/∂p` into `dp`.
    fn gradient(&self, q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]);
}

/// Radial part `h(r)`, `r = |p|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    /// `coef · r^exponent` with `exponent = 0` or `exponent ≥ 1`.
    Power { coef: f64, exponent: f64 },
    Spline(MonotoneSpline),
}

impl RadialProfile {
    pub fn validate(&self) -> Result<()> {
        if let RadialProfile::Power { coef, exponent } = *self {
            if !(coef >= 0.0) || !coef.is_finite() {
                return Err(Error::arg(format!("power profile coefficient must be >= 0, got {coef}")));
            }
            if !(exponent == 0.0 || (exponent >= 1.0 && exponent.is_finite())) {
                return Err(Error::arg(format!("power profile exponent must be 0 or >= 1, got {exponent}")));
            }
        }
        Ok(())
    }

    /// `(h(r), h′(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        match self {
            RadialProfile::Power { coef, exponent } => {
                if *exponent == 0.0 {
                    (*coef, 0.0)
                } else if *exponent == 1.0 {
                    (coef * r, *coef)
                } else {
                    (coef * r.powf(*exponent), coef * exponent * r.powf(exponent - 1.0))
                }
            }
            RadialProfile::Spline(s) => {
                let (h, dh, _) = s.eval(r);
                (h, dh)
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// `max h′` on `[lo, hi]`.
    pub fn max_slope(&self, lo: f64, hi: f64) -> f64 {
        match self {
            // h′ is nondecreasing for exponent ≥ 1
            RadialProfile::Power { .. } => self.eval(hi).1,
            RadialProfile::Spline(s) => s.max_slope(lo, hi),
        }
    }
}

/// `cos · cos(2π k·q) + sin · sin(2π k·q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularTerm {
    pub wave: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// `β(r) = (1 − u²)³` for `u = (r − center)/width` inside `|u| < 1`, zero outside. C².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
}

impl Bump {
    /// `(β(r), β′(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let u = (r - self.center) / self.width;
        if u.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let s = 1.0 - u * u;
        (s * s * s, -6.0 * u * s * s / self.width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum HamiltonianSpec {
    /// `H = h(|p|)`.
    Radial { profile: RadialProfile },
    /// `H = h(|p|) + eps · A(q) · β(|p|)` with `A` a trigonometric polynomial.
    RadialPerturbed {
        profile: RadialProfile,
        eps: f64,
        angular: Vec<AngularTerm>,
        bump: Bump,
    },
}

impl HamiltonianSpec {
    pub fn radial(profile: RadialProfile) -> Self {
        HamiltonianSpec::Radial { profile }
    }

    pub fn profile(&self) -> &RadialProfile {
        match self {
            HamiltonianSpec::Radial { profile } | HamiltonianSpec::RadialPerturbed { profile, .. } => profile,
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, HamiltonianSpec::Radial { .. })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.profile().validate()?;
        if let HamiltonianSpec::RadialPerturbed { eps, angular, bump, .. } = self {
            if !eps.is_finite() {
                return Err(Error::arg("perturbation size must be finite"));
            }
            if !(bump.width > 0.0 && bump.width.is_finite() && bump.center.is_finite()) {
                return Err(Error::arg("bump needs a finite center and positive width"));
            }
            for t in angular {
                if t.wave.len() != n {
                    return Err(Error::arg(format!(
                        "angular wave vector has length {}, expected {n}",
                        t.wave.len()
                    )));
                }
                if !t.cos.is_finite() || !t.sin.is_finite() {
                    return Err(Error::arg("angular coefficients must be finite"));
                }
            }
        }
        Ok(())
    }

    /// `max |A(q)|` bound `Σ |cos| + |sin|`.
    pub fn angular_bound(&self) -> f64 {
        match self {
            HamiltonianSpec::Radial { .. } => 0.0,
            HamiltonianSpec::RadialPerturbed { angular, .. } => {
                angular.iter().map(|t| t.cos.abs() + t.sin.abs()).sum()
            }
        }
    }
}

/// A Hamiltonian spec bound to a flat torus metric, ready for evaluation.
#[derive(Debug, Clone)]
pub struct TorusHamiltonian {
    spec: HamiltonianSpec,
    torus: FlatTorus,
    n: usize,
    ginv: Vec<f64>,
    chol: Vec<f64>,
}

impl TorusHamiltonian {
    pub fn new(spec: HamiltonianSpec, torus: &FlatTorus) -> Result<Self> {
        let n = torus.dim();
        spec.validate(n)?;
        let ginv = torus.inverse_metric().iter().flatten().copied().collect();
        let g = DMatrix::from_fn(n, n, |i, j| torus.metric()[i][j]);
        let l = g
            .cholesky()
            .ok_or_else(|| Error::InvalidMetric("metric is not positive definite".into()))?
            .l();
        let chol = (0..n * n).map(|k| l[(k / n, k % n)]).collect();
        Ok(TorusHamiltonian {
            spec,
            torus: torus.clone(),
            n,
            ginv,
            chol,
        })
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn torus(&self) -> &FlatTorus {
        &self.torus
    }

    /// `G⁻¹p`.
    pub fn raise(&self, p: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            out[i] = (0..self.n).map(|j| self.ginv[i * self.n + j] * p[j]).sum();
        }
    }

    /// `|p| = sqrt(pᵀG⁻¹p)`.
    pub fn dual_norm(&self, p: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += p[i] * self.ginv[i * self.n + j] * p[j];
            }
        }
        s.max(0.0).sqrt()
    }

    /// The covector `r · L u` of dual norm `r · |u|`, where `G = L Lᵀ`.
    pub fn covector(&self, r: f64, u: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| r * (0..=i).map(|j| self.chol[i * self.n + j] * u[j]).sum::<f64>())
            .collect()
    }

    fn angular(&self, q: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let HamiltonianSpec::RadialPerturbed { angular, .. } = &self.spec else {
            return 0.0;
        };
        let mut value = 0.0;
        let mut grad = grad;
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for t in angular {
            let phase = 2.0 * PI * t.wave.iter().zip(q).map(|(k, x)| *k as f64 * x).sum::<f64>();
            let (s, c) = phase.sin_cos();
            value += t.cos * c + t.sin * s;
            if let Some(g) = grad.as_deref_mut() {
                let d = 2.0 * PI * (-t.cos * s + t.sin * c);
                for (gi, k) in g.iter_mut().zip(&t.wave) {
                    *gi += d * *k as f64;
                }
            }
        }
        value
    }
}

impl PhaseFunction for TorusHamiltonian {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, q: &[f64], p: &[f64]) -> f64 {
        let r = self.dual_norm(p);
        let h = self.spec.profile().value(r);
        match &self.spec {
            HamiltonianSpec::Radial { .. } => h,
            HamiltonianSpec::RadialPerturbed { eps, bump, .. } => {
                let (b, _) = bump.eval(r);
                if b == 0.0 {
                    h
                } else {
                    h + eps * self.angular(q, None) * b
                }
            }
        }
    }

    /// `∂H/∂p = (h′(r) + ε A β′(r)) G⁻¹p / r`, taken as 0 at `p = 0`.
    fn gradient(&self, q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        let r = self.dual_norm(p);
        let (_, mut radial) = self.spec.profile().eval(r);
        dq.iter_mut().for_each(|v| *v = 0.0);
        if let HamiltonianSpec::RadialPerturbed { eps, bump, .. } = &self.spec {
            let (b, db) = bump.eval(r);
            if b != 0.0 || db != 0.0 {
                let a = self.angular(q, Some(dq));
                dq.iter_mut().for_each(|v| *v *= eps * b);
                radial += eps * a * db;
            }
        }
        if r == 0.0 {
            dp.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        self.raise(p, dp);
        dp.iter_mut().for_each(|v| *v *= radial / r);
    }
}

/// `X_H = (∂H/∂p, −∂H/∂q)`.
///
/// With `λ = p dq` we have `ω = dλ = dp ∧ dq`. Writing `X = (a, b)` in `(q, p)`,
/// `ω(X, ·) = b·dq − a·dp`, and `ω(X, ·) = −dH = −H_q dq − H_p dp` forces
/// `a = H_p`, `b = −H_q`.
pub fn hamiltonian_vector_field<H: PhaseFunction + ?Sized>(h: &H, q: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = h.dim();
    let (mut hq, mut hp) = (vec![0.0; n], vec![0.0; n]);
    h.gradient(q, p, &mut hq, &mut hp);
    hq.iter_mut().for_each(|v| *v = -*v);
    (hp, hq)
}
