//! Poisson brackets, the deformation identities behind the `pb⁺` lower bound,
//! and upper estimates of `pb⁺` on the circle by minimax over test pairs.
//!
//! Phase space coordinates are ordered `(q₁, …, qₙ, p₁, …, pₙ)` and
//! `ω = Σ dpᵢ∧dqᵢ`. The bracket `{F,G} = Σ (∂F/∂qᵢ ∂G/∂pᵢ − ∂F/∂pᵢ ∂G/∂qᵢ)`
//! is the sign for which `dF∧dG∧ω^{n−1} = −(1/n){F,G} ωⁿ`: for `n = 1`,
//! `dq∧dp = −ω` forces `{q,p} = 1`.

use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_report, QuadrupleSets, QuadrupleSpec};
use crate::dynamics::PhaseFunction;
use crate::error::{Error, Result};
use crate::manifolds::{reduce_mod1, Manifold};

pub fn poisson_bracket<F, G>(f: &F, g: &G, q: &[f64], p: &[f64]) -> f64
where
    F: PhaseFunction + ?Sized,
    G: PhaseFunction + ?Sized,
{
    let n = q.len();
    let (mut fq, mut fp, mut gq, mut gp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    f.gradient(q, p, &mut fq, &mut fp);
    g.gradient(q, p, &mut gq, &mut gp);
    (0..n).map(|i| fq[i] * gp[i] - fp[i] * gq[i]).sum()
}

/// `ω` as an antisymmetric matrix, `ω(u, v) = uᵀ Ω v`.
pub fn symplectic_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(n + i, i)] = 1.0;
        m[(i, n + i)] = -1.0;
    }
    m
}

/// `ω_τ = ω + τ dF∧dG` at `(q, p)`.
pub fn deformed_form<F, G>(f: &F, g: &G, tau: f64, q: &[f64], p: &[f64]) -> DMatrix<f64>
where
    F: PhaseFunction + ?Sized,
    G: PhaseFunction + ?Sized,
{
    let n = q.len();
    let (df, dg) = (differential(f, q, p), differential(g, q, p));
    let mut m = symplectic_matrix(n);
    for i in 0..2 * n {
        for j in 0..2 * n {
            m[(i, j)] += tau * (df[i] * dg[j] - dg[i] * df[j]);
        }
    }
    m
}

fn differential<F: PhaseFunction + ?Sized>(f: &F, q: &[f64], p: &[f64]) -> Vec<f64> {
    let n = q.len();
    let (mut dq, mut dp) = (vec![0.0; n], vec![0.0; n]);
    f.gradient(q, p, &mut dq, &mut dp);
    dq.extend(dp);
    dq
}

/// Pfaffian of an antisymmetric matrix by skew-symmetric elimination with pivoting.
pub fn pfaffian(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::arg("pfaffian needs a square matrix"));
    }
    let scale = m.amax().max(1.0);
    for i in 0..n {
        for j in 0..n {
            if (m[(i, j)] + m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::arg("pfaffian needs an antisymmetric matrix"));
            }
        }
    }
    if n % 2 == 1 {
        return Ok(0.0);
    }
    let mut a = m.clone();
    let mut pf = 1.0;
    for k in (0..n).step_by(2) {
        let kp = (k + 1..n)
            .max_by(|&i, &j| a[(k, i)].abs().total_cmp(&a[(k, j)].abs()).then(j.cmp(&i)))
            .unwrap();
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let piv = a[(k, k + 1)];
        if piv == 0.0 {
            return Ok(0.0);
        }
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|j| a[(k, j)] / piv).collect();
            let col: Vec<f64> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
    }
    Ok(pf)
}

/// `|Pf(ω_τ) − (1 − τ{F,G}) Pf(ω)|` at `(q, p)`.
pub fn verify_degeneracy_identity<F, G>(f: &F, g: &G, tau: f64, q: &[f64], p: &[f64]) -> Result<f64>
where
    F: PhaseFunction + ?Sized,
    G: PhaseFunction + ?Sized,
{
    let n = q.len();
    if n == 0 || p.len() != n || f.dim() != n || g.dim() != n {
        return Err(Error::arg("point and functions must share the dimension"));
    }
    let lhs = pfaffian(&deformed_form(f, g, tau, q, p))?;
    let rhs = (1.0 - tau * poisson_bracket(f, g, q, p)) * pfaffian(&symplectic_matrix(n))?;
    Ok((lhs - rhs).abs())
}

/// Exterior algebra on `ℝ^{dim}` with basis monomials indexed by bitmasks.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    dim: usize,
    coeffs: Vec<f64>,
}

impl Form {
    pub fn zero(dim: usize) -> Self {
        Form {
            dim,
            coeffs: vec![0.0; 1 << dim],
        }
    }

    pub fn one(dim: usize) -> Self {
        let mut f = Form::zero(dim);
        f.coeffs[0] = 1.0;
        f
    }

    pub fn one_form(v: &[f64]) -> Self {
        let mut f = Form::zero(v.len());
        for (i, c) in v.iter().enumerate() {
            f.coeffs[1 << i] = *c;
        }
        f
    }

    /// `Σ_{i<j} m_ij eᵢ∧eⱼ`.
    pub fn two_form(m: &DMatrix<f64>) -> Self {
        let mut f = Form::zero(m.nrows());
        for i in 0..m.nrows() {
            for j in i + 1..m.nrows() {
                f.coeffs[(1 << i) | (1 << j)] = m[(i, j)];
            }
        }
        f
    }

    pub fn wedge(&self, other: &Form) -> Form {
        let mut out = Form::zero(self.dim);
        for (a, ca) in self.coeffs.iter().enumerate() {
            if *ca == 0.0 {
                continue;
            }
            for (b, cb) in other.coeffs.iter().enumerate() {
                if *cb == 0.0 || a & b != 0 {
                    continue;
                }
                // transpositions moving each basis vector of b past the larger ones of a
                let mut swaps = 0;
                for i in 0..self.dim {
                    if b >> i & 1 == 1 {
                        swaps += (a >> (i + 1)).count_ones();
                    }
                }
                let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
                out.coeffs[a | b] += sign * ca * cb;
            }
        }
        out
    }

    pub fn power(&self, k: usize) -> Form {
        (0..k).fold(Form::one(self.dim), |acc, _| acc.wedge(self))
    }

    /// Coefficient of `e₁∧…∧e_dim`.
    pub fn top(&self) -> f64 {
        self.coeffs[(1 << self.dim) - 1]
    }
}

/// `|dF∧dG∧ω^{n−1} + (1/n){F,G} ωⁿ|`, compared on top-degree coefficients.
pub fn verify_wedge_identity<F, G>(f: &F, g: &G, q: &[f64], p: &[f64]) -> Result<f64>
where
    F: PhaseFunction + ?Sized,
    G: PhaseFunction + ?Sized,
{
    let n = q.len();
    if n == 0 || n > 6 || p.len() != n {
        return Err(Error::arg("wedge identity is checked for 1 ≤ n ≤ 6"));
    }
    let omega = Form::two_form(&symplectic_matrix(n));
    let lhs = Form::one_form(&differential(f, q, p))
        .wedge(&Form::one_form(&differential(g, q, p)))
        .wedge(&omega.power(n - 1))
        .top();
    let rhs = -poisson_bracket(f, g, q, p) / n as f64 * omega.power(n).top();
    Ok((lhs - rhs).abs())
}

/// `Σ cₖ sin(2π wₖ·q + βₖ·p + φₖ)` with integer `wₖ`: a smooth function on `T*Tⁿ`
/// that mixes `q` and `p`, used to exercise the identities on random input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveSum {
    n: usize,
    terms: Vec<WaveTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct WaveTerm {
    c: f64,
    w: Vec<f64>,
    beta: Vec<f64>,
    phase: f64,
}

impl WaveSum {
    pub fn random<R: Rng>(n: usize, terms: usize, rng: &mut R) -> Self {
        let terms = (0..terms.max(1))
            .map(|_| WaveTerm {
                c: rng.random_range(-2.0..2.0),
                w: (0..n).map(|_| rng.random_range(-2i32..=2) as f64).collect(),
                beta: (0..n).map(|_| rng.random_range(-1.5..1.5)).collect(),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            })
            .collect();
        WaveSum { n, terms }
    }

    fn angle(t: &WaveTerm, q: &[f64], p: &[f64]) -> f64 {
        let mut s = t.phase;
        for i in 0..q.len() {
            s += std::f64::consts::TAU * t.w[i] * q[i] + t.beta[i] * p[i];
        }
        s
    }
}

impl PhaseFunction for WaveSum {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, q: &[f64], p: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.c * Self::angle(t, q, p).sin()).sum()
    }

    fn gradient(&self, q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        dq.fill(0.0);
        dp.fill(0.0);
        for t in &self.terms {
            let k = t.c * Self::angle(t, q, p).cos();
            for i in 0..self.n {
                dq[i] += k * std::f64::consts::TAU * t.w[i];
                dp[i] += k * t.beta[i];
            }
        }
    }
}

/// The `τ > 0` at which `Pf(ω_τ)` vanishes at `(q, p)`, by bisection on its sign
/// over `(0, tau_hi]`; `None` without a sign change.
pub fn critical_tau<F, G>(f: &F, g: &G, q: &[f64], p: &[f64], tau_hi: f64) -> Result<Option<f64>>
where
    F: PhaseFunction + ?Sized,
    G: PhaseFunction + ?Sized,
{
    let pf = |t: f64| pfaffian(&deformed_form(f, g, t, q, p));
    let (mut lo, mut hi) = (0.0, tau_hi);
    let (f_lo, f_hi) = (pf(lo)?, pf(hi)?);
    if f_lo == 0.0 {
        return Ok(Some(0.0));
    }
    if f_lo.signum() == f_hi.signum() && f_hi != 0.0 {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = pf(mid)?;
        if v == 0.0 {
            return Ok(Some(mid));
        }
        if v.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyCheck {
    pub q: f64,
    pub p: f64,
    pub bracket: f64,
    pub predicted_tau: f64,
    pub found_tau: Option<f64>,
    pub pfaffian_at_predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub n: usize,
    pub draws: usize,
    pub seed: u64,
    pub max_pfaffian_residual: f64,
    pub max_wedge_residual: f64,
    pub degeneracy: Vec<DegeneracyCheck>,
}

/// Both deformation identities on `draws` random `(F, G, τ, z)` in dimension `n`,
/// and the critical `τ = 1/max{F,G}` of product test pairs on the circle.
pub fn identity_check(n: usize, draws: usize, seed: u64) -> Result<IdentityReport> {
    if !(1..=4).contains(&n) || draws == 0 {
        return Err(Error::arg("identity check needs 1 ≤ n ≤ 4 and at least one draw"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pf_res, mut wedge_res) = (0.0f64, 0.0f64);
    for _ in 0..draws {
        let f = WaveSum::random(n, 3, &mut rng);
        let g = WaveSum::random(n, 3, &mut rng);
        let tau = rng.random_range(-3.0..3.0);
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        pf_res = pf_res.max(verify_degeneracy_identity(&f, &g, tau, &q, &p)?);
        wedge_res = wedge_res.max(verify_wedge_identity(&f, &g, &q, &p)?);
    }
    let mut degeneracy = Vec::new();
    for (a, b, y) in [(1.0, 2.0, 0.3), (1.0, 3.0, 0.45), (0.5, 1.5, 0.2)] {
        let shape = |w: &[f64]| Transition::new(w, 0.1);
        let f = FiberProfile::new(0.0, y, 0.01, shape(&[1.0, 2.0, 1.5, 1.0])?, shape(&[1.0, 1.0, 1.0])?)?;
        let g = RadialStep::new(a, b, 1.0, shape(&[1.0, 3.0, 1.0])?)?;
        // the bracket peaks where both F′ and G′ do
        let q = argmax(|s| f.eval(s).1, 0.0, y);
        let r = argmax(|s| g.eval(s).1, a, b);
        let br = poisson_bracket(&f, &g, &[q], &[r]);
        let predicted = 1.0 / br;
        degeneracy.push(DegeneracyCheck {
            q,
            p: r,
            bracket: br,
            predicted_tau: predicted,
            found_tau: critical_tau(&f, &g, &[q], &[r], 2.0 * predicted)?,
            pfaffian_at_predicted: pfaffian(&deformed_form(&f, &g, predicted, &[q], &[r]))?,
        });
    }
    Ok(IdentityReport {
        n,
        draws,
        seed,
        max_pfaffian_residual: pf_res,
        max_wedge_residual: wedge_res,
        degeneracy,
    })
}

/// Maximizer of `f` on `[lo, hi]`: dense scan, then golden-section polish.
fn argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 2000;
    let h = (hi - lo) / n as f64;
    let i = (0..=n)
        .max_by(|&i, &j| f(lo + i as f64 * h).total_cmp(&f(lo + j as f64 * h)).then(j.cmp(&i)))
        .unwrap();
    let (mut a, mut b) = ((lo + (i as f64 - 1.0) * h).max(lo), (lo + (i as f64 + 1.0) * h).min(hi));
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    while b - a > 1e-12 {
        let (c, d) = (b - INV_PHI * (b - a), a + INV_PHI * (b - a));
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// A smooth step `S: [0,1] → [0,1]`, `S = ∫ S′` with `S′` the monotone cubic
/// Hermite interpolant of `(0, w₁, …, w_k, 0)`, normalized to unit mass.
/// `S′` and `S″` vanish at both ends, so `S` extends constantly as a C² function.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    knots: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Transition {
    /// Interior knots are spaced evenly on `[ramp, 1 − ramp]`.
    pub fn new(weights: &[f64], ramp: f64) -> Result<Self> {
        if weights.len() < 2 || weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::arg("transition needs at least two positive weights"));
        }
        if !(ramp > 0.0 && ramp < 0.5) {
            return Err(Error::arg(format!("ramp must lie in (0, 1/2), got {ramp}")));
        }
        let k = weights.len();
        let mut knots = vec![0.0];
        knots.extend((0..k).map(|i| ramp + (1.0 - 2.0 * ramp) * i as f64 / (k - 1) as f64));
        knots.push(1.0);
        let mut values = vec![0.0];
        values.extend_from_slice(weights);
        values.push(0.0);
        let derivs = fritsch_carlson(&knots, &values);
        let mass: f64 = (0..knots.len() - 1).map(|i| segment_mass(&knots, &values, &derivs, i)).sum();
        values.iter_mut().for_each(|v| *v /= mass);
        let derivs: Vec<f64> = derivs.iter().map(|d| d / mass).collect();
        let mut cumulative = vec![0.0];
        for i in 0..knots.len() - 1 {
            cumulative.push(cumulative[i] + segment_mass(&knots, &values, &derivs, i));
        }
        Ok(Transition {
            knots,
            values,
            derivs,
            cumulative,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// `(S(t), S′(t), S″(t))`, constant outside `[0, 1]`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        if t <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        if t >= 1.0 {
            return (1.0, 0.0, 0.0);
        }
        let i = (self.knots.partition_point(|k| *k <= t) - 1).min(self.knots.len() - 2);
        let h = self.knots[i + 1] - self.knots[i];
        let s = (t - self.knots[i]) / h;
        let (y0, y1, d0, d1) = (self.values[i], self.values[i + 1], self.derivs[i], self.derivs[i + 1]);
        let (s2, s3, s4) = (s * s, s * s * s, s * s * s * s);
        let slope = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * d1;
        let curv = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * h * d0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * h * d1)
            / h;
        let integral = h
            * ((0.5 * s4 - s3 + s) * y0
                + (0.25 * s4 - 2.0 * s3 / 3.0 + 0.5 * s2) * h * d0
                + (-0.5 * s4 + s3) * y1
                + (0.25 * s4 - s3 / 3.0) * h * d1);
        (self.cumulative[i] + integral, slope, curv)
    }

    /// Exact `max S′`: on each interval `S′` is a cubic whose critical points solve `S″ = 0`.
    pub fn max_slope(&self) -> f64 {
        self.extremum(|t| self.eval(t).1, 1)
    }

    /// Exact `max |S″|`: on each interval `S″` is a quadratic.
    pub fn max_curvature(&self) -> f64 {
        self.extremum(|t| self.eval(t).2.abs(), 2)
    }

    fn extremum(&self, f: impl Fn(f64) -> f64, order: usize) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.knots.len() - 1 {
            let (a, b) = (self.knots[i], self.knots[i + 1]);
            let h = b - a;
            // one-sided limits at the ends of the interval
            best = best.max(f(a + 1e-15 * h)).max(f(b - 1e-15 * h));
            let (y0, y1, d0, d1) = (self.values[i], self.values[i + 1], self.derivs[i], self.derivs[i + 1]);
            // S′(s) = c3 s³ + c2 s² + c1 s + c0 on s ∈ [0,1]
            let c3 = 2.0 * y0 + h * d0 - 2.0 * y1 + h * d1;
            let c2 = -3.0 * y0 - 2.0 * h * d0 + 3.0 * y1 - h * d1;
            let c1 = h * d0;
            let roots: Vec<f64> = if order == 1 {
                quadratic_roots(3.0 * c3, 2.0 * c2, c1)
            } else if c3 != 0.0 {
                vec![-c2 / (3.0 * c3)]
            } else {
                vec![]
            };
            for s in roots {
                if s > 0.0 && s < 1.0 {
                    best = best.max(f(a + s * h));
                }
            }
        }
        best
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    let qv = -0.5 * (b + b.signum() * sq);
    let mut r = vec![qv / a];
    if qv != 0.0 {
        r.push(c / qv);
    }
    r
}

fn segment_mass(x: &[f64], y: &[f64], d: &[f64], i: usize) -> f64 {
    let h = x[i + 1] - x[i];
    h * (0.5 * (y[i] + y[i + 1]) + h * (d[i] - d[i + 1]) / 12.0)
}

/// Fritsch–Carlson (Brodlie) interior derivatives; zero at both ends.
fn fritsch_carlson(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d
}

/// `F(q)` on the circle `ℝ/ℤ` with metric `g dq²`: `0` near `x`, `1` near `y`,
/// rising along `x → y` and falling along the other arc.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberProfile {
    x: f64,
    // arc length from x to y in coordinates
    ell: f64,
    margin: f64,
    rise: Transition,
    fall: Transition,
}

impl FiberProfile {
    pub fn new(x: f64, y: f64, margin: f64, rise: Transition, fall: Transition) -> Result<Self> {
        let ell = reduce_mod1(y - x);
        if ell == 0.0 {
            return Err(Error::arg("fiber profile needs x ≠ y"));
        }
        if !(margin >= 0.0 && 2.0 * margin < ell.min(1.0 - ell)) {
            return Err(Error::arg("fiber margin leaves no room for the transitions"));
        }
        Ok(FiberProfile {
            x: reduce_mod1(x),
            ell,
            margin,
            rise,
            fall,
        })
    }

    fn rise_len(&self) -> f64 {
        self.ell - 2.0 * self.margin
    }

    fn fall_len(&self) -> f64 {
        1.0 - self.ell - 2.0 * self.margin
    }

    /// `(F, F′, F″)` at coordinate `q`.
    pub fn eval(&self, q: f64) -> (f64, f64, f64) {
        let s = reduce_mod1(q - self.x);
        if s < self.ell {
            let l = self.rise_len();
            let (v, d, dd) = self.rise.eval((s - self.margin) / l);
            (v, d / l, dd / (l * l))
        } else {
            let l = self.fall_len();
            let (v, d, dd) = self.fall.eval((s - self.ell - self.margin) / l);
            (1.0 - v, -d / l, -dd / (l * l))
        }
    }

    /// `max |F′|` and `max |F″|`, exact.
    pub fn max_derivatives(&self) -> (f64, f64) {
        let (lr, lf) = (self.rise_len(), self.fall_len());
        (
            (self.rise.max_slope() / lr).max(self.fall.max_slope() / lf),
            (self.rise.max_curvature() / (lr * lr)).max(self.fall.max_curvature() / (lf * lf)),
        )
    }
}

impl PhaseFunction for FiberProfile {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, q: &[f64], _p: &[f64]) -> f64 {
        self.eval(q[0]).0
    }

    fn gradient(&self, q: &[f64], _p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        dq[0] = self.eval(q[0]).1;
        dp[0] = 0.0;
    }
}

/// `G(r)` with `r = |p|/√g`: `0` for `r ≤ lo`, `1` for `r ≥ hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialStep {
    lo: f64,
    hi: f64,
    metric: f64,
    shape: Transition,
}

impl RadialStep {
    pub fn new(lo: f64, hi: f64, metric: f64, shape: Transition) -> Result<Self> {
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) || !(metric > 0.0) {
            return Err(Error::arg("radial step needs 0 ≤ lo < hi and a positive metric"));
        }
        Ok(RadialStep { lo, hi, metric, shape })
    }

    /// `(G, G′, G″)` in `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let l = self.hi - self.lo;
        let (v, d, dd) = self.shape.eval((r - self.lo) / l);
        (v, d / l, dd / (l * l))
    }

    pub fn max_derivatives(&self) -> (f64, f64) {
        let l = self.hi - self.lo;
        (self.shape.max_slope() / l, self.shape.max_curvature() / (l * l))
    }
}

impl PhaseFunction for RadialStep {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, _q: &[f64], p: &[f64]) -> f64 {
        self.eval(p[0].abs() / self.metric.sqrt()).0
    }

    fn gradient(&self, _q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        let s = self.metric.sqrt();
        dq[0] = 0.0;
        // G′ vanishes near r = 0, so the sign of p never matters there
        dp[0] = self.eval(p[0].abs() / s).1 * p[0].signum() / s;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PbConfig {
    /// Weights per transition profile.
    pub control_points: usize,
    /// Fraction of each transition spent ramping `S′` up from zero (and down).
    pub ramp: f64,
    /// Constancy collar around each set, as a fraction of the gap it sits in.
    pub margin: f64,
    pub restarts: usize,
    pub max_iters: u64,
    pub sd_tolerance: f64,
    pub q_points: usize,
    pub r_points: usize,
    pub seed: u64,
}

impl Default for PbConfig {
    fn default() -> Self {
        PbConfig {
            control_points: 6,
            ramp: 0.02,
            margin: 0.005,
            restarts: 4,
            max_iters: 3000,
            sd_tolerance: 1e-12,
            q_points: 512,
            r_points: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestPairRecord {
    pub f_rise: Vec<f64>,
    pub f_fall: Vec<f64>,
    pub g: Vec<f64>,
    pub ramp: f64,
    pub f_margin: f64,
    pub g_support: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PbEstimate {
    pub quadruple: QuadrupleSpec,
    /// `max {F,G}` of the best pair, clamped at zero.
    pub upper: f64,
    pub raw_max: f64,
    pub clamped: bool,
    pub lower: f64,
    pub gap_ratio: f64,
    /// Largest bracket on the evaluation grid and the Lipschitz bound on what it can miss.
    pub grid_max: f64,
    pub grid_error: f64,
    pub pair: TestPairRecord,
    pub stagnated: bool,
    pub restarts: usize,
    pub seed: u64,
}

struct Geometry {
    x: f64,
    y: f64,
    metric: f64,
    f_margin: f64,
    g_lo: f64,
    g_hi: f64,
    r_top: f64,
}

#[derive(Clone)]
struct Objective<'a> {
    geo: &'a Geometry,
    cfg: &'a PbConfig,
    // transition parameters at which each grid point is sampled
    rise_t: Vec<f64>,
    fall_t: Vec<f64>,
    g_t: Vec<f64>,
}

impl Objective<'_> {
    fn pair(&self, theta: &[f64]) -> Result<(FiberProfile, RadialStep)> {
        let k = self.cfg.control_points;
        let w = |s: &[f64]| s.iter().map(|v| v.clamp(-30.0, 30.0).exp()).collect::<Vec<_>>();
        let rise = Transition::new(&w(&theta[..k]), self.cfg.ramp)?;
        let fall = Transition::new(&w(&theta[k..2 * k]), self.cfg.ramp)?;
        let shape = Transition::new(&w(&theta[2 * k..]), self.cfg.ramp)?;
        let f = FiberProfile::new(self.geo.x, self.geo.y, self.geo.f_margin, rise, fall)?;
        let g = RadialStep::new(self.geo.g_lo, self.geo.g_hi, self.geo.metric, shape)?;
        Ok((f, g))
    }

    /// Grid maxima of `|F′|` and `G′`. The bracket of the product pair is
    /// `F′(q) G′(r) sign(p)/√g`, so its maximum over the grid, both signs of `p`
    /// included, is the product of the two.
    fn grid_factors(&self, f: &FiberProfile, g: &RadialStep) -> (f64, f64) {
        let (lr, lf, lg) = (f.rise_len(), f.fall_len(), g.hi - g.lo);
        let fr = self.rise_t.iter().map(|t| f.rise.eval(*t).1).fold(0.0, f64::max) / lr;
        let ff = self.fall_t.iter().map(|t| f.fall.eval(*t).1).fold(0.0, f64::max) / lf;
        let gm = self.g_t.iter().map(|t| g.shape.eval(*t).1).fold(0.0, f64::max) / lg;
        (fr.max(ff), gm)
    }

    fn grid_max(&self, theta: &[f64]) -> f64 {
        match self.pair(theta) {
            Ok((f, g)) => {
                let (fm, gm) = self.grid_factors(&f, &g);
                fm * gm / self.geo.metric.sqrt()
            }
            Err(_) => f64::INFINITY,
        }
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.grid_max(theta))
    }
}

/// Grid in a parameter interval `[lo, hi]` mapped to transition time, with the
/// cells next to each knot halved.
fn sample_times(points: &[f64], lo: f64, hi: f64, knots: &[f64]) -> Vec<f64> {
    let len = hi - lo;
    let mut t: Vec<f64> = points
        .iter()
        .filter(|s| **s >= lo && **s <= hi)
        .map(|s| (s - lo) / len)
        .collect();
    if points.len() >= 2 {
        let h = (points[1] - points[0]) / len;
        for k in knots {
            t.push(k - 0.5 * h);
            t.push(k + 0.5 * h);
        }
    }
    t.retain(|v| (0.0..=1.0).contains(v));
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Upper estimate of `pb⁺` for a quadruple on the circle by minimizing the grid
/// maximum of `{F,G}` over product test pairs.
pub fn estimate_pb_upper(quadruple: &QuadrupleSpec, cfg: &PbConfig) -> Result<PbEstimate> {
    let q = QuadrupleSpec::new(
        quadruple.manifold.clone(),
        quadruple.x.clone(),
        quadruple.y.clone(),
        quadruple.sets,
    )?;
    let metric = match &q.manifold {
        Manifold::Torus(t) if t.dim() == 1 => t.metric()[0][0],
        _ => return Err(Error::arg("pb⁺ estimation is implemented on the circle T¹")),
    };
    if cfg.control_points < 2 || cfg.restarts == 0 || cfg.q_points < 2 || cfg.r_points < 2 {
        return Err(Error::arg("pb⁺ estimation needs ≥ 2 control points, ≥ 1 restart and ≥ 2 grid points"));
    }
    if !(cfg.margin >= 0.0 && cfg.margin < 0.25) {
        return Err(Error::arg("margin must lie in [0, 1/4)"));
    }
    let (x, y) = (q.x.coords()[0], q.y.coords()[0]);
    let ell = reduce_mod1(y - x);
    let (g_lo, g_hi, b) = match q.sets {
        QuadrupleSets::FiberFiberSpheres { a, b } => {
            let m = cfg.margin * (b - a);
            (a + m, b - m, b)
        }
        QuadrupleSets::FiberFiberZeroSection { a } => (cfg.margin * a, a - cfg.margin * a, a),
    };
    let geo = Geometry {
        x,
        y,
        metric,
        f_margin: cfg.margin * ell.min(1.0 - ell),
        g_lo,
        g_hi,
        r_top: b + 2.0,
    };

    // the evaluation grid, in arc coordinate s = q − x and in r
    let knots = Transition::new(&vec![1.0; cfg.control_points], cfg.ramp)?.knots().to_vec();
    let s_pts: Vec<f64> = (0..cfg.q_points).map(|i| i as f64 / cfg.q_points as f64).collect();
    let r_pts: Vec<f64> = (0..=cfg.r_points).map(|i| geo.r_top * i as f64 / cfg.r_points as f64).collect();
    let objective = Objective {
        geo: &geo,
        cfg,
        rise_t: sample_times(&s_pts, geo.f_margin, ell - geo.f_margin, &knots),
        fall_t: sample_times(&s_pts, ell + geo.f_margin, 1.0 - geo.f_margin, &knots),
        g_t: sample_times(&r_pts, g_lo, g_hi, &knots),
    };

    let dim = 3 * cfg.control_points;
    let runs: Vec<(Vec<f64>, f64, bool)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|i| {
            let start: Vec<f64> = if i == 0 {
                vec![0.0; dim]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64));
                (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
            };
            run_restart(&objective, start, cfg)
        })
        .collect::<Result<_>>()?;
    let (theta, _, stagnated) = runs
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one restart");
    let theta = coordinate_refine(&objective, theta);

    let (f, g) = objective.pair(&theta)?;
    let sg = metric.sqrt();
    let (fm, gm) = objective.grid_factors(&f, &g);
    let grid_max = fm * gm / sg;
    let (f1, f2) = f.max_derivatives();
    let (g1, g2) = g.max_derivatives();
    let raw_max = f1 * g1 / sg;
    let (ef, eg) = (f2 * 0.5 / cfg.q_points as f64, g2 * 0.5 * geo.r_top / cfg.r_points as f64);
    let grid_error = (ef * gm + fm * eg + ef * eg) / sg;
    let upper = raw_max.max(0.0);
    let lower = bound_report(&q)?.pb_lower;
    let k = cfg.control_points;
    let w = |s: &[f64]| s.iter().map(|v| v.clamp(-30.0, 30.0).exp()).collect::<Vec<_>>();
    Ok(PbEstimate {
        quadruple: q,
        upper,
        raw_max,
        clamped: raw_max < 0.0,
        lower,
        gap_ratio: upper / lower,
        grid_max,
        grid_error,
        pair: TestPairRecord {
            f_rise: w(&theta[..k]),
            f_fall: w(&theta[k..2 * k]),
            g: w(&theta[2 * k..]),
            ramp: cfg.ramp,
            f_margin: geo.f_margin,
            g_support: [g_lo, g_hi],
        },
        stagnated,
        restarts: cfg.restarts,
        seed: cfg.seed,
    })
}

fn run_restart(obj: &Objective<'_>, start: Vec<f64>, cfg: &PbConfig) -> Result<(Vec<f64>, f64, bool)> {
    let mut simplex = vec![start.clone()];
    for i in 0..start.len() {
        let mut v = start.clone();
        v[i] += 0.5;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(cfg.sd_tolerance)
        .map_err(|e| Error::arg(e.to_string()))?;
    let res = Executor::new(obj.clone(), solver)
        .configure(|s| s.max_iters(cfg.max_iters))
        .run()
        .map_err(|e| Error::NoConvergence {
            what: format!("simplex descent ({e})"),
            residual: f64::NAN,
        })?;
    let state = res.state();
    let best = state.get_best_param().cloned().unwrap_or(start);
    let stagnated = matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::MaxItersReached)
    );
    Ok((best, state.get_best_cost(), stagnated))
}

/// Compass search on single control points.
fn coordinate_refine(obj: &Objective<'_>, mut theta: Vec<f64>) -> Vec<f64> {
    let mut best = obj.grid_max(&theta);
    let mut step = 0.1;
    while step > 1e-4 {
        let mut improved = false;
        for i in 0..theta.len() {
            for dir in [1.0, -1.0] {
                let mut trial = theta.clone();
                trial[i] += dir * step;
                let c = obj.grid_max(&trial);
                if c < best {
                    best = c;
                    theta = trial;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    theta
}
