use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::manifolds::reduce_mod1;

use super::hamiltonian::PhaseFunction;

/// Fixed-point tolerance of the implicit midpoint solve.
pub const MIDPOINT_TOL: f64 = 1e-13;
const MIDPOINT_MAX_ITER: usize = 100;

/// Sampled flow line. `q` is kept lifted to `ℝⁿ` so crossings can be tracked.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `max_t |H(z_t) − H(z_0)|`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }

    /// CSV with header `t,q1..qn,p1..pn,H`; `q` reduced mod 1.
    pub fn to_csv(&self) -> String {
        let n = self.q.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        (1..=n).for_each(|i| write!(out, ",q{i}").unwrap());
        (1..=n).for_each(|i| write!(out, ",p{i}").unwrap());
        out.push_str(",H\n");
        for k in 0..self.len() {
            write!(out, "{}", self.t[k]).unwrap();
            for v in &self.q[k] {
                write!(out, ",{}", reduce_mod1(*v)).unwrap();
            }
            for v in &self.p[k] {
                write!(out, ",{v}").unwrap();
            }
            writeln!(out, ",{}", self.energy[k]).unwrap();
        }
        out
    }
}

/// One-step scheme. Both are symplectic and symmetric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Plain implicit midpoint, order 2.
    Midpoint,
    /// Triple-jump composition of three implicit midpoint substeps, order 4.
    #[default]
    TripleJump,
}

impl Scheme {
    fn substeps(self) -> &'static [f64] {
        // γ₁ = 1/(2 − 2^{1/3}), γ₂ = 1 − 2γ₁
        const G1: f64 = 1.351_207_191_959_657_8;
        const G2: f64 = -1.702_414_383_919_315_6;
        match self {
            Scheme::Midpoint => &[1.0],
            Scheme::TripleJump => &[G1, G2, G1],
        }
    }
}

/// Implicit midpoint stepper with reusable buffers.
pub(crate) struct Midpoint<'a, H: PhaseFunction + ?Sized> {
    h: &'a H,
    mq: Vec<f64>,
    mp: Vec<f64>,
    gq: Vec<f64>,
    gp: Vec<f64>,
    nq: Vec<f64>,
    np: Vec<f64>,
}

impl<'a, H: PhaseFunction + ?Sized> Midpoint<'a, H> {
    pub(crate) fn new(h: &'a H) -> Self {
        let n = h.dim();
        Midpoint {
            h,
            mq: vec![0.0; n],
            mp: vec![0.0; n],
            gq: vec![0.0; n],
            gp: vec![0.0; n],
            nq: vec![0.0; n],
            np: vec![0.0; n],
        }
    }

    /// Solves `z₁ = z₀ + dt·X_H((z₀ + z₁)/2)` by fixed-point iteration and
    /// overwrites `(q, p)`. On failure returns the last update size.
    pub(crate) fn step(&mut self, q: &mut [f64], p: &mut [f64], dt: f64) -> std::result::Result<(), f64> {
        let n = q.len();
        // explicit Euler predictor
        self.h.gradient(q, p, &mut self.gq, &mut self.gp);
        for i in 0..n {
            self.nq[i] = q[i] + dt * self.gp[i];
            self.np[i] = p[i] - dt * self.gq[i];
        }
        let mut change = f64::INFINITY;
        for _ in 0..MIDPOINT_MAX_ITER {
            for i in 0..n {
                self.mq[i] = 0.5 * (q[i] + self.nq[i]);
                self.mp[i] = 0.5 * (p[i] + self.np[i]);
            }
            self.h.gradient(&self.mq, &self.mp, &mut self.gq, &mut self.gp);
            change = 0.0;
            let mut scale = 1.0f64;
            for i in 0..n {
                let nq = q[i] + dt * self.gp[i];
                let np = p[i] - dt * self.gq[i];
                change = change.max((nq - self.nq[i]).abs()).max((np - self.np[i]).abs());
                scale = scale.max(nq.abs()).max(np.abs());
                self.nq[i] = nq;
                self.np[i] = np;
            }
            if !change.is_finite() {
                break;
            }
            if change <= MIDPOINT_TOL * scale {
                q.copy_from_slice(&self.nq);
                p.copy_from_slice(&self.np);
                return Ok(());
            }
        }
        Err(change)
    }

    pub(crate) fn scheme_step(
        &mut self,
        q: &mut [f64],
        p: &mut [f64],
        dt: f64,
        scheme: Scheme,
    ) -> std::result::Result<(), f64> {
        for g in scheme.substeps() {
            self.step(q, p, g * dt)?;
        }
        Ok(())
    }
}

/// Integrates the flow of `h` from `(q0, p0)` for `steps` steps of size `dt`
/// with the default scheme.
pub fn integrate<H: PhaseFunction + ?Sized>(h: &H, q0: &[f64], p0: &[f64], dt: f64, steps: usize) -> Result<Trajectory> {
    integrate_with(h, q0, p0, dt, steps, Scheme::default())
}

pub fn integrate_with<H: PhaseFunction + ?Sized>(
    h: &H,
    q0: &[f64],
    p0: &[f64],
    dt: f64,
    steps: usize,
    scheme: Scheme,
) -> Result<Trajectory> {
    let n = h.dim();
    if q0.len() != n || p0.len() != n {
        return Err(Error::arg(format!("initial point must have dimension {n}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::arg(format!("time step must be positive, got {dt}")));
    }
    let mut traj = Trajectory {
        t: Vec::with_capacity(steps + 1),
        q: Vec::with_capacity(steps + 1),
        p: Vec::with_capacity(steps + 1),
        energy: Vec::with_capacity(steps + 1),
    };
    let (mut q, mut p) = (q0.to_vec(), p0.to_vec());
    let mut stepper = Midpoint::new(h);
    traj.t.push(0.0);
    traj.q.push(q.clone());
    traj.p.push(p.clone());
    traj.energy.push(h.value(&q, &p));
    for k in 1..=steps {
        stepper
            .scheme_step(&mut q, &mut p, dt, scheme)
            .map_err(|residual| Error::StepFailure {
                t: (k - 1) as f64 * dt,
                residual,
            })?;
        traj.t.push(k as f64 * dt);
        traj.q.push(q.clone());
        traj.p.push(p.clone());
        traj.energy.push(h.value(&q, &p));
    }
    Ok(traj)
}
