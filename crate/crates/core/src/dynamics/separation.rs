use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::hamiltonian::{PhaseFunction, TorusHamiltonian};

/// A level set of `|p|` in `T*Tⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "snake_case")]
pub enum SeparationSet {
    Sphere { radius: f64 },
    ZeroSection,
}

impl SeparationSet {
    pub fn radius(&self) -> f64 {
        match *self {
            SeparationSet::Sphere { radius } => radius,
            SeparationSet::ZeroSection => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub delta: f64,
    pub sup_inner: f64,
    pub inf_outer: f64,
    /// `false` when the extrema were estimated from samples.
    pub exact: bool,
    pub samples: usize,
}

/// `Δ = inf_{outer} H − sup_{inner} H`, exact for radial `H`, sampled otherwise.
pub fn separation(
    h: &TorusHamiltonian,
    inner: SeparationSet,
    outer: SeparationSet,
    samples: usize,
) -> Result<SeparationReport> {
    for s in [inner, outer] {
        if let SeparationSet::Sphere { radius } = s {
            if !(radius > 0.0) || !radius.is_finite() {
                return Err(Error::arg(format!("sphere radius must be positive, got {radius}")));
            }
        }
    }
    if !(inner.radius() < outer.radius()) {
        return Err(Error::arg("inner set must lie below the outer set"));
    }
    let report = if h.spec().is_radial() {
        let profile = h.spec().profile();
        let (sup_inner, inf_outer) = (profile.value(inner.radius()), profile.value(outer.radius()));
        SeparationReport {
            delta: inf_outer - sup_inner,
            sup_inner,
            inf_outer,
            exact: true,
            samples: 0,
        }
    } else {
        if samples == 0 {
            return Err(Error::arg("sampled separation needs at least one sample"));
        }
        let sup_inner = sample_values(h, inner, samples).fold(f64::NEG_INFINITY, f64::max);
        let inf_outer = sample_values(h, outer, samples).fold(f64::INFINITY, f64::min);
        SeparationReport {
            delta: inf_outer - sup_inner,
            sup_inner,
            inf_outer,
            exact: false,
            samples,
        }
    };
    if !(report.delta > 0.0) {
        return Err(Error::NotSeparating { delta: report.delta });
    }
    Ok(report)
}

/// `H` at `samples` low-discrepancy points `(q, direction)` of the set.
fn sample_values(h: &TorusHamiltonian, set: SeparationSet, samples: usize) -> impl Iterator<Item = f64> + '_ {
    let n = h.dim();
    (1..=samples).map(move |i| {
        let q: Vec<f64> = (0..n).map(|d| halton(i, PRIMES[d])).collect();
        let p = match set {
            SeparationSet::ZeroSection => vec![0.0; n],
            SeparationSet::Sphere { radius } => h.covector(radius, &direction(n, i, &PRIMES[n..])),
        };
        h.value(&q, &p)
    })
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `i` in `base`.
pub(crate) fn halton(mut i: usize, base: u32) -> f64 {
    let b = base as usize;
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Unit vector number `i` of a low-discrepancy family on `S^{n−1}`.
pub(crate) fn direction(n: usize, i: usize, bases: &[u32]) -> Vec<f64> {
    match n {
        1 => vec![if i % 2 == 0 { 1.0 } else { -1.0 }],
        2 => {
            let a = 2.0 * PI * halton(i, bases[0]);
            vec![a.cos(), a.sin()]
        }
        _ => {
            // Box–Muller on consecutive Halton coordinates
            let mut v: Vec<f64> = (0..n)
                .map(|d| {
                    let u1 = halton(i, bases[(2 * d) % bases.len()]).max(1e-12);
                    let u2 = halton(i, bases[(2 * d + 1) % bases.len()]);
                    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
                })
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            v
        }
    }
}
