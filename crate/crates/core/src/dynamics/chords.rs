//! Hamiltonian chords from the fiber over `x` to the fiber over `y`.
//!
//! A chord is a flow line `(q(t), p(t))` with `q(0) = x` and `q(T) ≡ y` mod `ℤⁿ`.
//! The search scans initial covectors on a polar grid, records near passes of the
//! lifted `q` by a translate `y + m`, then solves for `(p₀, T)` by Newton's method
//! with `|p₀|` held fixed, and finally slides `|p₀|` to shorten the best chords.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::{reduce_mod1, ManifoldPoint};

use super::hamiltonian::{PhaseFunction, TorusHamiltonian};
use super::integrator::{integrate_with, Midpoint, Scheme, Trajectory};
use super::separation::direction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Largest `|p₀|` scanned.
    pub r_max: f64,
    pub radial_points: usize,
    /// Directions per radius when `n ≥ 2` (two when `n = 1`).
    pub angular_points: usize,
    /// Coarse-scan steps over `[0, T_max]`.
    pub scan_steps: usize,
    /// Metric distance below which a pass near `y + m` becomes a candidate.
    pub coarse_tol: f64,
    /// Steps of the refining integration over `[0, T]`.
    pub refine_steps: usize,
    /// Accepted chords end within this metric distance of `y`.
    pub tol_q: f64,
    pub max_candidates: usize,
    pub newton_iter: usize,
    /// Number of best chords whose radius is refined by golden-section search.
    pub radius_refine: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            r_max: 3.0,
            radial_points: 48,
            angular_points: 96,
            scan_steps: 800,
            coarse_tol: 0.1,
            refine_steps: 1000,
            tol_q: 1e-7,
            max_candidates: 24,
            newton_iter: 30,
            radius_refine: 3,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_max > 0.0) || !self.r_max.is_finite() {
            return Err(Error::arg(format!("r_max must be positive, got {}", self.r_max)));
        }
        if self.radial_points == 0 || self.angular_points == 0 || self.scan_steps == 0 {
            return Err(Error::arg("search grid sizes must be positive"));
        }
        if self.refine_steps < 2 || self.refine_steps % 2 != 0 {
            return Err(Error::arg("refine_steps must be even and at least 2"));
        }
        if !(self.tol_q > 0.0) || !(self.coarse_tol > 0.0) {
            return Err(Error::arg("tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChordRecord {
    pub p0: Vec<f64>,
    pub time: f64,
    pub endpoint_error: f64,
    pub action: f64,
    /// `q(T) ≈ y + lattice` in the lift starting at `x`.
    pub lattice: Vec<i64>,
    /// `|p₀|`.
    pub radius: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SearchStats {
    pub grid_points: usize,
    pub scan_failures: usize,
    pub candidates: usize,
    pub refined: usize,
    pub accepted: usize,
    pub r_max: f64,
    pub t_max: f64,
    /// The best chord starts at the edge `|p₀| = r_max` of the scanned ball.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChordSearch {
    /// Accepted chords, by time then `|p₀|`.
    pub chords: Vec<ChordRecord>,
    pub stats: SearchStats,
}

impl ChordSearch {
    pub fn best(&self) -> Option<&ChordRecord> {
        self.chords.first()
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    p0: Vec<f64>,
    radius: f64,
    time: f64,
    target: Vec<f64>,
    lattice: Vec<i64>,
}

struct Solved {
    p0: Vec<f64>,
    time: f64,
    error: f64,
    radius: f64,
}

/// Searches for the chord of least time `≤ t_max` from the fiber over `x` to the fiber over `y`.
pub fn find_chord(
    h: &TorusHamiltonian,
    x: &ManifoldPoint,
    y: &ManifoldPoint,
    t_max: f64,
    cfg: &SearchConfig,
) -> Result<ChordSearch> {
    cfg.validate()?;
    let n = h.dim();
    if x.coords().len() != n || y.coords().len() != n {
        return Err(Error::arg(format!("chord endpoints must be points of T^{n}")));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::arg(format!("T_max must be positive, got {t_max}")));
    }
    let (x, y) = (x.coords(), y.coords());
    let mut stats = SearchStats {
        r_max: cfg.r_max,
        t_max,
        ..Default::default()
    };

    let grid = initial_grid(h, cfg);
    stats.grid_points = grid.len();
    let scanned: Vec<std::result::Result<Vec<Candidate>, ()>> = grid
        .par_iter()
        .map(|(r, p0)| scan(h, x, y, *r, p0, t_max, cfg))
        .collect();
    let mut candidates = Vec::new();
    for s in scanned {
        match s {
            Ok(c) => candidates.extend(c),
            Err(()) => stats.scan_failures += 1,
        }
    }
    stats.candidates = candidates.len();
    candidates.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.radius.total_cmp(&b.radius)));
    candidates.truncate(cfg.max_candidates);
    stats.refined = candidates.len();

    let solved: Vec<Option<(Solved, Candidate)>> = candidates
        .par_iter()
        .map(|c| {
            solve_at_radius(h, x, &c.target, c.radius, &c.p0, c.time, cfg)
                .filter(|s| s.time <= t_max)
                .map(|s| (s, c.clone()))
        })
        .collect();
    let mut found: Vec<(Solved, Candidate)> = solved.into_iter().flatten().collect();
    sort_solved(&mut found);
    dedupe(&mut found);

    // slide |p₀| between neighbouring grid radii to shorten the best chords
    let dr = cfg.r_max / cfg.radial_points as f64;
    let improved: Vec<Option<(Solved, Candidate)>> = found
        .par_iter()
        .take(cfg.radius_refine)
        .map(|(s, c)| refine_radius(h, x, s, c, dr, t_max, cfg).map(|r| (r, c.clone())))
        .collect();
    found.extend(improved.into_iter().flatten());
    sort_solved(&mut found);
    dedupe(&mut found);

    let mut chords = Vec::with_capacity(found.len());
    for (s, c) in &found {
        let traj = chord_trajectory(h, x, &s.p0, s.time, cfg.refine_steps)?;
        let mut record = ChordRecord {
            p0: s.p0.clone(),
            time: s.time,
            endpoint_error: s.error,
            action: 0.0,
            lattice: c.lattice.clone(),
            radius: s.radius,
        };
        record.action = chord_action(h, &record, &traj)?;
        chords.push(record);
    }
    stats.accepted = chords.len();
    stats.truncated = chords
        .first()
        .is_some_and(|c| c.radius >= cfg.r_max * (1.0 - 1e-7));
    Ok(ChordSearch { chords, stats })
}

fn sort_solved(v: &mut [(Solved, Candidate)]) {
    v.sort_by(|(a, ca), (b, cb)| {
        a.time
            .total_cmp(&b.time)
            .then(a.radius.total_cmp(&b.radius))
            .then(ca.lattice.cmp(&cb.lattice))
    });
    // equal times up to rounding: prefer the smaller covector
    let Some(best) = v.first().map(|(s, _)| s.time) else { return };
    let tied = v.iter().take_while(|(s, _)| s.time <= best * (1.0 + 1e-9)).count();
    v[..tied].sort_by(|(a, ca), (b, cb)| {
        a.radius
            .total_cmp(&b.radius)
            .then(a.time.total_cmp(&b.time))
            .then(ca.lattice.cmp(&cb.lattice))
    });
}

fn dedupe(v: &mut Vec<(Solved, Candidate)>) {
    let mut kept: Vec<(Solved, Candidate)> = Vec::with_capacity(v.len());
    for item in v.drain(..) {
        let dup = kept.iter().any(|(s, c)| {
            c.lattice == item.1.lattice
                && (s.time - item.0.time).abs() <= 1e-9 * s.time.max(1.0)
                && s.p0.iter().zip(&item.0.p0).all(|(a, b)| (a - b).abs() <= 1e-6 * (1.0 + a.abs()))
        });
        if !dup {
            kept.push(item);
        }
    }
    *v = kept;
}

fn initial_grid(h: &TorusHamiltonian, cfg: &SearchConfig) -> Vec<(f64, Vec<f64>)> {
    let n = h.dim();
    let dirs: Vec<Vec<f64>> = match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..cfg.angular_points)
            .map(|j| {
                let a = 2.0 * std::f64::consts::PI * j as f64 / cfg.angular_points as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => (1..=cfg.angular_points)
            .map(|i| direction(n, i, &[2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]))
            .collect(),
    };
    let mut grid = Vec::with_capacity(cfg.radial_points * dirs.len());
    for i in 1..=cfg.radial_points {
        let r = cfg.r_max * i as f64 / cfg.radial_points as f64;
        for u in &dirs {
            grid.push((r, h.covector(r, u)));
        }
    }
    grid
}

/// Coarse pass: integrates from `(x, p0)` and collects the first few near passes
/// of translates `y + m`, measured on straight segments between samples.
fn scan(
    h: &TorusHamiltonian,
    x: &[f64],
    y: &[f64],
    radius: f64,
    p0: &[f64],
    t_max: f64,
    cfg: &SearchConfig,
) -> std::result::Result<Vec<Candidate>, ()> {
    const EVENTS: usize = 3;
    let n = h.dim();
    let torus = h.torus();
    let dt = t_max / cfg.scan_steps as f64;
    let reach = cfg.coarse_tol / torus.lambda_min().sqrt();
    let mut stepper = Midpoint::new(h);
    let (mut q, mut p) = (x.to_vec(), p0.to_vec());
    let mut prev = q.clone();
    let mut events: Vec<Candidate> = Vec::new();
    let mut seg = vec![0.0; n];
    let mut off = vec![0.0; n];
    for k in 0..cfg.scan_steps {
        stepper.step(&mut q, &mut p, dt).map_err(|_| ())?;
        for i in 0..n {
            seg[i] = q[i] - prev[i];
        }
        let seg2 = quad(torus.metric(), &seg, &seg);
        let lo: Vec<i64> = (0..n).map(|i| (prev[i].min(q[i]) - y[i] - reach).floor() as i64).collect();
        let hi: Vec<i64> = (0..n).map(|i| (prev[i].max(q[i]) - y[i] + reach).ceil() as i64).collect();
        for_each_box(&lo, &hi, |m| {
            for i in 0..n {
                off[i] = y[i] + m[i] as f64 - prev[i];
            }
            let s = if seg2 > 0.0 {
                (quad(torus.metric(), &off, &seg) / seg2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            if s == 0.0 {
                return;
            }
            let miss: Vec<f64> = (0..n).map(|i| off[i] - s * seg[i]).collect();
            let dist = quad(torus.metric(), &miss, &miss).sqrt();
            if dist < cfg.coarse_tol {
                let time = (k as f64 + s) * dt;
                if let Some(e) = events.iter_mut().find(|e| e.lattice == m && time - e.time < 2.0 * dt) {
                    e.time = time;
                    return;
                }
                events.push(Candidate {
                    p0: p0.to_vec(),
                    radius,
                    time,
                    target: (0..n).map(|i| y[i] + m[i] as f64).collect(),
                    lattice: m.to_vec(),
                });
            }
        });
        if events.len() >= EVENTS {
            break;
        }
        prev.copy_from_slice(&q);
    }
    events.truncate(EVENTS);
    Ok(events)
}

fn quad(g: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            s += a[i] * g[i][j] * b[j];
        }
    }
    s
}

fn for_each_box(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return;
    }
    let mut m = lo.to_vec();
    loop {
        f(&m);
        let mut i = 0;
        loop {
            if i == m.len() {
                return;
            }
            m[i] += 1;
            if m[i] <= hi[i] {
                break;
            }
            m[i] = lo[i];
            i += 1;
        }
    }
}

/// Endpoint of the refining integration over `[0, time]`, or `None` on step failure.
fn endpoint(h: &TorusHamiltonian, x: &[f64], p0: &[f64], time: f64, steps: usize) -> Option<Vec<f64>> {
    let dt = time / steps as f64;
    let mut stepper = Midpoint::new(h);
    let (mut q, mut p) = (x.to_vec(), p0.to_vec());
    for _ in 0..steps {
        stepper.scheme_step(&mut q, &mut p, dt, Scheme::TripleJump).ok()?;
    }
    Some(q)
}

/// Newton's method on `(p₀, T)` for `q(T) = target`, `|p₀| = radius`.
fn solve_at_radius(
    h: &TorusHamiltonian,
    x: &[f64],
    target: &[f64],
    radius: f64,
    p_guess: &[f64],
    t_guess: f64,
    cfg: &SearchConfig,
) -> Option<Solved> {
    let n = h.dim();
    let torus = h.torus();
    let residual = |u: &[f64]| -> Option<Vec<f64>> {
        if !(u[n] > 0.0) {
            return None;
        }
        let q = endpoint(h, x, &u[..n], u[n], cfg.refine_steps)?;
        let mut r: Vec<f64> = (0..n).map(|i| q[i] - target[i]).collect();
        r.push(h.dual_norm(&u[..n]) - radius);
        Some(r)
    };
    let norm = |r: &[f64]| -> f64 {
        let pos = quad(torus.metric(), &r[..n], &r[..n]).sqrt();
        pos.max(r[n].abs())
    };
    let mut u: Vec<f64> = p_guess.to_vec();
    let scale = radius / h.dual_norm(p_guess).max(f64::MIN_POSITIVE);
    u.iter_mut().for_each(|v| *v *= scale);
    u.push(t_guess);
    let mut r = residual(&u)?;
    let mut best = norm(&r);
    let goal = 1e-3 * cfg.tol_q;
    for _ in 0..cfg.newton_iter {
        if best < goal {
            break;
        }
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for c in 0..=n {
            let e = 1e-7 * u[c].abs().max(1e-3);
            let (mut up, mut um) = (u.clone(), u.clone());
            up[c] += e;
            um[c] -= e;
            let (rp, rm) = (residual(&up)?, residual(&um)?);
            for row in 0..=n {
                jac[(row, c)] = (rp[row] - rm[row]) / (2.0 * e);
            }
        }
        let rhs = -DVector::from_column_slice(&r);
        let step = jac.clone().lu().solve(&rhs).or_else(|| jac.svd(true, true).solve(&rhs, 1e-14).ok())?;
        let mut lambda = 1.0;
        let mut moved = false;
        while lambda > 1e-4 {
            let trial: Vec<f64> = (0..=n).map(|i| u[i] + lambda * step[i]).collect();
            if let Some(rt) = residual(&trial) {
                let nt = norm(&rt);
                if nt < best {
                    u = trial;
                    r = rt;
                    best = nt;
                    moved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let q = endpoint(h, x, &u[..n], u[n], cfg.refine_steps)?;
    let reduced: Vec<f64> = q.iter().map(|v| reduce_mod1(*v)).collect();
    let target_reduced: Vec<f64> = target.iter().map(|v| reduce_mod1(*v)).collect();
    let error = torus.torus_distance(&reduced, &target_reduced);
    if error < cfg.tol_q && (r[n].abs() < 1e-9 * radius.max(1.0)) {
        Some(Solved {
            time: u[n],
            p0: u[..n].to_vec(),
            error,
            radius: h.dual_norm(&u[..n]),
        })
    } else {
        None
    }
}

/// Golden-section search on `|p₀|` in a bracket one grid spacing either side.
fn refine_radius(
    h: &TorusHamiltonian,
    x: &[f64],
    start: &Solved,
    cand: &Candidate,
    dr: f64,
    t_max: f64,
    cfg: &SearchConfig,
) -> Option<Solved> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut lo = (start.radius - dr).max(1e-3 * dr);
    let mut hi = (start.radius + dr).min(cfg.r_max);
    let mut warm = (start.p0.clone(), start.time);
    let mut best: Option<Solved> = None;
    let eval = |r: f64, warm: &mut (Vec<f64>, f64), best: &mut Option<Solved>| -> f64 {
        match solve_at_radius(h, x, &cand.target, r, &warm.0, warm.1, cfg) {
            Some(s) if s.time <= t_max => {
                let t = s.time;
                *warm = (s.p0.clone(), s.time);
                if best.as_ref().is_none_or(|b| s.time < b.time) {
                    *best = Some(s);
                }
                t
            }
            _ => f64::INFINITY,
        }
    };
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = eval(a, &mut warm, &mut best);
    let mut fb = eval(b, &mut warm, &mut best);
    for _ in 0..40 {
        if hi - lo < 1e-9 * hi {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = eval(a, &mut warm, &mut best);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = eval(b, &mut warm, &mut best);
        }
    }
    // the bracket end itself, which golden-section never evaluates
    let edge = if fa <= fb { lo } else { hi };
    eval(edge, &mut warm, &mut best);
    best.filter(|b| b.time < start.time)
}

/// Dense trajectory of a chord, for the action integral and export.
pub fn chord_trajectory(h: &TorusHamiltonian, x: &[f64], p0: &[f64], time: f64, steps: usize) -> Result<Trajectory> {
    if steps == 0 || steps % 2 != 0 {
        return Err(Error::arg("chord trajectories need an even number of steps"));
    }
    integrate_with(h, x, p0, time / steps as f64, steps, Scheme::TripleJump)
}

/// `∫ p·q̇ dt − ∫ H dt` along the chord by composite Simpson's rule.
pub fn chord_action<H: PhaseFunction + ?Sized>(h: &H, chord: &ChordRecord, traj: &Trajectory) -> Result<f64> {
    let steps = traj.len().saturating_sub(1);
    if steps == 0 || steps % 2 != 0 {
        return Err(Error::arg("action quadrature needs an even number of trajectory steps"));
    }
    let same_start = traj.p[0].len() == chord.p0.len()
        && traj.p[0]
            .iter()
            .zip(&chord.p0)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    let end = *traj.t.last().unwrap();
    if !same_start || (end - chord.time).abs() > 1e-9 * chord.time.max(1.0) {
        return Err(Error::arg("trajectory does not belong to this chord"));
    }
    let n = h.dim();
    let (mut gq, mut gp) = (vec![0.0; n], vec![0.0; n]);
    let f: Vec<f64> = (0..traj.len())
        .map(|k| {
            h.gradient(&traj.q[k], &traj.p[k], &mut gq, &mut gp);
            let pq: f64 = traj.p[k].iter().zip(&gp).map(|(a, b)| a * b).sum();
            pq - traj.energy[k]
        })
        .collect();
    let dt = end / steps as f64;
    Ok(crate::manifolds::simpson(&f, dt))
}
