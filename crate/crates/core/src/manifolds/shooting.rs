//! Numerical shooting for the two-point geodesic problem.
//!
//! This path never consults the closed-form spectra: it integrates the geodesic
//! equation with RK4, Newton-refines the initial velocity, measures length as an
//! arc-length integral and reads the Morse index off the zeros of a Jacobi field.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::sphere::cross;
use super::{ClassTag, GeodesicRecord, Manifold, ManifoldPoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ShootConfig {
    /// RK4 steps over the unit parameter interval.
    pub steps: usize,
    pub max_iter: usize,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            steps: 4000,
            max_iter: 60,
        }
    }
}

/// Finds the geodesic from `x` to `y` in the class `class_tag` to endpoint accuracy `tol`.
pub fn shoot_geodesic_bvp(
    m: &Manifold,
    x: &ManifoldPoint,
    y: &ManifoldPoint,
    class_tag: &ClassTag,
    tol: f64,
) -> Result<GeodesicRecord> {
    ShootConfig::default().shoot(m, x, y, class_tag, tol)
}

struct Path {
    pos: Vec<Vec<f64>>,
    vel: Vec<Vec<f64>>,
}

impl ShootConfig {
    pub fn shoot(
        &self,
        m: &Manifold,
        x: &ManifoldPoint,
        y: &ManifoldPoint,
        class_tag: &ClassTag,
        tol: f64,
    ) -> Result<GeodesicRecord> {
        if self.steps < 2 || self.steps % 2 != 0 {
            return Err(Error::arg("shooting needs an even number of steps"));
        }
        match (m, class_tag) {
            (Manifold::Torus(t), ClassTag::Lattice(k)) => {
                if k.len() != t.dim() {
                    return Err(Error::arg("lattice class has the wrong dimension"));
                }
                let target: Vec<f64> = (0..t.dim()).map(|i| y.coords()[i] + k[i] as f64).collect();
                let start = x.coords().to_vec();
                let accel = |_: &[f64], _: &[f64]| vec![0.0; start.len()];
                let shoot = |v0: &[f64]| self.integrate(&start, v0, &accel);
                let residual = |v0: &[f64]| -> Vec<f64> {
                    let end = shoot(v0).pos.pop().unwrap();
                    end.iter().zip(&target).map(|(a, b)| a - b).collect()
                };
                let v0 = newton(vec![0.0; t.dim()], residual, tol, self.max_iter, |_| {})?;
                let path = shoot(&v0);
                let speeds: Vec<f64> = path.vel.iter().map(|v| t.norm(v)).collect();
                let length = simpson(&speeds, 1.0 / self.steps as f64);
                let index = self.jacobi_zero_count(length, |_| 0.0);
                Ok(GeodesicRecord {
                    length,
                    morse_index: index,
                    class_tag: class_tag.clone(),
                })
            }
            (Manifold::Sphere(s), &ClassTag::Wrap(wrap)) => {
                if !s.check_nonconjugate(x, y) {
                    return Err(Error::NonMorse("x and y are conjugate on the sphere".into()));
                }
                let r = s.radius();
                let xs: Vec<f64> = x.coords().iter().map(|c| c * r).collect();
                let ys: Vec<f64> = y.coords().iter().map(|c| c * r).collect();
                let (a, b) = (x.coords(), y.coords());
                let dot: f64 = (0..3).map(|i| a[i] * b[i]).sum();
                let mut e1: Vec<f64> = (0..3).map(|i| b[i] - dot * a[i]).collect();
                let n1 = e1.iter().map(|v| v * v).sum::<f64>().sqrt();
                e1.iter_mut().for_each(|v| *v /= n1);
                let e2 = cross(a, &e1).to_vec();

                // the wrap-m geodesic has length in (mπR, (m+1)πR)
                let lo = wrap as f64 * PI * r;
                let hi = (wrap + 1) as f64 * PI * r;
                let margin = 1e-9 * hi;
                let accel = |p: &[f64], v: &[f64]| {
                    let vv: f64 = v.iter().map(|c| c * c).sum();
                    let pp: f64 = p.iter().map(|c| c * c).sum();
                    p.iter().map(|c| -vv / pp * c).collect::<Vec<f64>>()
                };
                let velocity = |u: &[f64]| -> Vec<f64> {
                    (0..3).map(|i| u[1] * (u[0].cos() * e1[i] + u[0].sin() * e2[i])).collect()
                };
                let shoot = |u: &[f64]| self.integrate(&xs, &velocity(u), &accel);
                let residual = |u: &[f64]| -> Vec<f64> {
                    let end = shoot(u).pos.pop().unwrap();
                    (0..3).map(|i| end[i] - ys[i]).collect()
                };
                let guess_dir = if wrap % 2 == 0 { 0.0 } else { PI };
                let u0 = vec![guess_dir, 0.5 * (lo + hi)];
                let u = newton(u0, residual, tol, self.max_iter, |u| {
                    u[1] = u[1].clamp(lo + margin, hi - margin);
                })?;
                let path = shoot(&u);
                let speeds: Vec<f64> = path
                    .vel
                    .iter()
                    .map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
                    .collect();
                let length = simpson(&speeds, 1.0 / self.steps as f64);
                let pos = &path.pos;
                let n = self.steps;
                let curvature = |s_frac: f64| {
                    let i = ((s_frac * n as f64).round() as usize).min(n);
                    1.0 / pos[i].iter().map(|c| c * c).sum::<f64>()
                };
                let index = self.jacobi_zero_count(length, curvature);
                Ok(GeodesicRecord {
                    length,
                    morse_index: index,
                    class_tag: class_tag.clone(),
                })
            }
            _ => Err(Error::arg("class tag does not match the manifold")),
        }
    }

    fn integrate(&self, start: &[f64], v0: &[f64], accel: &dyn Fn(&[f64], &[f64]) -> Vec<f64>) -> Path {
        let h = 1.0 / self.steps as f64;
        let d = start.len();
        let mut pos = Vec::with_capacity(self.steps + 1);
        let mut vel = Vec::with_capacity(self.steps + 1);
        let (mut p, mut v) = (start.to_vec(), v0.to_vec());
        pos.push(p.clone());
        vel.push(v.clone());
        let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { (0..d).map(|i| a[i] + s * b[i]).collect() };
        for _ in 0..self.steps {
            let k1p = v.clone();
            let k1v = accel(&p, &v);
            let (p2, v2) = (axpy(&p, 0.5 * h, &k1p), axpy(&v, 0.5 * h, &k1v));
            let k2p = v2.clone();
            let k2v = accel(&p2, &v2);
            let (p3, v3) = (axpy(&p, 0.5 * h, &k2p), axpy(&v, 0.5 * h, &k2v));
            let k3p = v3.clone();
            let k3v = accel(&p3, &v3);
            let (p4, v4) = (axpy(&p, h, &k3p), axpy(&v, h, &k3v));
            let k4p = v4.clone();
            let k4v = accel(&p4, &v4);
            for i in 0..d {
                p[i] += h / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
                v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
            }
            pos.push(p.clone());
            vel.push(v.clone());
        }
        Path { pos, vel }
    }

    /// Sign changes of `J` on `(0, length]` where `J'' + K J = 0`, `J(0) = 0`, `J'(0) = 1`,
    /// in unit-speed parametrization. `curvature` takes the fraction `s / length`.
    fn jacobi_zero_count(&self, length: f64, curvature: impl Fn(f64) -> f64) -> u32 {
        let n = self.steps;
        let h = length / n as f64;
        let (mut j, mut dj) = (0.0f64, 1.0f64);
        let mut prev_sign = 1.0f64;
        let mut count = 0;
        for i in 0..n {
            let k0 = curvature(i as f64 / n as f64);
            let kh = curvature((i as f64 + 0.5) / n as f64);
            let k1 = curvature((i + 1) as f64 / n as f64);
            let a1 = (dj, -k0 * j);
            let a2 = (dj + 0.5 * h * a1.1, -kh * (j + 0.5 * h * a1.0));
            let a3 = (dj + 0.5 * h * a2.1, -kh * (j + 0.5 * h * a2.0));
            let a4 = (dj + h * a3.1, -k1 * (j + h * a3.0));
            j += h / 6.0 * (a1.0 + 2.0 * a2.0 + 2.0 * a3.0 + a4.0);
            dj += h / 6.0 * (a1.1 + 2.0 * a2.1 + 2.0 * a3.1 + a4.1);
            if j != 0.0 && j.signum() != prev_sign {
                count += 1;
                prev_sign = j.signum();
            }
        }
        count
    }
}

/// Composite Simpson rule on equally spaced samples (even number of intervals).
pub(crate) fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    debug_assert!(n % 2 == 0);
    let mut s = f[0] + f[n];
    for (i, v) in f.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Gauss-Newton with finite-difference Jacobian and step halving.
fn newton(
    mut u: Vec<f64>,
    residual: impl Fn(&[f64]) -> Vec<f64>,
    tol: f64,
    max_iter: usize,
    project: impl Fn(&mut Vec<f64>),
) -> Result<Vec<f64>> {
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut r = residual(&u);
    let mut best = norm(&r);
    for _ in 0..max_iter {
        if best < tol {
            return Ok(u);
        }
        let (nr, nu) = (r.len(), u.len());
        let mut jac = DMatrix::zeros(nr, nu);
        for c in 0..nu {
            let h = 1e-7 * u[c].abs().max(1.0);
            let mut up = u.clone();
            up[c] += h;
            let mut um = u.clone();
            um[c] -= h;
            let (rp, rm) = (residual(&up), residual(&um));
            for row in 0..nr {
                jac[(row, c)] = (rp[row] - rm[row]) / (2.0 * h);
            }
        }
        let rv = DVector::from_column_slice(&r);
        let step = match jac.clone().svd(true, true).solve(&(-rv), 1e-14) {
            Ok(s) => s,
            Err(_) => break,
        };
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-6 {
            let mut trial: Vec<f64> = (0..nu).map(|i| u[i] + lambda * step[i]).collect();
            project(&mut trial);
            let rt = residual(&trial);
            let nt = norm(&rt);
            if nt < best {
                u = trial;
                r = rt;
                best = nt;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if best < tol {
        Ok(u)
    } else {
        Err(Error::NoConvergence {
            what: "geodesic shooting".into(),
            residual: best,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_class_one() {
        let m = Manifold::torus(vec![vec![1.0]]).unwrap();
        let x = m.point(&[0.0]).unwrap();
        let y = m.point(&[0.3]).unwrap();
        let g = shoot_geodesic_bvp(&m, &x, &y, &ClassTag::Lattice(vec![1]), 1e-12).unwrap();
        assert!((g.length - 1.3).abs() < 1e-9, "{}", g.length);
        assert_eq!(g.morse_index, 0);
    }

    #[test]
    fn sphere_second_geodesic() {
        let m = Manifold::sphere(1.0).unwrap();
        let Manifold::Sphere(s) = &m else { unreachable!() };
        let (x, y) = s.polar_pair(PI / 2.0).unwrap();
        let g = shoot_geodesic_bvp(&m, &x, &y, &ClassTag::Wrap(1), 1e-10).unwrap();
        assert!((g.length - 1.5 * PI).abs() < 1e-6, "{}", g.length);
        assert_eq!(g.morse_index, 1);
    }

    #[test]
    fn sphere_minimizer_radius_two() {
        let m = Manifold::sphere(2.0).unwrap();
        let Manifold::Sphere(s) = &m else { unreachable!() };
        let (x, y) = s.polar_pair(1.0).unwrap();
        let g = shoot_geodesic_bvp(&m, &x, &y, &ClassTag::Wrap(0), 1e-10).unwrap();
        assert!((g.length - 2.0).abs() < 1e-6, "{}", g.length);
        assert_eq!(g.morse_index, 0);
    }

    #[test]
    fn reproduces_every_spectrum_record() {
        let cases = [
            Manifold::sphere(1.0).unwrap(),
            Manifold::sphere(0.7).unwrap(),
            Manifold::torus(vec![vec![2.0, 0.3], vec![0.3, 0.5]]).unwrap(),
        ];
        for m in cases {
            let (x, y) = match &m {
                Manifold::Sphere(_) => (m.point(&[0.1, 0.2, 0.9]).unwrap(), m.point(&[0.8, -0.3, 0.1]).unwrap()),
                Manifold::Torus(_) => (m.point(&[0.1, 0.7]).unwrap(), m.point(&[0.65, 0.2]).unwrap()),
            };
            for rec in m.geodesic_spectrum(&x, &y, 9.0).unwrap() {
                let g = shoot_geodesic_bvp(&m, &x, &y, &rec.class_tag, 1e-10).unwrap();
                assert!((g.length - rec.length).abs() < 1e-6, "{:?} vs {:?}", g, rec);
                assert_eq!(g.morse_index, rec.morse_index);
            }
        }
    }

    #[test]
    fn mismatched_tag_is_an_argument_error() {
        let m = Manifold::sphere(1.0).unwrap();
        let x = m.point(&[0.0, 0.0, 1.0]).unwrap();
        let y = m.point(&[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            shoot_geodesic_bvp(&m, &x, &y, &ClassTag::Lattice(vec![0]), 1e-9),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn non_convergence_reports_residual() {
        let m = Manifold::sphere(1.0).unwrap();
        let x = m.point(&[0.0, 0.0, 1.0]).unwrap();
        let y = m.point(&[1.0, 0.0, 0.0]).unwrap();
        let cfg = ShootConfig { steps: 8, max_iter: 1 };
        match cfg.shoot(&m, &x, &y, &ClassTag::Wrap(3), 1e-15) {
            Err(Error::NoConvergence { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected no-convergence, got {other:?}"),
        }
    }
}
