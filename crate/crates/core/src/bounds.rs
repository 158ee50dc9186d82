//! Lower bounds on `pb⁺` from barcodes, interlinking constants and chord time budgets.

use std::cmp::Ordering;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::{Manifold, ManifoldPoint};
use crate::persistence::{exact_product_cmp, Bar};
use crate::wfh::wfh_barcode;

/// Which pair `(Y₀, Y₁)` is paired with the fibers `(X₀, X₁) = (T*ₓN, T*ᵧN)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum QuadrupleSets {
    /// `(Y₀, Y₁) = (S*ₐN, S*_bN)`.
    FiberFiberSpheres { a: f64, b: f64 },
    /// `(Y₀, Y₁) = (0_N, S*ₐN)`.
    FiberFiberZeroSection { a: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrupleSpec {
    pub manifold: Manifold,
    pub x: ManifoldPoint,
    pub y: ManifoldPoint,
    #[serde(flatten)]
    pub sets: QuadrupleSets,
}

impl QuadrupleSpec {
    pub fn new(manifold: Manifold, x: ManifoldPoint, y: ManifoldPoint, sets: QuadrupleSets) -> Result<Self> {
        match sets {
            QuadrupleSets::FiberFiberSpheres { a, b } => {
                if !(a > 0.0 && a < b && b.is_finite()) {
                    return Err(Error::arg(format!("need 0 < a < b, got a = {a}, b = {b}")));
                }
            }
            QuadrupleSets::FiberFiberZeroSection { a } => {
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::arg(format!("need a > 0, got {a}")));
                }
            }
        }
        manifold.distance(&x, &y)?;
        Ok(QuadrupleSpec { manifold, x, y, sets })
    }

    /// Names of `(X₀, X₁, Y₀, Y₁)`.
    pub fn set_names(&self) -> [String; 4] {
        let (y0, y1) = match self.sets {
            QuadrupleSets::FiberFiberSpheres { a, b } => (format!("S*_{a}"), format!("S*_{b}")),
            QuadrupleSets::FiberFiberZeroSection { a } => ("0_N".to_string(), format!("S*_{a}")),
        };
        ["T*_x".to_string(), "T*_y".to_string(), y0, y1]
    }
}

/// `1/(μ(b−a))` for a bar `(μ, ν]` with `b/a ≤ ν/μ`.
pub fn pb_lower_from_bar(bar: &Bar, a: f64, b: f64) -> Result<f64> {
    let mu = bar.left;
    if !(mu > 0.0) {
        return Err(Error::InvalidBar(format!(
            "bar left endpoint {mu} is not positive; a wrapped-Floer barcode has none such since pb+ is finite"
        )));
    }
    if !(a > 0.0 && a < b && b.is_finite()) {
        return Err(Error::arg(format!("need 0 < a < b, got a = {a}, b = {b}")));
    }
    // b/a ≤ ν/μ  ⟺  b·μ ≤ ν·a, decided without rounding
    if !bar.is_infinite() && exact_product_cmp(b, mu, bar.right, a) == Ordering::Greater {
        return Err(Error::Hypothesis(format!(
            "b/a = {b}/{a} exceeds the bar ratio {}/{mu}",
            bar.right
        )));
    }
    Ok(1.0 / (mu * (b - a)))
}

/// `1/(μb)` for a semi-infinite bar starting at `μ` paired with the core.
pub fn pb_lower_core(mu: f64, b: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(Error::arg(format!("need mu > 0 and b > 0, got mu = {mu}, b = {b}")));
    }
    Ok(1.0 / (mu * b))
}

pub fn kappa_from_pb(pb_lower: f64) -> Result<f64> {
    if !(pb_lower > 0.0) || !pb_lower.is_finite() {
        return Err(Error::arg(format!("pb lower bound must be positive, got {pb_lower}")));
    }
    Ok(1.0 / pb_lower)
}

pub fn chord_time_budget(kappa: f64, delta: f64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::arg(format!("kappa must be positive, got {kappa}")));
    }
    if !(delta > 0.0) {
        return Err(Error::NotSeparating { delta });
    }
    Ok(kappa / delta)
}

/// Both cotangent bounds plus how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CotangentBounds {
    pub d: f64,
    pub fibers_spheres: f64,
    pub fibers_zero_section: f64,
    /// The `(d, ∞)` bar, when the barcode certificate ran.
    pub bar: Option<Bar>,
    pub warnings: Vec<String>,
}

/// `(1/(d(b−a)), 1/(d·a))` with `d` the distance from `x` to `y`.
pub fn cotangent_bounds(m: &Manifold, x: &ManifoldPoint, y: &ManifoldPoint, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = cotangent_bounds_detailed(m, x, y, a, b)?;
    Ok((c.fibers_spheres, c.fibers_zero_section))
}

pub fn cotangent_bounds_detailed(
    m: &Manifold,
    x: &ManifoldPoint,
    y: &ManifoldPoint,
    a: f64,
    b: f64,
) -> Result<CotangentBounds> {
    if !(a > 0.0 && a < b && b.is_finite()) {
        return Err(Error::arg(format!("need 0 < a < b, got a = {a}, b = {b}")));
    }
    let d = m.distance(x, y)?;
    let mut warnings = Vec::new();
    if !m.check_nonconjugate(x, y) {
        let msg = "x and y are conjugate; barcode certificate skipped, bound taken from the formula \
                   via semi-continuity"
            .to_string();
        warn!("{msg}");
        warnings.push(msg);
        return Ok(CotangentBounds {
            d,
            fibers_spheres: 1.0 / (d * (b - a)),
            fibers_zero_section: pb_lower_core(d, a)?,
            bar: None,
            warnings,
        });
    }
    let barcode = wfh_barcode(m, x, y, 2.0 * d)?;
    let bad = barcode.nonpositive_bars();
    if !bad.is_empty() {
        let msg = format!("barcode has {} bars with nonpositive left endpoint", bad.len());
        warn!("{msg}");
        warnings.push(msg);
    }
    let bar = barcode
        .find_bar_with_ratio(f64::INFINITY)?
        .filter(|bar| bar.left == d && bar.degree == 0)
        .ok_or_else(|| Error::InconsistentDifferential(format!("no bar ({d}, inf) in degree 0")))?;
    Ok(CotangentBounds {
        d,
        fibers_spheres: pb_lower_from_bar(&bar, a, b)?,
        fibers_zero_section: pb_lower_core(bar.left, a)?,
        bar: Some(bar),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderedBound {
    pub sets: [String; 4],
    pub pb_lower: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub quadruple: QuadrupleSpec,
    pub d: f64,
    pub pb_lower: f64,
    pub kappa: f64,
    pub bar: Option<Bar>,
    /// `b/a ≤ C` for the source bar (always true for a semi-infinite bar).
    pub ratio_hypothesis: bool,
    pub basis: &'static str,
    pub both_orderings: bool,
    /// `(X₀, X₁, Y₀, Y₁)` and its anti-symmetric partner `(Y₁, Y₀, X₀, X₁)`.
    pub orderings: [OrderedBound; 2],
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn bound_report(q: &QuadrupleSpec) -> Result<BoundReport> {
    let (a, b) = match q.sets {
        QuadrupleSets::FiberFiberSpheres { a, b } => (a, b),
        // the second bound only needs a; any b > a serves for the shared computation
        QuadrupleSets::FiberFiberZeroSection { a } => (a, 2.0 * a),
    };
    let c = cotangent_bounds_detailed(&q.manifold, &q.x, &q.y, a, b)?;
    let pb_lower = match q.sets {
        QuadrupleSets::FiberFiberSpheres { .. } => c.fibers_spheres,
        QuadrupleSets::FiberFiberZeroSection { .. } => c.fibers_zero_section,
    };
    let kappa = kappa_from_pb(pb_lower)?;
    let [x0, x1, y0, y1] = q.set_names();
    let forward = OrderedBound {
        sets: [x0.clone(), x1.clone(), y0.clone(), y1.clone()],
        pb_lower,
        kappa,
    };
    let reversed = OrderedBound {
        sets: [y1, y0, x0, x1],
        pb_lower,
        kappa,
    };
    Ok(BoundReport {
        quadruple: q.clone(),
        d: c.d,
        pb_lower,
        kappa,
        bar: c.bar,
        ratio_hypothesis: true,
        basis: if c.bar.is_some() { "barcode" } else { "formula" },
        both_orderings: true,
        orderings: [forward, reversed],
        warnings: c.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn from_bar_examples() {
        let inf = Bar::infinite(0.3, 0).unwrap();
        assert!(close(pb_lower_from_bar(&inf, 1.0, 2.0).unwrap(), 1.0 / 0.3));
        // ratio exactly C passes; 1/(μ(b−a)) = 1/(1·1)
        let unit = Bar::new(1.0, 2.0, 0).unwrap();
        assert_eq!(pb_lower_from_bar(&unit, 1.0, 2.0).unwrap(), 1.0);
        let short = Bar::new(1.0, 1.5, 0).unwrap();
        assert!(matches!(pb_lower_from_bar(&short, 1.0, 2.0), Err(Error::Hypothesis(_))));
        let zero = Bar::infinite(0.0, 0).unwrap();
        assert!(matches!(pb_lower_from_bar(&zero, 1.0, 2.0), Err(Error::InvalidBar(_))));
    }

    #[test]
    fn ratio_check_is_exact() {
        // 0.1·3 rounds to 0.30000000000000004 but (0.1, 0.3] has ratio just below 3
        let bar = Bar::new(0.1, 0.3, 0).unwrap();
        assert!(pb_lower_from_bar(&bar, 1.0, 3.0).is_err());
        let bar = Bar::new(0.1, 0.30000000000000004, 0).unwrap();
        assert!(pb_lower_from_bar(&bar, 1.0, 3.0).is_ok());
    }

    #[test]
    fn core_examples() {
        assert!(close(pb_lower_core(0.3, 1.0).unwrap(), 1.0 / 0.3));
        assert_eq!(pb_lower_core(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(pb_lower_core(0.5, 2.0).unwrap(), 1.0);
        assert!(pb_lower_core(0.0, 1.0).is_err());
        assert!(pb_lower_core(1.0, -1.0).is_err());
    }

    #[test]
    fn kappa_and_budget() {
        assert!(close(kappa_from_pb(1.0 / 0.3).unwrap(), 0.3));
        assert_eq!(kappa_from_pb(1.0).unwrap(), 1.0);
        assert_eq!(kappa_from_pb(0.5).unwrap(), 2.0);
        assert!(kappa_from_pb(0.0).is_err());
        assert!(close(chord_time_budget(0.3, 3.0).unwrap(), 0.1));
        assert_eq!(chord_time_budget(1.0, 1.0).unwrap(), 1.0);
        assert!(matches!(chord_time_budget(0.3, 0.0), Err(Error::NotSeparating { .. })));
    }

    #[test]
    fn cotangent_examples() {
        let t1 = Manifold::torus(vec![vec![1.0]]).unwrap();
        let x = t1.point(&[0.0]).unwrap();
        let y = t1.point(&[0.3]).unwrap();
        let (p, q) = cotangent_bounds(&t1, &x, &y, 1.0, 2.0).unwrap();
        assert!(close(p, 1.0 / 0.3) && close(q, 1.0 / 0.3));

        let y = t1.point(&[0.5]).unwrap();
        assert_eq!(cotangent_bounds(&t1, &x, &y, 2.0, 4.0).unwrap(), (1.0, 1.0));

        let s2 = Manifold::sphere(1.0).unwrap();
        let Manifold::Sphere(s) = &s2 else { unreachable!() };
        let (x, y) = s.polar_pair(PI / 2.0).unwrap();
        let (p, q) = cotangent_bounds(&s2, &x, &y, 1.0, 3.0).unwrap();
        assert!(close(p, 1.0 / PI) && close(q, 2.0 / PI));
    }

    #[test]
    fn conjugate_falls_back_to_formula() {
        let s2 = Manifold::sphere(1.0).unwrap();
        let x = s2.point(&[0.0, 0.0, 1.0]).unwrap();
        let y = s2.point(&[0.0, 0.0, -1.0]).unwrap();
        let c = cotangent_bounds_detailed(&s2, &x, &y, 1.0, 2.0).unwrap();
        assert!(c.bar.is_none());
        assert_eq!(c.warnings.len(), 1);
        assert!(close(c.fibers_spheres, 1.0 / PI));
    }

    #[test]
    fn report_orderings_agree() {
        let t1 = Manifold::torus(vec![vec![1.0]]).unwrap();
        let x = t1.point(&[0.0]).unwrap();
        let y = t1.point(&[0.3]).unwrap();
        let q = QuadrupleSpec::new(t1, x, y, QuadrupleSets::FiberFiberSpheres { a: 1.0, b: 2.0 }).unwrap();
        let r = bound_report(&q).unwrap();
        assert_eq!(r.kappa, 1.0 / r.pb_lower);
        assert_eq!(r.orderings[0].pb_lower, r.orderings[1].pb_lower);
        assert_eq!(r.orderings[1].sets[0], "S*_2");
        assert_eq!(r.basis, "barcode");
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["both_orderings"], true);
        assert_eq!(v["quadruple"]["variant"], "fiber_fiber_spheres");
        assert_eq!(v["bar"]["right"], "inf");
    }

    #[test]
    fn quadruple_validation() {
        let t1 = Manifold::torus(vec![vec![1.0]]).unwrap();
        let x = t1.point(&[0.0]).unwrap();
        let y = t1.point(&[0.3]).unwrap();
        let bad = QuadrupleSets::FiberFiberSpheres { a: 2.0, b: 1.0 };
        assert!(QuadrupleSpec::new(t1.clone(), x.clone(), y, bad).is_err());
        let same = QuadrupleSets::FiberFiberZeroSection { a: 1.0 };
        assert!(QuadrupleSpec::new(t1, x.clone(), x, same).is_err());
    }

    proptest! {
        #[test]
        fn barcode_bound_matches_formula(y in 0.01f64..0.99, a in 0.1f64..5.0, gap in 0.01f64..5.0) {
            let t1 = Manifold::torus(vec![vec![1.7]]).unwrap();
            let x = t1.point(&[0.0]).unwrap();
            let y = t1.point(&[y]).unwrap();
            let d = t1.distance(&x, &y).unwrap();
            let b = a + gap;
            let bar = wfh_barcode(&t1, &x, &y, 2.0 * d).unwrap().bars()[0];
            let via_bar = pb_lower_from_bar(&bar, a, b).unwrap();
            prop_assert_eq!(via_bar, 1.0 / (d * (b - a)));
            prop_assert_eq!(cotangent_bounds(&t1, &x, &y, a, b).unwrap().0, via_bar);
        }

        #[test]
        fn bound_monotone(mu in 0.01f64..5.0, dmu in 0.0f64..5.0, a in 0.1f64..5.0, g in 0.01f64..5.0, dg in 0.0f64..5.0) {
            let bar = Bar::infinite(mu, 0).unwrap();
            let wider = pb_lower_from_bar(&bar, a, a + g + dg).unwrap();
            let base = pb_lower_from_bar(&bar, a, a + g).unwrap();
            prop_assert!(wider <= base);
            let later = pb_lower_from_bar(&Bar::infinite(mu + dmu, 0).unwrap(), a, a + g).unwrap();
            prop_assert!(later <= base);
        }
    }
}
