use serde::{Deserialize, Serialize};

use crate::bounds::{bound_report, chord_time_budget, QuadrupleSets, QuadrupleSpec};
use crate::error::{Error, Result};
use crate::manifolds::Manifold;

use super::chords::{find_chord, ChordRecord, SearchConfig, SearchStats};
use super::hamiltonian::{HamiltonianSpec, TorusHamiltonian};
use super::separation::{separation, SeparationReport, SeparationSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    /// Search horizon; `budget·(1 + margin)` when absent.
    pub t_max: Option<f64>,
    pub margin: f64,
    /// A chord confirms when its time is at most `budget·(1 + tol_t)`.
    pub tol_t: f64,
    /// Sample count for the separation of non-radial Hamiltonians.
    pub samples: usize,
    /// Covector radius of the scan. When absent: the outer radius for radial `H`,
    /// where the mean-value theorem places a fast enough chord, and one more for
    /// perturbed `H`.
    pub r_max: Option<f64>,
    pub search: SearchConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            t_max: None,
            margin: 0.25,
            tol_t: 1e-2,
            samples: 4096,
            r_max: None,
            search: SearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Confirmed,
    Inconclusive,
    Anomaly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub hamiltonian: HamiltonianSpec,
    pub quadruple: QuadrupleSpec,
    pub delta: f64,
    pub kappa: f64,
    pub budget: f64,
    pub t_max: f64,
    pub separation: SeparationReport,
    pub chord: Option<ChordRecord>,
    pub verdict: Verdict,
    pub search_stats: SearchStats,
}

/// Checks that `h` has a chord between the fibers of `quadruple` within the time
/// budget `κ/Δ` implied by its separation of `(Y₀, Y₁)`.
pub fn verify_interlinking(
    h: &TorusHamiltonian,
    quadruple: &QuadrupleSpec,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    match &quadruple.manifold {
        Manifold::Torus(t) if t == h.torus() => {}
        Manifold::Torus(_) => return Err(Error::arg("hamiltonian and quadruple live on different tori")),
        Manifold::Sphere(_) => return Err(Error::arg("chord search is only available on flat tori")),
    }
    if !(cfg.margin >= 0.0) || !(cfg.tol_t >= 0.0) {
        return Err(Error::arg("margin and tol_t must be nonnegative"));
    }
    let (inner, outer, top) = match quadruple.sets {
        QuadrupleSets::FiberFiberSpheres { a, b } => {
            (SeparationSet::Sphere { radius: a }, SeparationSet::Sphere { radius: b }, b)
        }
        QuadrupleSets::FiberFiberZeroSection { a } => (SeparationSet::ZeroSection, SeparationSet::Sphere { radius: a }, a),
    };
    let sep = separation(h, inner, outer, cfg.samples)?;
    let bounds = bound_report(quadruple)?;
    let budget = chord_time_budget(bounds.kappa, sep.delta)?;
    let t_max = cfg.t_max.unwrap_or(budget * (1.0 + cfg.margin));
    let search = SearchConfig {
        r_max: cfg
            .r_max
            .unwrap_or(if h.spec().is_radial() { top } else { top + 1.0 }),
        ..cfg.search.clone()
    };
    let found = find_chord(h, &quadruple.x, &quadruple.y, t_max, &search)?;
    let chord = found.chords.into_iter().next();
    let verdict = match &chord {
        None => Verdict::Inconclusive,
        Some(c) if c.time <= budget * (1.0 + cfg.tol_t) => Verdict::Confirmed,
        Some(_) => Verdict::Anomaly,
    };
    Ok(VerificationReport {
        hamiltonian: h.spec().clone(),
        quadruple: quadruple.clone(),
        delta: sep.delta,
        kappa: bounds.kappa,
        budget,
        t_max,
        separation: sep,
        chord,
        verdict,
        search_stats: found.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::hamiltonian::RadialProfile;
    use crate::manifolds::FlatTorus;

    fn circle(sets: QuadrupleSets) -> QuadrupleSpec {
        let m = Manifold::torus(vec![vec![1.0]]).unwrap();
        let (x, y) = (m.point(&[0.0]).unwrap(), m.point(&[0.3]).unwrap());
        QuadrupleSpec::new(m, x, y, sets).unwrap()
    }

    fn power(coef: f64, exponent: f64) -> TorusHamiltonian {
        let spec = HamiltonianSpec::radial(RadialProfile::Power { coef, exponent });
        TorusHamiltonian::new(spec, &FlatTorus::standard(1)).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn quadratic_confirms_inside_budget() {
        let q = circle(QuadrupleSets::FiberFiberSpheres { a: 1.0, b: 2.0 });
        let r = verify_interlinking(&power(1.0, 2.0), &q, &VerifyConfig::default()).unwrap();
        assert!(close(r.delta, 3.0) && close(r.kappa, 0.3) && close(r.budget, 0.1));
        assert_eq!(r.verdict, Verdict::Confirmed);
        let c = r.chord.unwrap();
        assert!((c.time - 0.075).abs() < 1e-8, "{}", c.time);
    }

    #[test]
    fn linear_confirms_at_the_boundary() {
        let q = circle(QuadrupleSets::FiberFiberSpheres { a: 1.0, b: 2.0 });
        let r = verify_interlinking(&power(1.0, 1.0), &q, &VerifyConfig::default()).unwrap();
        assert!(close(r.delta, 1.0) && close(r.budget, 0.3));
        assert_eq!(r.verdict, Verdict::Confirmed);
        assert!((r.chord.unwrap().time - 0.3).abs() < 1e-8);
    }

    #[test]
    fn zero_section_variant() {
        let q = circle(QuadrupleSets::FiberFiberZeroSection { a: 1.0 });
        let r = verify_interlinking(&power(1.0, 2.0), &q, &VerifyConfig::default()).unwrap();
        assert!(close(r.delta, 1.0) && close(r.kappa, 0.3) && close(r.budget, 0.3));
        assert_eq!(r.verdict, Verdict::Confirmed);
        assert!((r.chord.unwrap().time - 0.15).abs() < 1e-8);
        let wide = VerifyConfig {
            r_max: Some(2.0),
            ..Default::default()
        };
        let r = verify_interlinking(&power(1.0, 2.0), &q, &wide).unwrap();
        assert!((r.chord.unwrap().time - 0.075).abs() < 1e-8);
    }

    #[test]
    fn flat_hamiltonian_is_rejected_before_search() {
        let q = circle(QuadrupleSets::FiberFiberSpheres { a: 1.0, b: 2.0 });
        let e = verify_interlinking(&power(1.0, 0.0), &q, &VerifyConfig::default());
        assert!(matches!(e, Err(Error::NotSeparating { .. })));
    }

    #[test]
    fn short_horizon_is_inconclusive() {
        let q = circle(QuadrupleSets::FiberFiberSpheres { a: 1.0, b: 2.0 });
        let cfg = VerifyConfig {
            t_max: Some(0.05),
            ..Default::default()
        };
        let r = verify_interlinking(&power(1.0, 2.0), &q, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.chord.is_none());
    }

    #[test]
    fn slow_chords_are_anomalies() {
        let q = circle(QuadrupleSets::FiberFiberSpheres { a: 1.0, b: 2.0 });
        // only |p| ≤ 0.5 is scanned, where h′ ≤ 1 and chords take at least 0.3
        let cfg = VerifyConfig {
            t_max: Some(1.0),
            r_max: Some(0.5),
            ..Default::default()
        };
        let r = verify_interlinking(&power(1.0, 2.0), &q, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Anomaly);
    }

    #[test]
    fn report_json_shape() {
        let q = circle(QuadrupleSets::FiberFiberSpheres { a: 1.0, b: 2.0 });
        let r = verify_interlinking(&power(1.0, 2.0), &q, &VerifyConfig::default()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["hamiltonian", "quadruple", "delta", "kappa", "budget", "chord", "verdict", "search_stats"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["verdict"], "CONFIRMED");
    }
}
