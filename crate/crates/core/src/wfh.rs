//! Wrapped-Floer barcodes of two cotangent fibers, read off the filtered Morse
//! complex of the path space from `x` to `y` filtered by length.

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifolds::{ClassTag, GeodesicRecord, Manifold, ManifoldPoint};
use crate::persistence::{reduce_barcode, Barcode, FilteredComplex, Generator};

/// Filtered Morse complex of the path space, one generator per geodesic shorter than `cutoff`.
#[derive(Debug, Clone)]
pub struct PathSpaceComplex {
    pub complex: FilteredComplex,
    pub records: Vec<GeodesicRecord>,
    pub manifold: String,
    pub x: ManifoldPoint,
    pub y: ManifoldPoint,
    pub cutoff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WfhReport {
    pub manifold: Manifold,
    pub x: ManifoldPoint,
    pub y: ManifoldPoint,
    pub cutoff: f64,
    pub distance: f64,
    pub bars: Barcode,
    /// Semi-infinite bars are only known to extend at least this far.
    pub certified_to: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn path_space_complex(
    m: &Manifold,
    x: &ManifoldPoint,
    y: &ManifoldPoint,
    cutoff: f64,
) -> Result<PathSpaceComplex> {
    let (complex, _) = build(m, x, y, cutoff)?;
    Ok(complex)
}

fn build(
    m: &Manifold,
    x: &ManifoldPoint,
    y: &ManifoldPoint,
    cutoff: f64,
) -> Result<(PathSpaceComplex, Vec<String>)> {
    if !m.check_nonconjugate(x, y) {
        return Err(Error::NonMorse(format!(
            "x and y are conjugate on {}; the energy functional is not Morse",
            m.id()
        )));
    }
    let d = m.distance(x, y)?;
    let mut warnings = Vec::new();
    if !(cutoff > d) {
        let msg = format!("cutoff {cutoff} does not exceed the distance {d}; the complex is empty");
        warn!("{msg}");
        warnings.push(msg);
    }
    let records = m.geodesic_spectrum(x, y, cutoff)?;
    check_zero_differential(m, &records)?;
    let generators = records
        .iter()
        .map(|r| Generator {
            id: match &r.class_tag {
                ClassTag::Lattice(k) => format!("k{k:?}"),
                ClassTag::Wrap(w) => format!("m{w}"),
            },
            degree: r.morse_index as i32,
            filtration: r.length,
        })
        .collect::<Vec<_>>();
    let complex = FilteredComplex::free(generators);
    Ok((
        PathSpaceComplex {
            complex,
            records,
            manifold: m.id(),
            x: x.clone(),
            y: y.clone(),
            cutoff,
        },
        warnings,
    ))
}

/// The shipped models have a vanishing Morse differential: on a flat torus every
/// geodesic has index 0, and on the round sphere there is exactly one geodesic
/// per index while the based loop space has rank one in each degree. Anything
/// else would need a genuine differential, so it is rejected here.
pub fn check_zero_differential(m: &Manifold, records: &[GeodesicRecord]) -> Result<()> {
    match m {
        Manifold::Torus(_) => {
            if let Some(r) = records.iter().find(|r| r.morse_index != 0) {
                return Err(Error::InconsistentDifferential(format!(
                    "flat torus geodesic with index {}",
                    r.morse_index
                )));
            }
        }
        Manifold::Sphere(_) => {
            for (k, r) in records.iter().enumerate() {
                if r.morse_index as usize != k {
                    return Err(Error::InconsistentDifferential(format!(
                        "sphere geodesic {k} has index {}, expected one generator per degree",
                        r.morse_index
                    )));
                }
            }
        }
    }
    Ok(())
}

pub fn wfh_barcode(m: &Manifold, x: &ManifoldPoint, y: &ManifoldPoint, cutoff: f64) -> Result<Barcode> {
    Ok(wfh_report(m, x, y, cutoff)?.bars)
}

pub fn wfh_report(m: &Manifold, x: &ManifoldPoint, y: &ManifoldPoint, cutoff: f64) -> Result<WfhReport> {
    let (psc, warnings) = build(m, x, y, cutoff)?;
    let bars = reduce_barcode(&psc.complex)?;
    let distance = m.distance(x, y)?;
    if cutoff > distance {
        let first = bars.in_degree(0).next();
        if first.map(|b| b.left != distance || !b.is_infinite()) != Some(false) {
            return Err(Error::InconsistentDifferential(format!(
                "barcode lacks the bar ({distance}, inf) in degree 0"
            )));
        }
    }
    Ok(WfhReport {
        manifold: m.clone(),
        x: x.clone(),
        y: y.clone(),
        cutoff,
        distance,
        bars,
        certified_to: cutoff,
        warnings,
    })
}

impl WfhReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}
