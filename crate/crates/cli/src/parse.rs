//! Text forms of manifolds, points and Hamiltonians accepted on the command line.

use interlink::dynamics::{AngularTerm, Bump, HamiltonianSpec, RadialProfile};
use interlink::error::{Error, Result};
use interlink::manifolds::Manifold;
use interlink::spline::MonotoneSpline;

fn arg(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub fn number(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| arg(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(arg(format!("not a finite number: {s:?}")));
    }
    Ok(v)
}

/// `"0.1,0.2"` → `[0.1, 0.2]`.
pub fn list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(number).collect()
}

/// `"1,0;0,2"` → `[[1,0],[0,2]]`.
pub fn matrix(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';').map(list).collect()
}

/// `t1`, `t2`, …, `tN` (flat torus with `metric`, identity by default) or `s2`.
pub fn manifold(kind: &str, metric: Option<&str>, radius: f64) -> Result<Manifold> {
    let kind = kind.trim().to_ascii_lowercase();
    if kind == "s2" {
        if metric.is_some() {
            return Err(arg("--metric applies to tori only"));
        }
        return Manifold::sphere(radius);
    }
    let n: usize = kind
        .strip_prefix('t')
        .and_then(|d| d.parse().ok())
        .filter(|n| *n >= 1)
        .ok_or_else(|| arg(format!("unknown manifold {kind:?}; expected t1, t2, …, or s2")))?;
    let g = match metric {
        Some(m) => matrix(m)?,
        None => (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
    };
    if g.len() != n {
        return Err(arg(format!("metric is {}×{}, manifold is t{n}", g.len(), g.len())));
    }
    Manifold::torus(g)
}

/// Hamiltonian specs:
/// - `radial:r^2`, `radial:0.5*r^3`, `radial:r`, `radial:2` (constant);
/// - `spline:knots=0,1,2;slopes=0,1,3[;value0=0]`;
/// - `perturbed:<radial>;eps=0.1;wave=1[,0];cos=0;sin=1;center=1.5;width=1`;
/// - a JSON object in the serialized form.
pub fn hamiltonian(s: &str) -> Result<HamiltonianSpec> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| arg(format!("hamiltonian JSON: {e}")));
    }
    let (family, body) = s
        .split_once(':')
        .ok_or_else(|| arg(format!("hamiltonian {s:?} needs a family prefix (radial:, spline:, perturbed:)")))?;
    match family.trim() {
        "radial" => Ok(HamiltonianSpec::radial(power(body)?)),
        "spline" => Ok(HamiltonianSpec::radial(spline(body)?)),
        "perturbed" => perturbed(body),
        other => Err(arg(format!("unknown hamiltonian family {other:?}"))),
    }
}

fn power(s: &str) -> Result<RadialProfile> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let (coef, rest) = match s.split_once('*') {
        Some((c, r)) => (number(c)?, r.to_string()),
        None if s.starts_with('r') => (1.0, s.clone()),
        None => (number(&s)?, "r^0".to_string()),
    };
    let exponent = match rest.as_str() {
        "r" => 1.0,
        r => number(
            r.strip_prefix("r^")
                .ok_or_else(|| arg(format!("radial profile {s:?} must look like c*r^k")))?,
        )?,
    };
    let p = RadialProfile::Power { coef, exponent };
    p.validate()?;
    Ok(p)
}

fn fields(s: &str) -> Result<Vec<(String, String)>> {
    s.split(';')
        .filter(|f| !f.trim().is_empty())
        .map(|f| {
            f.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| arg(format!("expected key=value, got {f:?}")))
        })
        .collect()
}

fn spline(s: &str) -> Result<RadialProfile> {
    let (mut knots, mut slopes, mut value0) = (None, None, 0.0);
    for (k, v) in fields(s)? {
        match k.as_str() {
            "knots" => knots = Some(list(&v)?),
            "slopes" => slopes = Some(list(&v)?),
            "value0" => value0 = number(&v)?,
            _ => return Err(arg(format!("unknown spline field {k:?}"))),
        }
    }
    let knots = knots.ok_or_else(|| arg("spline needs knots="))?;
    let slopes = slopes.ok_or_else(|| arg("spline needs slopes="))?;
    Ok(RadialProfile::Spline(MonotoneSpline::new(knots, slopes, value0)?))
}

fn perturbed(s: &str) -> Result<HamiltonianSpec> {
    let (base, rest) = s.split_once(';').unwrap_or((s, ""));
    let profile = power(base)?;
    let (mut eps, mut wave, mut cos, mut sin) = (None, None, 0.0, 0.0);
    let (mut center, mut width) = (None, None);
    for (k, v) in fields(rest)? {
        match k.as_str() {
            "eps" => eps = Some(number(&v)?),
            "wave" => {
                let w = v
                    .split(',')
                    .map(|x| x.trim().parse::<i32>().map_err(|_| arg(format!("wave entries are integers, got {x:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                wave = Some(w);
            }
            "cos" => cos = number(&v)?,
            "sin" => sin = number(&v)?,
            "center" => center = Some(number(&v)?),
            "width" => width = Some(number(&v)?),
            _ => return Err(arg(format!("unknown perturbation field {k:?}"))),
        }
    }
    let need = |o: Option<f64>, name: &str| o.ok_or_else(|| arg(format!("perturbation needs {name}=")));
    Ok(HamiltonianSpec::RadialPerturbed {
        profile,
        eps: need(eps, "eps")?,
        angular: vec![AngularTerm {
            wave: wave.ok_or_else(|| arg("perturbation needs wave="))?,
            cos,
            sin,
        }],
        bump: Bump {
            center: need(center, "center")?,
            width: need(width, "width")?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_forms() {
        let p = |s| match hamiltonian(s).unwrap() {
            HamiltonianSpec::Radial { profile: RadialProfile::Power { coef, exponent } } => (coef, exponent),
            other => panic!("{other:?}"),
        };
        assert_eq!(p("radial:r^2"), (1.0, 2.0));
        assert_eq!(p("radial:0.5*r^3"), (0.5, 3.0));
        assert_eq!(p("radial:r"), (1.0, 1.0));
        assert_eq!(p("radial:2*r"), (2.0, 1.0));
        assert_eq!(p("radial:2"), (2.0, 0.0));
        assert!(hamiltonian("radial:r^0.5").is_err());
        assert!(hamiltonian("r^2").is_err());
        assert!(hamiltonian("cubic:r^3").is_err());
    }

    #[test]
    fn spline_and_perturbed_forms() {
        let h = hamiltonian("spline:knots=0,1,2;slopes=0,1,3").unwrap();
        assert!(h.is_radial());
        let h = hamiltonian("perturbed:r^2;eps=0.1;wave=1;sin=1;center=1.5;width=1").unwrap();
        assert!(!h.is_radial());
        assert!(hamiltonian("perturbed:r^2;eps=0.1").is_err());
        let json = serde_json::to_string(&h).unwrap();
        assert_eq!(hamiltonian(&json).unwrap(), h);
    }

    #[test]
    fn manifolds() {
        assert!(matches!(manifold("t2", Some("2,0.5;0.5,1"), 1.0), Ok(Manifold::Torus(_))));
        assert!(matches!(manifold("S2", None, 2.0), Ok(Manifold::Sphere(_))));
        assert!(manifold("t2", Some("1"), 1.0).is_err());
        assert!(manifold("k3", None, 1.0).is_err());
        assert_eq!(matrix("1,0;0,2").unwrap(), vec![vec![1.0, 0.0], vec![0.0, 2.0]]);
        assert!(list("1,x").is_err());
    }
}
