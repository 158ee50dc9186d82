//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use interlink::bounds::{cotangent_bounds, QuadrupleSets, QuadrupleSpec};
use interlink::dynamics::{
    hamiltonian_vector_field, integrate, verify_interlinking, AngularTerm, Bump, HamiltonianSpec, PhaseFunction,
    RadialProfile, TorusHamiltonian, Verdict, VerifyConfig,
};
use interlink::manifolds::{shoot_geodesic_bvp, FlatTorus, Manifold, ManifoldPoint};
use interlink::pbopt::{estimate_pb_upper, identity_check, PbConfig};
use interlink::persistence::oracle;
use interlink::persistence::reduce_barcode;
use interlink::spline::MonotoneSpline;
use interlink::wfh::wfh_report;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn within(elapsed: Duration, limit: f64) -> std::result::Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || {
        format!("runtime {:.2}s exceeds {limit}s", elapsed.as_secs_f64())
    })
}

fn barcode_oracle() -> Check {
    let start = Instant::now();
    let mut queries = 0;
    for seed in 0..200 {
        let c = oracle::random_complex(seed, 8);
        let bc = reduce_barcode(&c).map_err(|e| e.to_string())?;
        let levels = oracle::probe_levels(&c);
        for deg in 0..=2 {
            for &s in &levels {
                for &t in levels.iter().filter(|t| **t >= s) {
                    let got = bc.rank_map(s, t, deg).map_err(|e| e.to_string())?;
                    let want = oracle::sublevel_rank(&c, s, t, deg);
                    ensure(got == want, || format!("seed {seed}, degree {deg}, ({s}, {t}): {got} vs {want}"))?;
                    queries += 1;
                }
            }
        }
    }
    within(start.elapsed(), 5.0)?;
    Ok(format!("{queries} rank queries on 200 complexes in {:.2}s", start.elapsed().as_secs_f64()))
}

fn torus_barcode() -> Check {
    let start = Instant::now();
    let m = Manifold::torus(vec![vec![1.0]]).map_err(|e| e.to_string())?;
    let (x, y) = (m.point(&[0.0]).unwrap(), m.point(&[0.3]).unwrap());
    let r = wfh_report(&m, &x, &y, 3.0).map_err(|e| e.to_string())?;
    let want = [0.3, 0.7, 1.3, 1.7, 2.3, 2.7];
    let bars = r.bars.bars();
    ensure(bars.len() == want.len(), || format!("{} bars, expected 6", bars.len()))?;
    for (b, w) in bars.iter().zip(want) {
        ensure((b.left - w).abs() < 1e-12, || format!("left endpoint {} vs {w}", b.left))?;
        ensure(b.degree == 0 && b.is_infinite(), || format!("bar {b:?} is not a degree-0 ray"))?;
    }
    ensure(r.certified_to == 3.0, || format!("certified to {}", r.certified_to))?;
    let d = m.distance(&x, &y).map_err(|e| e.to_string())?;
    ensure(bars[0].left.to_bits() == d.to_bits(), || format!("leftmost {} vs distance {d}", bars[0].left))?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("6 rays in degree 0, leftmost = d = {d}"))
}

fn sphere_barcode() -> Check {
    let start = Instant::now();
    let m = Manifold::sphere(1.0).map_err(|e| e.to_string())?;
    let Manifold::Sphere(s) = &m else { unreachable!() };
    let (x, y) = s.polar_pair(PI / 2.0).map_err(|e| e.to_string())?;
    let r = wfh_report(&m, &x, &y, 8.0).map_err(|e| e.to_string())?;
    let want = [PI / 2.0, 3.0 * PI / 2.0, 5.0 * PI / 2.0];
    let bars = r.bars.bars();
    ensure(bars.len() == 3, || format!("{} bars, expected 3", bars.len()))?;
    for (k, (b, w)) in bars.iter().zip(want).enumerate() {
        ensure((b.left - w).abs() < 1e-9, || format!("bar {k}: {} vs {w}", b.left))?;
        ensure(b.degree == k as i32 && b.is_infinite(), || format!("bar {b:?} should be a ray in degree {k}"))?;
    }
    let mut worst: f64 = 0.0;
    for rec in m.geodesic_spectrum(&x, &y, 8.0).map_err(|e| e.to_string())? {
        let shot = shoot_geodesic_bvp(&m, &x, &y, &rec.class_tag, 1e-10).map_err(|e| e.to_string())?;
        worst = worst.max((shot.length - rec.length).abs());
        ensure((shot.length - rec.length).abs() < 1e-6, || {
            format!("shooting length {} vs {}", shot.length, rec.length)
        })?;
        ensure(shot.morse_index == rec.morse_index, || {
            format!("shooting index {} vs {}", shot.morse_index, rec.morse_index)
        })?;
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!("rays at π/2, 3π/2, 5π/2 in degrees 0,1,2; shooting agrees to {worst:.1e}"))
}

fn bound_instances() -> Check {
    let m = Manifold::torus(vec![vec![1.0]]).map_err(|e| e.to_string())?;
    let (x, y) = (m.point(&[0.0]).unwrap(), m.point(&[0.3]).unwrap());
    let d = m.distance(&x, &y).map_err(|e| e.to_string())?;
    let (fs, fz) = cotangent_bounds(&m, &x, &y, 1.0, 2.0).map_err(|e| e.to_string())?;
    ensure(fs == 1.0 / (d * (2.0 - 1.0)) && fz == 1.0 / (d * 1.0), || format!("T¹ gives ({fs}, {fz})"))?;
    ensure((fs - 10.0 / 3.0).abs() < 1e-12 && (fz - 10.0 / 3.0).abs() < 1e-12, || format!("T¹ gives ({fs}, {fz})"))?;
    let s2 = Manifold::sphere(1.0).map_err(|e| e.to_string())?;
    let Manifold::Sphere(s) = &s2 else { unreachable!() };
    let (x, y) = s.polar_pair(PI / 2.0).map_err(|e| e.to_string())?;
    let (ss, sz) = cotangent_bounds(&s2, &x, &y, 1.0, 3.0).map_err(|e| e.to_string())?;
    ensure((ss - 1.0 / PI).abs() < 1e-12 && (sz - 2.0 / PI).abs() < 1e-12, || format!("S² gives ({ss}, {sz})"))?;
    Ok(format!("T¹ ({fs}, {fz}); S² ({ss:.15}, {sz:.15})"))
}

fn random_metric(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![rng.random_range(0.5..2.0)]];
    }
    let (a, c) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
    let b = rng.random_range(-0.4..0.4) * (a * c as f64).sqrt();
    vec![vec![a, b], vec![b, c]]
}

fn random_points(m: &Manifold, n: usize, rng: &mut ChaCha8Rng) -> (ManifoldPoint, ManifoldPoint) {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let (x, y) = (m.point(&x).unwrap(), m.point(&y).unwrap());
        if m.distance(&x, &y).unwrap() > 0.05 {
            return (x, y);
        }
    }
}

fn random_spline(top: f64, rng: &mut ChaCha8Rng) -> RadialProfile {
    let k = rng.random_range(4..8);
    let knots: Vec<f64> = (0..k).map(|i| (top + 0.5) * i as f64 / (k - 1) as f64).collect();
    let slopes: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..3.0)).collect();
    RadialProfile::Spline(MonotoneSpline::new(knots, slopes, 0.0).unwrap())
}

/// Runs verification on random specs, returning the worst time/budget ratio.
fn verify_batch(
    cases: &[(usize, u64)],
    zero_section: bool,
    perturb: bool,
) -> std::result::Result<(usize, f64), String> {
    let mut worst: f64 = 0.0;
    for &(n, seed) in cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let metric = random_metric(n, &mut rng);
        let m = Manifold::torus(metric.clone()).unwrap();
        let (x, y) = random_points(&m, n, &mut rng);
        let a = rng.random_range(0.3..1.5);
        let b = a + rng.random_range(0.3..1.5);
        let sets = if zero_section {
            QuadrupleSets::FiberFiberZeroSection { a }
        } else {
            QuadrupleSets::FiberFiberSpheres { a, b }
        };
        let top = if zero_section { a } else { b };
        let profile = random_spline(top, &mut rng);
        let spec = if perturb {
            let delta = profile.value(b) - profile.value(a);
            let (cos, sin) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let eps = rng.random_range(0.2..1.0) * 0.05 * delta / (f64::abs(cos) + f64::abs(sin));
            HamiltonianSpec::RadialPerturbed {
                profile,
                eps,
                angular: vec![AngularTerm {
                    wave: vec![rng.random_range(1..=2); n],
                    cos,
                    sin,
                }],
                bump: Bump {
                    center: 0.5 * (a + b),
                    width: rng.random_range(0.5..1.5) * (b - a),
                },
            }
        } else {
            HamiltonianSpec::radial(profile)
        };
        let h = TorusHamiltonian::new(spec, &FlatTorus::new(metric).unwrap()).map_err(|e| e.to_string())?;
        let q = QuadrupleSpec::new(m, x, y, sets).map_err(|e| e.to_string())?;
        let r = verify_interlinking(&h, &q, &VerifyConfig::default()).map_err(|e| format!("seed {seed}: {e}"))?;
        let time = r.chord.as_ref().map(|c| c.time);
        ensure(r.verdict == Verdict::Confirmed, || {
            format!("T{n} seed {seed}: {:?} (budget {}, best time {time:?})", r.verdict, r.budget)
        })?;
        let ratio = time.unwrap() / r.budget;
        ensure(ratio <= 1.0 + 1e-2, || format!("T{n} seed {seed}: time/budget {ratio}"))?;
        worst = worst.max(ratio);
    }
    Ok((cases.len(), worst))
}

fn interlinking_spheres() -> Check {
    let start = Instant::now();
    let cases: Vec<(usize, u64)> = (0..10).map(|i| (1, 100 + i)).chain((0..10).map(|i| (2, 200 + i))).collect();
    let (count, worst) = verify_batch(&cases, false, false)?;
    within(start.elapsed(), 60.0)?;
    Ok(format!(
        "{count} radial splines on T¹/T² all CONFIRMED, max time/budget {worst:.4}, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn interlinking_zero_section() -> Check {
    let start = Instant::now();
    let cases: Vec<(usize, u64)> = (0..5).map(|i| (1, 300 + i)).chain((0..5).map(|i| (2, 400 + i))).collect();
    let (count, worst) = verify_batch(&cases, true, false)?;
    Ok(format!(
        "{count} zero-section specs all CONFIRMED, max time/budget {worst:.4}, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn interlinking_perturbed() -> Check {
    let start = Instant::now();
    let cases: Vec<(usize, u64)> = (0..10).map(|i| (1, 500 + i)).collect();
    let (count, worst) = verify_batch(&cases, false, true)?;
    Ok(format!(
        "{count} perturbed specs on T¹ all CONFIRMED, max time/budget {worst:.4}, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn deformation_identities() -> Check {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for n in [1, 2] {
        let r = identity_check(n, 100, 2024 + n as u64).map_err(|e| e.to_string())?;
        ensure(r.max_pfaffian_residual < 1e-10 && r.max_wedge_residual < 1e-10, || {
            format!("n = {n}: residuals {} / {}", r.max_pfaffian_residual, r.max_wedge_residual)
        })?;
        for d in &r.degeneracy {
            let found = d.found_tau.ok_or("no sign change of Pf(ω_τ)")?;
            ensure(d.pfaffian_at_predicted.abs() < 1e-10, || format!("|Pf| = {}", d.pfaffian_at_predicted))?;
            ensure((found - d.predicted_tau).abs() < 1e-6, || {
                format!("critical τ {found} vs predicted {}", d.predicted_tau)
            })?;
            worst.2 = worst.2.max((found - d.predicted_tau).abs());
        }
        worst.0 = worst.0.max(r.max_pfaffian_residual);
        worst.1 = worst.1.max(r.max_wedge_residual);
    }
    Ok(format!(
        "Pfaffian residual {:.1e}, wedge residual {:.1e}, critical τ error {:.1e}",
        worst.0, worst.1, worst.2
    ))
}

fn pb_sandwich() -> Check {
    let start = Instant::now();
    let m = Manifold::torus(vec![vec![1.0]]).map_err(|e| e.to_string())?;
    let q = QuadrupleSpec::new(
        m.clone(),
        m.point(&[0.0]).unwrap(),
        m.point(&[0.3]).unwrap(),
        QuadrupleSets::FiberFiberSpheres { a: 1.0, b: 2.0 },
    )
    .map_err(|e| e.to_string())?;
    let e = estimate_pb_upper(&q, &PbConfig::default()).map_err(|e| e.to_string())?;
    let target = 10.0 / 3.0;
    ensure(e.upper >= target - 1e-9 && e.upper <= 1.2 * target, || {
        format!("upper {} outside [{}, {}]", e.upper, target - 1e-9, 1.2 * target)
    })?;
    within(start.elapsed(), 120.0)?;
    Ok(format!(
        "upper {:.6}, lower {:.6}, gap ratio {:.4}, {:.1}s",
        e.upper,
        e.lower,
        e.gap_ratio,
        start.elapsed().as_secs_f64()
    ))
}

fn integrator_quality() -> Check {
    let spline = MonotoneSpline::new(vec![0.0, 0.7, 1.5, 2.5], vec![0.2, 1.4, 2.2, 0.9], 0.0).unwrap();
    let families = [
        ("power", RadialProfile::Power { coef: 0.5, exponent: 2.0 }, false),
        ("cubic", RadialProfile::Power { coef: 0.3, exponent: 3.0 }, false),
        ("linear", RadialProfile::Power { coef: 1.0, exponent: 1.0 }, false),
        ("spline", RadialProfile::Spline(spline.clone()), false),
        ("perturbed", RadialProfile::Spline(spline), true),
    ];
    let mut worst_drift: f64 = 0.0;
    let mut worst_dh: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for n in [1, 2] {
        let torus = FlatTorus::new(random_metric(n, &mut rng)).unwrap();
        for (name, profile, perturbed) in &families {
            let spec = if *perturbed {
                HamiltonianSpec::RadialPerturbed {
                    profile: profile.clone(),
                    eps: 0.05,
                    angular: vec![AngularTerm { wave: vec![1; n], cos: 0.3, sin: 0.7 }],
                    bump: Bump { center: 1.2, width: 1.0 },
                }
            } else {
                HamiltonianSpec::radial(profile.clone())
            };
            let h = TorusHamiltonian::new(spec, &torus).map_err(|e| e.to_string())?;
            let q0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p0 = h.covector(1.3, &dir);
            let traj = integrate(&h, &q0, &p0, 1e-3, 10_000).map_err(|e| format!("{name} on T{n}: {e}"))?;
            let drift = traj.energy_drift();
            ensure(drift < 1e-8, || format!("{name} on T{n}: drift {drift:e}"))?;
            worst_drift = worst_drift.max(drift);
            for _ in 0..200 {
                let q: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
                let p: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                let (dq, dp) = hamiltonian_vector_field(&h, &q, &p);
                let (mut hq, mut hp) = (vec![0.0; n], vec![0.0; n]);
                h.gradient(&q, &p, &mut hq, &mut hp);
                let dh: f64 = (0..n).map(|i| hq[i] * dq[i] + hp[i] * dp[i]).sum();
                ensure(dh.abs() < 1e-12, || format!("{name} on T{n}: dH(X_H) = {dh:e}"))?;
                worst_dh = worst_dh.max(dh.abs());
            }
        }
    }
    Ok(format!("max drift {worst_drift:.1e} over T = 10, max |dH(X_H)| {worst_dh:.1e}"))
}

fn run_binary(args: &[&str], threads: Option<&str>) -> std::result::Result<Value, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_interlink"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("INTERLINK_THREADS", t);
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    serde_json::from_slice(&out.stdout).map_err(|e| format!("{args:?}: {e}"))
}

fn determinism() -> Check {
    let runs: [&[&str]; 8] = [
        &["distance", "--manifold", "t2", "--metric", "1.5,0.4;0.4,0.8", "--x", "0.1,0.2", "--y", "0.6,0.9"],
        &["spectrum", "--manifold", "s2", "--theta", "1", "--cutoff", "12"],
        &["barcode", "--x", "0", "--y", "0.3", "--cutoff", "3"],
        &["bounds", "--manifold", "s2", "--theta", "1.2", "--a", "1", "--b", "3"],
        &["chords", "--x", "0", "--y", "0.3", "--ham", "radial:r^2", "--r-max", "2"],
        &["verify", "--manifold", "t2", "--x", "0,0", "--y", "0.4,0.3", "--a", "1", "--b", "2", "--ham", "radial:r^2"],
        &["pb-estimate", "--x", "0", "--y", "0.3", "--a", "1", "--b", "2", "--seed", "5"],
        &["identity-check", "--n", "2", "--draws", "20", "--seed", "3"],
    ];
    for args in runs {
        let a = interlink_cli::canonicalize(run_binary(args, None)?);
        let b = interlink_cli::canonicalize(run_binary(args, Some("1"))?);
        let c = interlink_cli::canonicalize(run_binary(args, Some("3"))?);
        ensure(a == b && b == c, || format!("{} differs between runs", args[0]))?;
        ensure(a.get("config").is_some() && a.get("basis").is_some(), || format!("{} lacks config/basis", args[0]))?;
    }
    Ok(format!("{} commands byte-identical after canonicalization across 3 runs and thread counts", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("barcode matches brute-force sublevel homology", barcode_oracle),
        ("torus barcode", torus_barcode),
        ("sphere barcode and shooting oracle", sphere_barcode),
        ("closed-form pb⁺ bounds", bound_instances),
        ("interlinking, sphere pair", interlinking_spheres),
        ("interlinking, zero-section pair", interlinking_zero_section),
        ("interlinking, perturbed hamiltonians", interlinking_perturbed),
        ("deformation identities", deformation_identities),
        ("pb⁺ sandwich", pb_sandwich),
        ("integrator quality", integrator_quality),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2}. {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
