//! Command-line front end: argument handling, the per-command pipelines and the
//! JSON envelope (`config`, `basis`, `timestamp`) around every result.

pub mod parse;

use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use interlink::bounds::{bound_report, QuadrupleSets, QuadrupleSpec};
use interlink::dynamics::{
    chord_trajectory, find_chord, verify_interlinking, SearchConfig, TorusHamiltonian, Verdict, VerifyConfig,
};
use interlink::error::{Error, ErrorKind, Result};
use interlink::manifolds::{spectrum_json, Manifold, ManifoldPoint};
use interlink::pbopt::{estimate_pb_upper, identity_check, PbConfig};
use interlink::wfh::wfh_report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ARGUMENT: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

#[derive(Debug, Parser, Serialize)]
#[command(name = "interlink", version, about = "Wrapped-Floer barcodes, pb⁺ bounds and chord verification")]
pub struct Cli {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Riemannian distance between two points.
    Distance(PointArgs),
    /// Geodesics from x to y below a length cutoff.
    Spectrum(CutoffArgs),
    /// Barcode of wrapped Floer homology of the fibers over x and y.
    Barcode(CutoffArgs),
    /// Lower bounds on pb⁺, interlinking constants.
    Bounds(QuadArgs),
    /// Search for a Hamiltonian chord from the fiber over x to the fiber over y.
    Chords(ChordArgs),
    /// Check that a Hamiltonian has a chord within its interlinking budget.
    Verify(VerifyArgs),
    /// Upper estimate of pb⁺ on the circle by minimax over test pairs.
    PbEstimate(PbArgs),
    /// Numerical check of the deformation identities behind the pb⁺ bound.
    IdentityCheck(IdentityArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PointArgs {
    /// t1, t2, …, tN (flat torus) or s2 (round sphere).
    #[arg(long, default_value = "t1")]
    pub manifold: String,
    /// Torus metric, rows separated by ';' (identity by default).
    #[arg(long, allow_hyphen_values = true)]
    pub metric: Option<String>,
    /// Sphere radius.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Start point: torus coordinates or a direction in ℝ³, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    /// Sphere only: x the north pole and y at this polar angle.
    #[arg(long)]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CutoffArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub points: PointArgs,
    #[arg(long)]
    pub cutoff: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QuadArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub points: PointArgs,
    #[arg(long)]
    pub a: f64,
    /// Outer radius; omit together with --zero-section.
    #[arg(long)]
    pub b: Option<f64>,
    /// Pair the fibers with the zero section and the sphere of radius a.
    #[arg(long)]
    pub zero_section: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SearchArgs {
    /// Largest |p0| scanned.
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long, default_value_t = SearchConfig::default().radial_points)]
    pub radial_points: usize,
    #[arg(long, default_value_t = SearchConfig::default().angular_points)]
    pub angular_points: usize,
    #[arg(long, default_value_t = SearchConfig::default().scan_steps)]
    pub scan_steps: usize,
    #[arg(long, default_value_t = SearchConfig::default().refine_steps)]
    pub refine_steps: usize,
    #[arg(long, default_value_t = SearchConfig::default().tol_q)]
    pub tol_q: f64,
    /// CSV file for the best chord's trajectory.
    #[arg(long)]
    pub trajectory_out: Option<String>,
}

impl SearchArgs {
    fn config(&self, r_max: f64) -> SearchConfig {
        SearchConfig {
            r_max,
            radial_points: self.radial_points,
            angular_points: self.angular_points,
            scan_steps: self.scan_steps,
            refine_steps: self.refine_steps,
            tol_q: self.tol_q,
            ..SearchConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChordArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub points: PointArgs,
    /// Hamiltonian, e.g. radial:r^2 (see README for all forms).
    #[arg(long)]
    pub ham: String,
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
    #[arg(long)]
    pub ham: String,
    /// Search horizon (default: budget·(1 + margin)).
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = VerifyConfig::default().margin)]
    pub margin: f64,
    #[arg(long, default_value_t = VerifyConfig::default().tol_t)]
    pub tol_t: f64,
    /// Samples for the separation of non-radial Hamiltonians.
    #[arg(long, default_value_t = VerifyConfig::default().samples)]
    pub samples: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PbArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = PbConfig::default().restarts)]
    pub restarts: usize,
    #[arg(long, default_value_t = PbConfig::default().max_iters)]
    pub max_iters: u64,
    #[arg(long, default_value_t = PbConfig::default().control_points)]
    pub control_points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IdentityArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// What a run printed and how it ended.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `argv` (program name first) and runs the command.
pub fn execute<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ARGUMENT } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code, stdout: String::new(), stderr: text }
            } else {
                Outcome { code, stdout: text, stderr: String::new() }
            };
        }
    };
    match run(&cli) {
        Ok((value, code)) => {
            let text = serde_json::to_string_pretty(&value).expect("results serialize") + "\n";
            match &cli.out {
                Some(path) => match std::fs::write(path, &text) {
                    Ok(()) => Outcome { code, stdout: String::new(), stderr: String::new() },
                    Err(e) => failure(EXIT_ARGUMENT, "argument", &format!("cannot write {path}: {e}")),
                },
                None => Outcome { code, stdout: text, stderr: String::new() },
            }
        }
        Err(e) => {
            let (code, kind) = match e.kind() {
                ErrorKind::Argument => (EXIT_ARGUMENT, "argument"),
                ErrorKind::Domain => (EXIT_DOMAIN, "domain"),
            };
            failure(code, kind, &e.to_string())
        }
    }
}

fn failure(code: i32, kind: &str, msg: &str) -> Outcome {
    let body = json!({ "error": msg, "kind": kind });
    Outcome {
        code,
        stdout: String::new(),
        stderr: serde_json::to_string(&body).unwrap() + "\n",
    }
}

/// Drops the fields that legitimately differ between identical runs.
pub fn canonicalize(mut v: Value) -> Value {
    if let Value::Object(m) = &mut v {
        m.remove("timestamp");
    }
    v
}

fn points(a: &PointArgs) -> Result<(Manifold, ManifoldPoint, ManifoldPoint)> {
    let m = parse::manifold(&a.manifold, a.metric.as_deref(), a.radius)?;
    if let Some(theta) = a.theta {
        if a.x.is_some() || a.y.is_some() {
            return Err(Error::InvalidArgument("give either --theta or --x/--y".into()));
        }
        let Manifold::Sphere(s) = &m else {
            return Err(Error::InvalidArgument("--theta applies to s2 only".into()));
        };
        let (x, y) = s.polar_pair(theta)?;
        return Ok((m, x, y));
    }
    let need = |v: &Option<String>, name: &str| {
        v.as_deref()
            .ok_or_else(|| Error::InvalidArgument(format!("--{name} is required")))
            .and_then(parse::list)
    };
    let x = m.point(&need(&a.x, "x")?)?;
    let y = m.point(&need(&a.y, "y")?)?;
    Ok((m, x, y))
}

fn quadruple(a: &QuadArgs) -> Result<QuadrupleSpec> {
    let (m, x, y) = points(&a.points)?;
    let sets = match (a.zero_section, a.b) {
        (true, None) => QuadrupleSets::FiberFiberZeroSection { a: a.a },
        (false, Some(b)) => QuadrupleSets::FiberFiberSpheres { a: a.a, b },
        (true, Some(_)) => return Err(Error::InvalidArgument("--zero-section takes no --b".into())),
        (false, None) => return Err(Error::InvalidArgument("--b is required (or --zero-section)".into())),
    };
    QuadrupleSpec::new(m, x, y, sets)
}

fn torus_hamiltonian(m: &Manifold, ham: &str) -> Result<TorusHamiltonian> {
    let spec = parse::hamiltonian(ham)?;
    match m {
        Manifold::Torus(t) => TorusHamiltonian::new(spec, t),
        Manifold::Sphere(_) => Err(Error::InvalidArgument("chord search is only available on flat tori".into())),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn run(cli: &Cli) -> Result<(Value, i32)> {
    let mut code = EXIT_OK;
    let (mut result, basis): (Value, Vec<&str>) = match &cli.command {
        Command::Distance(a) => {
            let (m, x, y) = points(a)?;
            (json!({ "d": m.distance(&x, &y)? }), vec!["geodesic-distance"])
        }
        Command::Spectrum(a) => {
            let (m, x, y) = points(&a.points)?;
            let records = m.geodesic_spectrum(&x, &y, a.cutoff)?;
            let parsed: Value = serde_json::from_str(&spectrum_json(&records)).expect("spectrum is JSON");
            (json!({ "records": parsed, "count": records.len() }), vec!["geodesic-spectrum"])
        }
        Command::Barcode(a) => {
            let (m, x, y) = points(&a.points)?;
            (
                wfh_report(&m, &x, &y, a.cutoff)?.to_json(),
                vec!["path-space-filtration", "wrapped-floer-barcode"],
            )
        }
        Command::Bounds(a) => {
            let r = bound_report(&quadruple(a)?)?;
            let mut basis = vec!["wrapped-floer-barcode", "pb-lower-bound-from-bar", "antisymmetric-ordering"];
            if r.bar.is_none() {
                basis.push("closed-form-bound");
            }
            (to_value(&r), basis)
        }
        Command::Chords(a) => {
            let (m, x, y) = points(&a.points)?;
            let h = torus_hamiltonian(&m, &a.ham)?;
            let search = a.search.config(a.search.r_max.unwrap_or(SearchConfig::default().r_max));
            let found = find_chord(&h, &x, &y, a.t_max, &search)?;
            if let (Some(path), Some(c)) = (&a.search.trajectory_out, found.best()) {
                write_trajectory(&h, &x, c.p0.as_slice(), c.time, search.refine_steps, path)?;
            }
            let mut v = to_value(&found);
            v["hamiltonian"] = to_value(h.spec());
            v["search"] = to_value(&search);
            (v, vec!["hamiltonian-chord-search"])
        }
        Command::Verify(a) => {
            let q = quadruple(&a.quad)?;
            let h = torus_hamiltonian(&q.manifold, &a.ham)?;
            let cfg = VerifyConfig {
                t_max: a.t_max,
                margin: a.margin,
                tol_t: a.tol_t,
                samples: a.samples,
                r_max: a.search.r_max,
                search: a.search.config(SearchConfig::default().r_max),
            };
            let r = verify_interlinking(&h, &q, &cfg)?;
            if let (Some(path), Some(c)) = (&a.search.trajectory_out, &r.chord) {
                write_trajectory(&h, &q.x, &c.p0, c.time, cfg.search.refine_steps, path)?;
            }
            if r.verdict == Verdict::Inconclusive {
                code = EXIT_INCONCLUSIVE;
            }
            (
                to_value(&r),
                vec!["separation", "pb-lower-bound-from-bar", "interlinking-from-pb"],
            )
        }
        Command::PbEstimate(a) => {
            let q = quadruple(&a.quad)?;
            let cfg = PbConfig {
                seed: a.seed,
                restarts: a.restarts,
                max_iters: a.max_iters,
                control_points: a.control_points,
                ..PbConfig::default()
            };
            let mut v = to_value(&estimate_pb_upper(&q, &cfg)?);
            v["optimizer"] = to_value(&cfg);
            (v, vec!["pb-definition", "constant-at-infinity", "pb-lower-bound-from-bar"])
        }
        Command::IdentityCheck(a) => (
            to_value(&identity_check(a.n, a.draws, a.seed)?),
            vec!["bracket-convention", "deformation-identity"],
        ),
    };
    let obj = result.as_object_mut().expect("results are JSON objects");
    obj.insert("config".into(), to_value(&cli.command));
    obj.insert("basis".into(), to_value(&basis));
    obj.insert("timestamp".into(), json!(unix_seconds()));
    Ok((result, code))
}

fn write_trajectory(h: &TorusHamiltonian, x: &ManifoldPoint, p0: &[f64], time: f64, steps: usize, path: &str) -> Result<()> {
    let traj = chord_trajectory(h, x.coords(), p0, time, steps)?;
    std::fs::write(path, traj.to_csv())
        .map_err(|e| Error::InvalidArgument(format!("cannot write {path}: {e}")))
}

fn unix_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}
