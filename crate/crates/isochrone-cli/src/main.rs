//! `isochrone` — command-line front end for the isochrone library.
//!
//! Subcommands: `classify` (Henon-plane parabola -> family), `periods`
//! (radial period / precession / action by quadrature and closed form),
//! `orbit` (trajectory integration to CSV), `bolst` (map a Keplerian
//! orbit through a bolst), and `verify` (self-check suites).
//!
//! Output is deterministic: JSON objects keep a fixed key order, floats
//! are printed with 17 significant digits, and no timestamps are emitted.
//! Exit codes: 0 success, 2 input/validation error, 3 verification
//! failure.

mod json;
mod verify;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};
use std::io::Write as _;
use std::process::ExitCode;

use isochrone::bolst_relativity::{map_kepler_orbit, Bolst, KeplerEllipse};
use isochrone::closed_forms::{n_phi_analytic, radial_action_analytic, tau_r_analytic};
use isochrone::henon_geometry::Parabola;
use isochrone::orbit_engine::{
    azimuthal_increment_quad, integrate_orbit, radial_action_quad, radial_period_quad, OrbitParams,
};
use isochrone::PotentialSpec;

const SCHEMA: &str = "isochrone/1";

#[derive(Parser)]
#[command(name = "isochrone", version, about = "Isochrone potentials: classification, orbits, and transformations")]
struct Cli {
    /// Worker threads for grid sweeps (sets ISOCHRONE_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a Henon-plane parabola into its potential family.
    Classify(ClassifyArgs),
    /// Radial period, azimuthal increment, and radial action of an orbit.
    Periods(PeriodsArgs),
    /// Integrate an orbit and write the trajectory as CSV.
    Orbit(OrbitArgs),
    /// Map a Keplerian orbit through a bolst and write the pair as CSV.
    Bolst(BolstArgs),
    /// Run the built-in verification suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    /// Conic coefficients "a,b,c,d,e" of a x^2 + b xy + c x + d y + e = 0
    /// (y^2 coefficient normalized into the canonical form).
    #[arg(long, conflicts_with = "parabola")]
    coeffs: Option<String>,
    /// Path to a JSON file {"a":..,"b":..,"c":..,"d":..,"e":..}.
    #[arg(long)]
    parabola: Option<String>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Method {
    Quad,
    Analytic,
    Both,
}

#[derive(Args)]
struct PeriodsArgs {
    /// Potential as inline JSON or a path to a JSON file
    /// ({"family":"Henon","mu":1,"b":1,"epsilon":0,"lambda":0}).
    #[arg(long)]
    potential: String,
    /// Orbital energy.
    #[arg(long, allow_negative_numbers = true)]
    xi: f64,
    /// Angular momentum.
    #[arg(long = "L")]
    l: f64,
    #[arg(long, value_enum, default_value = "both")]
    method: Method,
    /// Allowed quad/analytic relative disagreement for --method both.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct OrbitArgs {
    /// Potential as inline JSON or a path to a JSON file.
    #[arg(long)]
    potential: String,
    /// Orbital energy.
    #[arg(long, allow_negative_numbers = true)]
    xi: f64,
    /// Angular momentum.
    #[arg(long = "L")]
    l: f64,
    /// Number of radial periods to integrate.
    #[arg(long)]
    periods: f64,
    /// Initial azimuth.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phi0: f64,
    /// Energy-accuracy target of the run.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Output CSV path (t,r,phi,x,y,energy_err).
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct BolstArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    /// Semilatus rectum of the primary ellipse.
    #[arg(long)]
    p: f64,
    /// Eccentricity of the primary ellipse.
    #[arg(long)]
    e: f64,
    /// Mass parameter of the primary Kepler potential.
    #[arg(long)]
    mu: f64,
    /// Primary orbital energy (must be negative).
    #[arg(long, allow_negative_numbers = true)]
    xi0: f64,
    /// Image orbital energy (nonzero).
    #[arg(long, allow_negative_numbers = true)]
    xi1: f64,
    /// Number of phi0 samples over one primary revolution.
    #[arg(long, default_value_t = 256)]
    samples: usize,
    /// Output CSV path (phi0,r0,phi1,r1,x0,y0,x1,y1).
    #[arg(long)]
    out: String,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Geometry,
    Orbits,
    Laws,
    Bolst,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<String>,
}

/// A failure carrying the process exit code (2 input, 3 verification).
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    fn verification(message: impl Into<String>) -> Failure {
        Failure { code: 3, message: message.into() }
    }
}

impl From<isochrone::Error> for Failure {
    fn from(e: isochrone::Error) -> Failure {
        Failure::input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        std::env::set_var("ISOCHRONE_THREADS", n.to_string());
    }
    let outcome = match cli.command {
        Command::Classify(a) => cmd_classify(&a),
        Command::Periods(a) => cmd_periods(&a),
        Command::Orbit(a) => cmd_orbit(&a),
        Command::Bolst(a) => cmd_bolst(&a),
        Command::Verify(a) => cmd_verify(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Assemble a JSON object with `"schema"` first and the given fields in
/// order.
fn report(fields: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), Value::String(SCHEMA.into()));
    for (k, v) in fields {
        map.insert(k.into(), v);
    }
    Value::Object(map)
}

fn emit(value: &Value) {
    print!("{}", json::render(value));
}

/// Parse a potential from inline JSON (leading `{`) or a file path.
fn load_potential(arg: &str) -> Result<PotentialSpec, Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)
            .map_err(|e| Failure::input(format!("cannot read potential file `{arg}`: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("invalid potential: {e}")))
}

fn cmd_classify(args: &ClassifyArgs) -> Result<(), Failure> {
    let [a, b, c, d, e] = match (&args.coeffs, &args.parabola) {
        (Some(s), None) => {
            let parts: Vec<f64> = s
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| Failure::input(format!("invalid --coeffs: {e}")))?;
            <[f64; 5]>::try_from(parts)
                .map_err(|v| Failure::input(format!("--coeffs needs 5 numbers, got {}", v.len())))?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("cannot read parabola file `{path}`: {e}")))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| Failure::input(format!("invalid parabola JSON: {e}")))?;
            let get = |k: &str| {
                v.get(k)
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Failure::input(format!("parabola JSON missing number `{k}`")))
            };
            [get("a")?, get("b")?, get("c")?, get("d")?, get("e")?]
        }
        _ => return Err(Failure::input("provide exactly one of --coeffs or --parabola")),
    };
    let parabola = Parabola::from_coeffs(a, b, c, d, e)?;
    let class = parabola.reduce()?;
    let opt = |o: Option<f64>| o.map(json::num).unwrap_or(Value::Null);
    emit(&report(vec![
        ("family", Value::String(class.family.to_string())),
        ("mu", opt(class.mu)),
        ("omega", opt(class.omega)),
        ("b", opt(class.scale_b)),
        ("epsilon", json::num(class.affine.epsilon)),
        ("lambda", json::num(class.affine.lambda)),
        ("increasing_branch", Value::Bool(class.increasing_branch)),
    ]));
    Ok(())
}

fn cmd_periods(args: &PeriodsArgs) -> Result<(), Failure> {
    let psi = load_potential(&args.potential)?;
    let orbit = OrbitParams::new(args.xi, args.l);
    let quad = |_: ()| -> Result<(f64, f64, f64), isochrone::Error> {
        Ok((
            radial_period_quad(&psi, orbit)?,
            azimuthal_increment_quad(&psi, orbit)?,
            radial_action_quad(&psi, orbit)?,
        ))
    };
    let analytic = |_: ()| -> Result<(f64, f64, f64), isochrone::Error> {
        Ok((
            tau_r_analytic(&psi, args.xi)?,
            n_phi_analytic(&psi, args.l)?,
            radial_action_analytic(&psi, orbit)?,
        ))
    };
    let ((tau, nphi, ar), agreement) = match args.method {
        Method::Quad => (quad(())?, Value::Null),
        Method::Analytic => (analytic(())?, Value::Null),
        Method::Both => {
            let q = quad(())?;
            let a = analytic(())?;
            let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-300);
            let dis = [rel(q.0, a.0), rel(q.1, a.1), rel(q.2, a.2)];
            let max = dis.iter().cloned().fold(0.0f64, f64::max);
            if !(max <= args.tol) {
                let v = report(vec![
                    ("tau_r", json::num(q.0)),
                    ("n_phi", json::num(q.1)),
                    ("a_r", json::num(q.2)),
                    ("agreement", json::num(max)),
                ]);
                emit(&v);
                return Err(Failure::verification(format!(
                    "quadrature and closed form disagree: {max:.3e} > tol {:.3e}",
                    args.tol
                )));
            }
            (q, json::num(max))
        }
    };
    emit(&report(vec![
        ("tau_r", json::num(tau)),
        ("n_phi", json::num(nphi)),
        ("a_r", json::num(ar)),
        ("agreement", agreement),
    ]));
    Ok(())
}

fn cmd_orbit(args: &OrbitArgs) -> Result<(), Failure> {
    let psi = load_potential(&args.potential)?;
    let orbit = OrbitParams::new(args.xi, args.l);
    let traj = integrate_orbit(&psi, orbit, args.phi0, args.periods, args.tol)?;

    let mut csv = String::from("t,r,phi,x,y,energy_err\n");
    for s in &traj.samples {
        let (x, y) = (s.r * s.phi.cos(), s.r * s.phi.sin());
        for (i, v) in [s.t, s.r, s.phi, x, y, s.energy_err].into_iter().enumerate() {
            if i > 0 {
                csv.push(',');
            }
            csv.push_str(&json::format_float(v));
        }
        csv.push('\n');
    }
    std::fs::write(&args.out, csv)?;

    let events: Vec<Value> = traj
        .events
        .iter()
        .map(|e| {
            let kind = match e.kind {
                isochrone::orbit_engine::ApsisKind::Periastron => "periastron",
                isochrone::orbit_engine::ApsisKind::Apoastron => "apoastron",
            };
            let mut m = Map::new();
            m.insert("t".into(), json::num(e.t));
            m.insert("kind".into(), Value::String(kind.into()));
            m.insert("r".into(), json::num(e.r));
            m.insert("phi".into(), json::num(e.phi));
            Value::Object(m)
        })
        .collect();
    emit(&report(vec![
        ("samples_written", Value::from(traj.samples.len())),
        ("events", Value::Array(events)),
        ("energy_drift", json::num(traj.energy_drift)),
    ]));
    Ok(())
}

fn cmd_bolst(args: &BolstArgs) -> Result<(), Failure> {
    let b = Bolst::new(args.alpha, args.beta)?;
    let ell = KeplerEllipse::new(args.p, args.e, args.mu, args.xi0)?;
    if args.samples < 2 {
        return Err(Failure::input("--samples must be at least 2"));
    }
    let n = args.samples;
    let grid: Vec<f64> =
        (0..n).map(|i| 2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).collect();
    let mapped = map_kepler_orbit(&b, &ell, args.xi1, &grid)?;

    let mut csv = String::from("phi0,r0,phi1,r1,x0,y0,x1,y1\n");
    for s in &mapped.samples {
        let (x0, y0) = (s.r0 * s.phi0.cos(), s.r0 * s.phi0.sin());
        let (x1, y1) = (s.r1 * s.phi1.cos(), s.r1 * s.phi1.sin());
        for (i, v) in [s.phi0, s.r0, s.phi1, s.r1, x0, y0, x1, y1].into_iter().enumerate() {
            if i > 0 {
                csv.push(',');
            }
            csv.push_str(&json::format_float(v));
        }
        csv.push('\n');
    }
    std::fs::write(&args.out, csv)?;

    emit(&report(vec![
        ("chi", json::num(mapped.chi)),
        ("delta_phi1", json::num(mapped.delta_phi1)),
        ("delta_phi1_over_pi", json::num(mapped.delta_phi1 / std::f64::consts::PI)),
        ("xi1", json::num(mapped.xi1)),
        ("l1", json::num(mapped.l1)),
        ("physical", Value::Bool(mapped.physical)),
        ("bohlin_omega1", mapped.bohlin_omega1.map(json::num).unwrap_or(Value::Null)),
    ]));
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let suites: &[&str] = match args.suite {
        Suite::All => &["geometry", "orbits", "laws", "bolst"],
        Suite::Geometry => &["geometry"],
        Suite::Orbits => &["orbits"],
        Suite::Laws => &["laws"],
        Suite::Bolst => &["bolst"],
    };
    let mut results = Vec::new();
    for name in suites {
        verify::run_suite(name, &mut results);
    }
    let all_pass = results.iter().all(|c| c.pass);
    let items: Vec<Value> = results
        .iter()
        .map(|c| {
            let mut m = Map::new();
            m.insert("name".into(), Value::String(c.name.clone()));
            m.insert("pass".into(), Value::Bool(c.pass));
            m.insert("detail".into(), Value::String(c.detail.clone()));
            Value::Object(m)
        })
        .collect();
    let out = report(vec![
        ("suite", Value::String(suites.join("+"))),
        ("results", Value::Array(items)),
        ("all_pass", Value::Bool(all_pass)),
    ]);
    match &args.report {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(json::render(&out).as_bytes())?;
        }
        None => emit(&out),
    }
    if all_pass {
        Ok(())
    } else {
        let failed: Vec<&str> =
            results.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        Err(Failure::verification(format!("failed checks: {}", failed.join(", "))))
    }
}
