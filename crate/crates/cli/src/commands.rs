use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};
use twinphase::constants::K_MAGIC;
use twinphase::geometry::closure_check;
use twinphase::kinematics::trajectory_table;
use twinphase::oracle::{convergence_study, run_oracle, OracleConfig, PulseShape};
use twinphase::scan::{scan, ScanGrid, ScanVariable};
use twinphase::{
    beat, fringe, parse_geometry, serialize_geometry, total_phase, ClockPair, Error, Execution, GeometryKind,
    GeometrySpec, GravityEnv, InitialConditions, PulseSequence, Species,
};

use crate::cli::{
    CheckArgs, ExportArgs, Format, GeometryArgs, OracleArgs, OutputArgs, PhysicsArgs, ScanArgs, Shape, SimulateArgs,
    TrajectoryArgs, Vary,
};
use crate::manifest::{sci, sci_opt, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_OPEN: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::OpenSequence { .. } => EXIT_OPEN,
            Error::Numeric(_) | Error::Consistency(_) => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Rendered output plus the exit code it should end with. A report can be
/// complete and still signal failure (open geometry, residual over tolerance).
pub struct Outcome {
    pub body: String,
    pub code: i32,
    pub note: Option<String>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self {
            body,
            code: EXIT_OK,
            note: None,
        }
    }
}

pub fn write_output(out: &OutputArgs, body: &str) -> Result<(), CliError> {
    match &out.output {
        Some(path) => fs::write(path, body).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::usage(format!("cannot write output: {e}")))
        }
    }
}

fn execution(out: &OutputArgs) -> Execution {
    if out.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

struct Resolved {
    seq: PulseSequence,
    spec: Option<GeometrySpec>,
}

impl Resolved {
    /// T for builders, first-to-last pulse span for files.
    fn reference_time(&self) -> f64 {
        match &self.spec {
            Some(s) => s.t,
            None => match (self.seq.pulses().first(), self.seq.pulses().last()) {
                (Some(a), Some(b)) => b.t - a.t,
                _ => 0.0,
            },
        }
    }
}

fn resolve_spec(args: &GeometryArgs, kind: GeometryKind, m: &mut RunManifest) -> Result<GeometrySpec, CliError> {
    let k = match (args.k, args.k_in_km) {
        (Some(k), _) => k,
        (None, Some(mult)) => {
            m.set_f64("k_in_km", mult);
            mult * K_MAGIC
        }
        (None, None) => return Err(CliError::usage("builder geometries need --k or --k-in-km")),
    };
    let t = args.t.ok_or_else(|| CliError::usage("builder geometries need --T"))?;
    let t_prime = args.t_prime.unwrap_or(0.0);
    m.set_f64("k", k);
    m.set_f64("T", t);
    if matches!(kind, GeometryKind::RbiSym | GeometryKind::RbiAsym) {
        m.set_f64("Tprime", t_prime);
    }
    Ok(GeometrySpec::new(kind, k, t, t_prime))
}

fn resolve_geometry(args: &GeometryArgs, m: &mut RunManifest) -> Result<Resolved, CliError> {
    m.set("geometry", args.geometry.as_str());
    if let Some(path) = args.geometry.strip_prefix("file:") {
        if args.k.is_some() || args.k_in_km.is_some() || args.t.is_some() || args.t_prime.is_some() {
            return Err(CliError::usage("--k, --k-in-km, --T and --Tprime apply to builder geometries only"));
        }
        let path = PathBuf::from(path);
        let text = fs::read_to_string(&path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        let seq = parse_geometry(&text).map_err(|e| CliError::usage(format!("{}:{}:{}: {}", path.display(), e.line, e.column, e.kind)))?;
        return Ok(Resolved { seq, spec: None });
    }
    let kind: GeometryKind = args.geometry.parse().map_err(|e: Error| {
        CliError::usage(format!("{e}; expected mzi, rbi-sym, rbi-asym, rbi-double or file:<path>"))
    })?;
    let spec = resolve_spec(args, kind, m)?;
    let seq = spec.build()?;
    Ok(Resolved { seq, spec: Some(spec) })
}

struct Physics {
    species: Species,
    env: GravityEnv,
    ics: InitialConditions,
}

fn resolve_physics(args: &PhysicsArgs, m: &mut RunManifest) -> Result<Physics, CliError> {
    let species = Species::new(args.mass)?;
    if !args.g.is_finite() {
        return Err(CliError::usage("--g must be finite"));
    }
    let ics = InitialConditions::new(args.z0, args.v0)?;
    m.set_f64("g", args.g);
    m.set_f64("mass", args.mass);
    m.set_f64("z0", args.z0);
    m.set_f64("v0", args.v0);
    Ok(Physics {
        species,
        env: GravityEnv::uniform(args.g),
        ics,
    })
}

fn resolve_clock(omega: Option<f64>, mass: f64, m: &mut RunManifest) -> Result<Option<ClockPair>, CliError> {
    omega
        .map(|w| {
            m.set_f64("omega", w);
            ClockPair::new(mass, w).map_err(CliError::from)
        })
        .transpose()
}

fn json_document(manifest: &RunManifest, result: Value) -> String {
    let doc = json!({ "manifest": manifest, "result": result });
    let mut s = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
    s.push('\n');
    s
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

/// Named scalar results, rendered as aligned text, a one-row CSV or JSON.
struct Fields(Vec<(&'static str, f64, &'static str)>);

impl Fields {
    fn render(&self, format: Format, manifest: &RunManifest) -> String {
        match format {
            Format::Json => {
                let obj: serde_json::Map<String, Value> = self.0.iter().map(|(k, v, _)| (k.to_string(), json!(v))).collect();
                json_document(manifest, Value::Object(obj))
            }
            Format::Csv => {
                let mut out = manifest.comment_block();
                let names: Vec<&str> = self.0.iter().map(|f| f.0).collect();
                let values: Vec<String> = self.0.iter().map(|f| sci(f.1)).collect();
                let _ = writeln!(out, "{}", names.join(","));
                let _ = writeln!(out, "{}", values.join(","));
                out
            }
            Format::Text => {
                let mut out = manifest.comment_block();
                let width = self.0.iter().map(|f| f.0.len()).max().unwrap_or(0);
                for (name, value, unit) in &self.0 {
                    let line = format!("{name:<width$} = {}", sci(*value));
                    let _ = writeln!(out, "{}", if unit.is_empty() { line } else { format!("{line} {unit}") });
                }
                out
            }
        }
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let format = args.output.format.unwrap_or(Format::Text);
    let mut m = RunManifest::new("simulate", format.as_str(), args.output.stamp);
    let geo = resolve_geometry(&args.geometry, &mut m)?;
    let phys = resolve_physics(&args.physics, &mut m)?;
    let clock = resolve_clock(args.omega, args.physics.mass, &mut m)?;

    let b = total_phase(&geo.seq, &phys.species, &phys.env, &phys.ics)?;
    let mut fields = vec![
        ("delta_tau", b.delta_tau, "s"),
        ("recoil_phase", b.recoil_phase, "rad"),
        ("gravito_recoil", b.gravito_recoil, "rad"),
        ("laser_phase", b.laser_phase, "rad"),
        ("total_phase", b.total_phase, "rad"),
    ];
    match clock {
        Some(clock) => {
            let s = beat(&geo.seq, &clock, &phys.env, &phys.ics)?;
            fields.extend([
                ("eta", s.eta, ""),
                ("eta_omega_delta_tau", s.eta * clock.splitting_omega * s.delta_tau, "rad"),
                ("envelope", s.envelope, ""),
                ("carrier_phase", s.carrier_phase, "rad"),
                ("phase_a", s.phase_a, "rad"),
                ("phase_b", s.phase_b, "rad"),
                ("p_a", s.p_a, ""),
                ("p_b", s.p_b, ""),
                ("p", s.p_combined, ""),
                ("p_closed_form", s.p_closed_form, ""),
            ]);
        }
        None => fields.push(("p", fringe(&geo.seq, &phys.species, &phys.env, &phys.ics)?, "")),
    }
    Ok(Outcome::ok(Fields(fields).render(format, &m)))
}

pub fn scan_cmd(args: &ScanArgs) -> Result<Outcome, CliError> {
    let format = args.output.format.unwrap_or(Format::Csv);
    let mut m = RunManifest::new("scan", format.as_str(), args.output.stamp);
    let variable = match args.vary {
        Vary::T => ScanVariable::T,
        Vary::K => ScanVariable::K,
    };
    m.set("vary", variable.as_str());
    m.set_f64("from", args.from);
    m.set_f64("to", args.to);
    m.set("steps", args.steps);

    // The varied quantity needs no flag of its own; fill it with the grid start.
    let mut g = args.geometry.clone();
    match variable {
        ScanVariable::T => g.t = g.t.or(Some(args.from)),
        ScanVariable::K => {
            if g.k.is_none() && g.k_in_km.is_none() {
                g.k = Some(args.from);
            }
        }
    }
    if g.geometry.starts_with("file:") {
        return Err(CliError::usage("scan needs a builder geometry"));
    }
    let kind: GeometryKind = g.geometry.parse()?;
    m.set("geometry", g.geometry.as_str());
    let spec = resolve_spec(&g, kind, &mut m)?;
    match variable {
        ScanVariable::T => m.parameters.remove("T"),
        ScanVariable::K => {
            m.parameters.remove("k_in_km");
            m.parameters.remove("k")
        }
    };
    let phys = resolve_physics(&args.physics, &mut m)?;
    let clock = resolve_clock(args.omega, args.physics.mass, &mut m)?;
    let grid = ScanGrid {
        variable,
        from: args.from,
        to: args.to,
        steps: args.steps,
    };
    let rows = scan(&spec, &grid, &phys.species, clock.as_ref(), &phys.env, &phys.ics, execution(&args.output))?;

    let x = |r: &twinphase::scan::ScanRow| match variable {
        ScanVariable::T => r.t,
        ScanVariable::K => r.k,
    };
    let body = match format {
        Format::Json => {
            let arr: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        variable.as_str(): x(r),
                        "delta_tau": r.delta_tau,
                        "envelope": r.envelope,
                        "carrier_phase": r.carrier_phase,
                        "P": r.p,
                    })
                })
                .collect();
            json_document(&m, Value::Array(arr))
        }
        Format::Csv | Format::Text => {
            let mut out = m.comment_block();
            let _ = writeln!(out, "{},delta_tau,envelope,carrier_phase,P", variable.as_str());
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    sci(x(r)),
                    sci(r.delta_tau),
                    sci(r.envelope),
                    sci(r.carrier_phase),
                    sci(r.p)
                );
            }
            out
        }
    };
    Ok(Outcome::ok(body))
}

pub fn check(args: &CheckArgs) -> Result<Outcome, CliError> {
    let format = args.output.format.unwrap_or(Format::Text);
    let mut m = RunManifest::new("check", format.as_str(), args.output.stamp);
    let geo = resolve_geometry(&args.geometry, &mut m)?;
    let species = Species::new(args.mass)?;
    m.set_f64("mass", args.mass);
    let report = closure_check(&geo.seq, &species);
    let body = match format {
        Format::Json => json_document(&m, to_value(&report)),
        _ => {
            let fields = Fields(vec![
                ("closed", if report.closed { 1.0 } else { 0.0 }, ""),
                ("moment0", report.moment0, "1/m"),
                ("moment1", report.moment1, "s/m"),
                ("moment2", report.moment2, "s^2/m"),
                ("delta_z_final", report.delta_z_final, "m"),
                ("delta_v_final", report.delta_v_final, "m/s"),
            ]);
            let mut s = fields.render(format, &m);
            if format == Format::Text {
                let _ = writeln!(s, "{}", if report.closed { "closed" } else { "open" });
            }
            s
        }
    };
    Ok(Outcome {
        body,
        code: if report.closed { EXIT_OK } else { EXIT_OPEN },
        note: (!report.closed).then(|| "geometry is not closed in phase space".to_string()),
    })
}

pub const SWEEP_FRACTIONS: [f64; 4] = [1e-3, 1e-4, 1e-5, 1e-6];

pub fn oracle(args: &OracleArgs) -> Result<Outcome, CliError> {
    let format = args.output.format.unwrap_or(Format::Text);
    let mut m = RunManifest::new("oracle", format.as_str(), args.output.stamp);
    let geo = resolve_geometry(&args.geometry, &mut m)?;
    let phys = resolve_physics(&args.physics, &mut m)?;
    let shape = match args.shape {
        Shape::Tophat => PulseShape::TopHat,
        Shape::Cosine => PulseShape::RaisedCosine,
    };
    let t_ref = geo.reference_time();
    m.set("steps", args.steps);
    m.set("shape", if shape == PulseShape::TopHat { "tophat" } else { "cosine" });
    m.set_f64("tol", args.tol);
    m.set_f64("reference_time", t_ref);

    if args.sweep_sigma {
        let widths: Vec<f64> = SWEEP_FRACTIONS.iter().map(|f| f * t_ref).collect();
        m.set("sigma", Value::Array(widths.iter().map(|w| Value::String(sci(*w))).collect()));
        let base = OracleConfig::new(widths[0]).with_steps(args.steps).with_shape(shape);
        for w in &widths {
            OracleConfig { pulse_width: *w, ..base }.validate(&geo.seq)?;
        }
        twinphase::require_closed(&geo.seq)?;
        let rep = convergence_study(&geo.seq, &phys.species, &phys.env, &phys.ics, &widths, &base, execution(&args.output))?;
        let body = match format {
            Format::Json => json_document(&m, to_value(&rep)),
            _ => {
                let mut out = m.comment_block();
                let _ = writeln!(out, "# exponent = {}", sci_opt(rep.exponent));
                let _ = writeln!(out, "# floor = {}", sci(rep.floor));
                let _ = writeln!(out, "# monotone = {}", rep.monotone);
                let _ = writeln!(out, "sigma,rel_residual,delta_tau_numeric");
                for r in &rep.rows {
                    let _ = writeln!(out, "{},{},{}", sci(r.sigma), sci(r.rel_residual), sci(r.delta_tau_numeric));
                }
                out
            }
        };
        let finest = rep.rows.last().map_or(f64::NAN, |r| r.rel_residual);
        let note = if !rep.monotone {
            Some("oracle residuals are not monotone above the integrator floor".to_string())
        } else if !(finest <= args.tol) {
            Some(format!("finest residual {} exceeds tolerance {}", sci(finest), sci(args.tol)))
        } else {
            None
        };
        return Ok(Outcome {
            body,
            code: if note.is_some() { EXIT_NUMERIC } else { EXIT_OK },
            note,
        });
    }

    let sigma = args.sigma.unwrap_or(1e-6 * t_ref);
    m.set_f64("sigma", sigma);
    let cfg = OracleConfig::new(sigma).with_steps(args.steps).with_shape(shape);
    cfg.validate(&geo.seq)?;
    let r = run_oracle(&geo.seq, &phys.species, &phys.env, &phys.ics, &cfg)?;
    let body = match format {
        Format::Json => json_document(&m, to_value(&r)),
        _ => Fields(vec![
            ("sigma", r.sigma, "s"),
            ("steps", r.steps as f64, ""),
            ("delta_tau_numeric", r.delta_tau_numeric, "s"),
            ("delta_tau_closed", r.delta_tau_closed.unwrap_or(f64::NAN), "s"),
            ("rel_residual", r.rel_residual.unwrap_or(f64::NAN), ""),
            ("gravito_recoil_numeric", r.gravito_recoil_numeric, "rad"),
            ("gravito_recoil_closed", r.gravito_recoil_closed.unwrap_or(f64::NAN), "rad"),
            ("total_phase_numeric", r.total_phase_numeric, "rad"),
            ("total_phase_closed", r.total_phase_closed.unwrap_or(f64::NAN), "rad"),
            ("decomposition_residual", r.action.decomposition_residual, "rad"),
            ("closure_delta_z", r.closure_residuals.delta_z, "m"),
            ("closure_delta_v", r.closure_residuals.delta_v, "m/s"),
        ])
        .render(format, &m),
    };
    let residual = r.rel_residual.unwrap_or(f64::NAN);
    let pass = residual <= args.tol;
    Ok(Outcome {
        body,
        code: if pass { EXIT_OK } else { EXIT_NUMERIC },
        note: (!pass).then(|| format!("relative residual {} exceeds tolerance {}", sci(residual), sci(args.tol))),
    })
}

pub fn trajectory(args: &TrajectoryArgs) -> Result<Outcome, CliError> {
    let format = args.output.format.unwrap_or(Format::Csv);
    let mut m = RunManifest::new("trajectory", format.as_str(), args.output.stamp);
    let geo = resolve_geometry(&args.geometry, &mut m)?;
    let phys = resolve_physics(&args.physics, &mut m)?;
    let t_end = geo.seq.duration();
    let dt = args.dt.unwrap_or(if t_end > 0.0 { t_end / 200.0 } else { 1.0 });
    m.set_f64("dt", dt);
    let rows = trajectory_table(&geo.seq, &phys.species, &phys.env, &phys.ics, dt)?;
    let body = match format {
        Format::Json => json_document(&m, to_value(&rows)),
        _ => {
            let mut out = m.comment_block();
            out.push_str("t,z1,v1,z2,v2,zg\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    sci(r.t),
                    sci(r.z1),
                    sci(r.v1),
                    sci(r.z2),
                    sci(r.v2),
                    sci(r.zg)
                );
            }
            out
        }
    };
    Ok(Outcome::ok(body))
}

pub fn export(args: &ExportArgs) -> Result<Outcome, CliError> {
    let mut m = RunManifest::new("export", "geometry", args.output.stamp);
    let geo = resolve_geometry(&args.geometry, &mut m)?;
    let mut body = m.comment_block();
    body.push_str(&serialize_geometry(&geo.seq));
    Ok(Outcome::ok(body))
}
