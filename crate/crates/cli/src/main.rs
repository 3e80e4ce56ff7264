//! `willmore`: batch front end for the energy, flow, sweep and neck tools.
//!
//! Results go to stdout as one JSON document. Artifacts (CSV, OBJ, JSON) are
//! written under `--out` when it is given. Errors print a JSON diagnostic on
//! stderr and exit with 1 (domain outcome) or 2 (bad input).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use willmore_core::axisym::{axisym_metrics, classify_shape, isothermal_coordinate};
use willmore_core::blowup::{analyze_neck, detect_neck, energy_identity, multiplier_asymptotics, scaling_law};
use willmore_core::error::ErrorKind;
use willmore_core::functionals::metrics;
use willmore_core::io::{
    load_mesh, load_profile, write_history_csv, write_isothermal_csv, write_obj, write_profile_csv,
};
use willmore_core::optimizer::{default_seed, minimize, sweep, FlowConfig, Representation, Surface};
use willmore_core::oracle::{reference_metrics, ReferenceSurface};
use willmore_core::verify::{run_suite, DEFAULT_SEED};
use willmore_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Energy,
    Minimize,
    Sweep,
    AnalyzeNeck,
    Verify,
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Repr {
    Axisym,
    Mesh,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Metrics of a mesh or profile.
    Energy,
    /// Constrained minimization at one ratio.
    Minimize,
    /// Continuation over decreasing ratios with scaling and multiplier reports.
    Sweep,
    /// Neck detection, rescaled limits and the energy split of a profile.
    AnalyzeNeck,
    /// Oracle and invariant suite.
    Verify,
    /// Emit a reference surface and its quadrature metrics.
    Reference,
}

impl Command {
    fn mode(&self) -> Mode {
        match self {
            Command::Energy => Mode::Energy,
            Command::Minimize => Mode::Minimize,
            Command::Sweep => Mode::Sweep,
            Command::AnalyzeNeck => Mode::AnalyzeNeck,
            Command::Verify => Mode::Verify,
            Command::Reference => Mode::Reference,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "willmore",
    version,
    about = "Willmore minimization at prescribed isoperimetric ratio"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Input mesh (.obj or .off).
    #[arg(long, global = true)]
    mesh: Option<PathBuf>,
    /// Input meridian profile (CSV with header rho,z).
    #[arg(long, global = true)]
    profile: Option<PathBuf>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Comma separated, strictly decreasing.
    #[arg(long, global = true, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    #[arg(long, global = true, value_enum)]
    repr: Option<Repr>,
    /// Directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file whose fields override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Reference surface: sphere, ellipsoid, catenoid or double-sphere-neck.
    #[arg(long, global = true)]
    surface: Option<String>,
    /// Reference parameters: r | a,b,c | c,zmax | c.
    #[arg(long, global = true, value_delimiter = ',')]
    params: Option<Vec<f64>>,
    /// Mesh resolution for reference surfaces.
    #[arg(long, global = true)]
    resolution: Option<u32>,
}

/// Everything a run depends on. `--config` files use the same field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RunConfig {
    mode: Mode,
    mesh: Option<PathBuf>,
    profile: Option<PathBuf>,
    sigmas: Option<Vec<f64>>,
    out: Option<PathBuf>,
    seed: u64,
    reference: Option<ReferenceSurface>,
    resolution: u32,
    profile_samples: usize,
    flow: FlowConfig,
}

fn reference_from_flags(name: &str, p: &[f64]) -> Result<ReferenceSurface> {
    let need = |n: usize| {
        if p.len() == n {
            Ok(())
        } else {
            Err(Error::Config(format!("{name} takes {n} parameter(s), got {}", p.len())))
        }
    };
    let s = match name {
        "sphere" => {
            need(1)?;
            ReferenceSurface::Sphere { r: p[0] }
        }
        "ellipsoid" => {
            need(3)?;
            ReferenceSurface::Ellipsoid {
                a: p[0],
                b: p[1],
                c: p[2],
            }
        }
        "catenoid" => {
            need(2)?;
            ReferenceSurface::Catenoid { c: p[0], zmax: p[1] }
        }
        "double-sphere-neck" => {
            need(1)?;
            ReferenceSurface::DoubleSphereNeck { c: p[0] }
        }
        _ => return Err(Error::Config(format!("unknown reference surface {name:?}"))),
    };
    Ok(s)
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o,
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut flow = FlowConfig::default();
    if let Some(s) = cli.sigma {
        flow.sigma_target = s;
    }
    let repr = match (cli.repr, &cli.mesh) {
        (Some(Repr::Mesh), _) | (None, Some(_)) => Representation::Mesh,
        _ => Representation::Axisym,
    };
    flow.representation = repr;
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    flow.seed = seed;
    let reference = match &cli.surface {
        Some(name) => Some(reference_from_flags(name, cli.params.as_deref().unwrap_or(&[]))?),
        None => None,
    };
    let config = RunConfig {
        mode: cli.command.mode(),
        mesh: cli.mesh.clone(),
        profile: cli.profile.clone(),
        sigmas: cli.sigmas.clone(),
        out: cli.out.clone(),
        seed,
        reference,
        resolution: cli.resolution.unwrap_or(4),
        profile_samples: 2000,
        flow,
    };
    let Some(path) = &cli.config else {
        return Ok(config);
    };
    let text = fs::read_to_string(path)?;
    let over: Value = serde_json::from_str(&text)?;
    let mut value = serde_json::to_value(&config)?;
    merge(&mut value, over);
    let mut merged: RunConfig = serde_json::from_value(value)?;
    // the subcommand always wins over a mode field in the file
    merged.mode = config.mode;
    Ok(merged)
}

struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Output {
            dir: dir.map(Path::to_path_buf),
        })
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        if let Some(d) = &self.dir {
            fs::write(d.join(name), text)?;
        }
        Ok(())
    }

    fn json(&self, name: &str, v: &impl Serialize) -> Result<()> {
        self.write(name, &(serde_json::to_string_pretty(v)? + "\n"))
    }
}

fn input_surface(cfg: &RunConfig) -> Result<Option<Surface>> {
    match (&cfg.mesh, &cfg.profile) {
        (Some(_), Some(_)) => Err(Error::Config("give either --mesh or --profile, not both".into())),
        (Some(m), None) => Ok(Some(Surface::Mesh(load_mesh(m)?))),
        (None, Some(p)) => Ok(Some(Surface::Axisym(load_profile(p)?))),
        (None, None) => Ok(None),
    }
}

fn write_surface(out: &Output, name: &str, s: &Surface) -> Result<()> {
    match s {
        Surface::Mesh(m) => out.write(&format!("{name}.obj"), &write_obj(m)),
        Surface::Axisym(p) => out.write(&format!("{name}.csv"), &write_profile_csv(p)),
    }
}

fn energy(cfg: &RunConfig, _out: &Output) -> Result<Value> {
    let m = match input_surface(cfg)? {
        Some(Surface::Mesh(m)) => metrics(&m)?,
        Some(Surface::Axisym(p)) => axisym_metrics(&p)?,
        None => match &cfg.reference {
            Some(r) => reference_metrics(r)?,
            None => return Err(Error::Config("energy needs --mesh, --profile or --surface".into())),
        },
    };
    Ok(serde_json::to_value(m)?)
}

fn run_minimize(cfg: &RunConfig, out: &Output) -> Result<Value> {
    let mut flow = cfg.flow.clone();
    let seed = match input_surface(cfg)? {
        Some(s) => {
            flow.representation = s.representation();
            s
        }
        None => default_seed(&flow)?,
    };
    flow.validate()?;
    let state = minimize(&seed, &flow)?;
    let metrics = state.metrics()?;
    let shape = match &state.surface {
        Surface::Axisym(p) => Some(classify_shape(p)?),
        Surface::Mesh(_) => None,
    };
    write_surface(out, "minimizer", &state.surface)?;
    out.write("history.csv", &write_history_csv(&state.history))?;
    let summary = json!({
        "sigmaTarget": flow.sigma_target,
        "representation": flow.representation,
        "metrics": metrics,
        "multiplier": state.multiplier(),
        "termination": state.termination.map(|t| t.as_str()),
        "iterations": state.iteration,
        "residual": state.residual(),
        "initialWillmore": state.initial_willmore,
        "shape": shape,
    });
    out.json("result.json", &summary)?;
    Ok(summary)
}

fn run_sweep(cfg: &RunConfig, out: &Output) -> Result<Value> {
    let sigmas = cfg
        .sigmas
        .as_ref()
        .ok_or_else(|| Error::Config("sweep needs --sigmas".into()))?;
    let result = sweep(sigmas, &cfg.flow)?;
    out.write("sweep.csv", &result.to_csv())?;
    out.json("records.json", &result.records)?;
    for (i, state) in result.states.iter().enumerate() {
        if let Some(s) = state {
            write_surface(out, &format!("stage{i:02}"), &s.surface)?;
        }
    }
    let points = result.scaling_points();
    let scaling = if points.len() >= 3 {
        Some(scaling_law(&points)?)
    } else {
        None
    };
    out.json("scaling.json", &scaling)?;
    let series = result.multiplier_series();
    let multipliers = if series.is_empty() {
        None
    } else {
        Some(multiplier_asymptotics(&series, true)?)
    };
    out.json("multiplier.json", &multipliers)?;
    let identity = result
        .records
        .iter()
        .zip(&result.necks)
        .filter(|(r, _)| !r.failed())
        .map(|(r, n)| json!({"sigma": r.sigma, "energy": energy_identity(n.as_ref(), r.total_a2)}))
        .collect::<Vec<_>>();
    out.json("energy_identity.json", &identity)?;
    Ok(json!({
        "records": result.records,
        "scaling": scaling,
        "multiplier": multipliers,
        "energyIdentity": identity,
    }))
}

fn run_analyze(cfg: &RunConfig, out: &Output) -> Result<Value> {
    let profile = match input_surface(cfg)? {
        Some(Surface::Axisym(p)) => p,
        Some(Surface::Mesh(_)) => return Err(Error::Config("analyze-neck needs a profile (--profile)".into())),
        None => match &cfg.reference {
            Some(r) => r.profile(cfg.profile_samples)?,
            None => return Err(Error::Config("analyze-neck needs --profile or --surface".into())),
        },
    };
    let m = axisym_metrics(&profile)?;
    let iso = isothermal_coordinate(&profile)?;
    out.write("isothermal.csv", &write_isothermal_csv(&iso))?;
    let (report, limits) = match analyze_neck(&profile, &iso) {
        Ok((r, l)) => (r, Some(l)),
        Err(Error::ScalesNotSeparated(why)) => {
            log::warn!("limits not cut out: {why}");
            (detect_neck(&profile, &iso)?, None)
        }
        Err(e) => return Err(e),
    };
    if let Some(l) = &limits {
        out.write("limit_big.csv", &write_profile_csv(&l.big.profile))?;
        out.write("limit_small.csv", &write_profile_csv(&l.small.profile))?;
        out.write("limit_neck.csv", &write_profile_csv(&l.neck.profile))?;
    }
    let summary = json!({
        "metrics": m,
        "neck": report,
        "energyIdentity": energy_identity(Some(&report), m.total_a2),
        "limitAreas": limits.as_ref().map(|l| [l.big.area, l.small.area, l.neck.area]),
    });
    out.json("neck.json", &summary)?;
    Ok(summary)
}

fn run_reference(cfg: &RunConfig, out: &Output) -> Result<Value> {
    let r = cfg
        .reference
        .as_ref()
        .ok_or_else(|| Error::Config("reference needs --surface and --params".into()))?;
    r.validate()?;
    let m = reference_metrics(r)?;
    out.write("reference.obj", &write_obj(&r.mesh(cfg.resolution)?))?;
    if r.meridian().is_some() {
        out.write("reference.csv", &write_profile_csv(&r.profile(cfg.profile_samples)?))?;
    }
    let summary = json!({"surface": r, "metrics": m});
    out.json("reference.json", &summary)?;
    Ok(summary)
}

/// Ok(true) when the mode succeeded, Ok(false) for a failing verify suite.
fn run(cfg: &RunConfig) -> Result<bool> {
    let out = Output::new(cfg.out.as_deref())?;
    let (value, ok) = match cfg.mode {
        Mode::Energy => (energy(cfg, &out)?, true),
        Mode::Minimize => (run_minimize(cfg, &out)?, true),
        Mode::Sweep => (run_sweep(cfg, &out)?, true),
        Mode::AnalyzeNeck => (run_analyze(cfg, &out)?, true),
        Mode::Reference => (run_reference(cfg, &out)?, true),
        Mode::Verify => {
            let report = run_suite(cfg.seed);
            out.json("verify.json", &report)?;
            let ok = report.passed;
            (serde_json::to_value(report)?, ok)
        }
    };
    // a closed pipe on stdout (e.g. `| head`) is not an error of the run
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = writeln!(stdout, "{}", serde_json::to_string_pretty(&value)?) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            return Err(e.into());
        }
    }
    Ok(ok)
}

fn diagnostic(e: &Error) -> Value {
    let mut d = json!({
        "error": e.code(),
        "kind": match e.kind() {
            ErrorKind::Structural => "structural",
            ErrorKind::Domain => "domain",
        },
        "message": e.to_string(),
    });
    if let Error::Parse { line, column, .. } = e {
        d["line"] = json!(line);
        d["column"] = json!(column);
    }
    d
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = build_config(&cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", diagnostic(&e));
            match e.kind() {
                ErrorKind::Domain => ExitCode::from(1),
                ErrorKind::Structural => ExitCode::from(2),
            }
        }
    }
}
