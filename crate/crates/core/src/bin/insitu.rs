//! Headless front-end: list designs, generate meshes, run estimations and
//! requirement checks, serve the HTTP API.
//!
//! Exit codes: 0 success, 1 I/O or parse error, 2 constraint violation,
//! 3 toppled, 4 requirement failed.

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use insitu_core::design::{assign_all, set_pose, Configuration, Design, ParamKind, ParamValue, Violation};
use insitu_core::dsl::{builtin, list_builtin, Suffix};
use insitu_core::environment::{load_scene_with, AxisRemap, EnvironmentScene, ScanFormat, DEFAULT_SEED};
use insitu_core::estimators::{
    check_requirements, estimate_lighting, estimate_stability_in, PointLight, RequirementSpec,
};
use insitu_core::geometry::{export_stl, generate_mesh, TriangleMesh};
use insitu_core::math::Vec3;

#[derive(Parser)]
#[command(name = "insitu", version, about = "Configure parametric designs and validate them in a scanned environment")]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List catalog designs with their parameter counts.
    ListDesigns,
    /// Write a binary STL of a configured design.
    Generate {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        out: PathBuf,
    },
    #[command(subcommand)]
    Estimate(Estimate),
    /// Evaluate a requirement spec (JSON) against a configured design.
    Check {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long)]
        requirements: PathBuf,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "INSITU_HOST", default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, env = "INSITU_PORT", default_value_t = 8080)]
        port: u16,
        /// Allowed CORS origin; any origin when unset.
        #[arg(long, env = "INSITU_CORS_ORIGIN")]
        cors_origin: Option<String>,
    },
}

#[derive(Subcommand)]
enum Estimate {
    /// Drop simulation on the support plane below the design.
    Stability {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        env: EnvArgs,
    },
    /// Shadow coverage and illuminance from a point light.
    Lighting {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        env: EnvArgs,
        /// x,y,z[,intensity]
        #[arg(long)]
        light: String,
        /// Write the top-down shadow raster as PGM.
        #[arg(long)]
        raster: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    design: String,
    /// name=value; numbers may carry a unit suffix (35cm, 2mm, 10deg).
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
    /// x,y,z[,yaw] with yaw in radians.
    #[arg(long)]
    pose: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Up {
    Y,
    Z,
}

#[derive(Args)]
struct EnvArgs {
    /// Environment scan (.obj or .ply).
    #[arg(long)]
    env: Option<PathBuf>,
    /// Up axis of the scan.
    #[arg(long, value_enum, default_value = "y")]
    up: Up,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Violations(Vec<Violation>),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CliResult = Result<ExitCode, Failure>;

fn numbers(s: &str, what: &str, counts: &[usize]) -> Result<Vec<f64>, Failure> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("{what}: expected comma-separated numbers, got `{s}`")))?;
    if !counts.contains(&v.len()) || v.iter().any(|x| !x.is_finite()) {
        return Err(Failure::Usage(format!("{what}: expected {counts:?} finite numbers, got `{s}`")));
    }
    Ok(v)
}

/// Parses `name=value` against the parameter's kind.
fn assignment(design: &Design, token: &str) -> Result<(String, ParamValue), Failure> {
    let (name, raw) = token.split_once('=').ok_or_else(|| Failure::Usage(format!("--set expects name=value, got `{token}`")))?;
    let (name, raw) = (name.trim(), raw.trim());
    let def = design
        .param(name)
        .ok_or_else(|| Failure::Usage(format!("design {} has no parameter `{name}`", design.id)))?;
    let bad = || Failure::Usage(format!("cannot parse `{raw}` for {} parameter `{name}`", def.kind.name()));
    let value = match &def.kind {
        ParamKind::Continuous { .. } | ParamKind::Discrete { .. } => {
            let split = raw.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(raw.len());
            let (num, suffix) = raw.split_at(split);
            let factor = if suffix.is_empty() { 1.0 } else { Suffix::from_word(suffix).ok_or_else(bad)?.factor() };
            ParamValue::Number(num.parse::<f64>().map_err(|_| bad())? * factor)
        }
        ParamKind::Boolean => ParamValue::Bool(raw.parse().map_err(|_| bad())?),
        ParamKind::Option { .. } | ParamKind::Text { .. } => ParamValue::Text(raw.to_string()),
        ParamKind::Curve { .. } => return Err(bad()),
    };
    Ok((name.to_string(), value))
}

fn configure(args: &DesignArgs) -> Result<(&'static Design, Configuration), Failure> {
    let design = builtin(&args.design).ok_or_else(|| Failure::Usage(format!("unknown design `{}`", args.design)))?;
    let assignments = args.set.iter().map(|t| assignment(design, t)).collect::<Result<Vec<_>, _>>()?;
    let mut config = assign_all(design, &design.default_configuration(), &assignments)?.map_err(Failure::Violations)?;
    if let Some(p) = &args.pose {
        let v = numbers(p, "--pose", &[3, 4])?;
        config = set_pose(&config, Vec3::new(v[0], v[1], v[2]), v.get(3).copied().unwrap_or(0.0));
    }
    Ok((design, config))
}

fn load_env(args: &EnvArgs) -> Result<Option<EnvironmentScene>, Failure> {
    let Some(path) = &args.env else { return Ok(None) };
    let name = path.to_string_lossy();
    let format = ScanFormat::from_extension(&name).ok_or_else(|| Failure::Usage(format!("{name}: expected .obj or .ply")))?;
    let bytes = std::fs::read(path).map_err(|e| Failure::Usage(format!("{name}: {e}")))?;
    let remap = match args.up {
        Up::Y => AxisRemap::YUp,
        Up::Z => AxisRemap::ZUp,
    };
    Ok(Some(load_scene_with(&bytes, format, remap, args.seed).map_err(|e| Failure::Usage(format!("{name}: {e}")))?))
}

fn require_env(args: &EnvArgs) -> Result<EnvironmentScene, Failure> {
    load_env(args)?.ok_or_else(|| Failure::Usage("--env is required".into()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn list_designs(as_json: bool) -> CliResult {
    if as_json {
        let rows: Vec<_> = list_builtin()
            .iter()
            .map(|d| json!({ "id": d.id, "generator": d.generator.generator.name(), "parameters": d.parameters.len() }))
            .collect();
        print_json(&rows)?;
    } else {
        println!("{:<16} {:<18} {:>6}", "ID", "GENERATOR", "PARAMS");
        for d in list_builtin() {
            println!("{:<16} {:<18} {:>6}", d.id, d.generator.generator.name(), d.parameters.len());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn mesh_of(design: &Design, config: &Configuration) -> Result<TriangleMesh, Failure> {
    Ok(generate_mesh(design, config)?)
}

fn generate(args: &DesignArgs, out: &Path, as_json: bool) -> CliResult {
    let (design, config) = configure(args)?;
    let mesh = mesh_of(design, &config)?;
    let stl = export_stl(&mesh)?;
    write(out, &stl)?;
    if as_json {
        print_json(&json!({ "design": design.id, "triangles": mesh.triangles.len(), "bytes": stl.len(), "out": out }))?;
    } else {
        println!("wrote {} ({} triangles, {} bytes)", out.display(), mesh.triangles.len(), stl.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn stability(args: &DesignArgs, env: &EnvArgs, as_json: bool) -> CliResult {
    let (design, config) = configure(args)?;
    let scene = require_env(env)?;
    let report = estimate_stability_in(&mesh_of(design, &config)?, &scene)?;
    if as_json {
        print_json(&report)?;
    } else {
        println!("toppled: {}", report.toppled);
        println!("settled: {}", report.settled);
        if let Some(t) = report.settle_time {
            println!("settle time: {t:.3} s");
        }
        println!("tilt: {:.2} deg", report.tilt_deg);
        println!("quasi-static margin: {:.4} m", report.quasi_static_margin);
    }
    Ok(ExitCode::from(if report.toppled { 3 } else { 0 }))
}

fn lighting(args: &DesignArgs, env: &EnvArgs, light: &str, raster: Option<&Path>, as_json: bool) -> CliResult {
    let (design, config) = configure(args)?;
    let scene = require_env(env)?;
    let l = numbers(light, "--light", &[3, 4])?;
    let light = PointLight { position: Vec3::new(l[0], l[1], l[2]), intensity: l.get(3).copied().unwrap_or(1.0) };
    let report = estimate_lighting(&mesh_of(design, &config)?, &scene, &light, None)?;
    if let Some(path) = raster {
        write(path, &report.shadow_raster.to_pgm())?;
    }
    if as_json {
        print_json(&json!({
            "shadow_coverage": report.shadow_coverage,
            "mean_illuminance": report.mean_illuminance,
            "samples": report.samples.len(),
            "raster": raster,
        }))?;
    } else {
        println!("shadow coverage: {:.4}", report.shadow_coverage);
        println!("mean illuminance: {:.6}", report.mean_illuminance);
        println!("samples: {}", report.samples.len());
        if let Some(path) = raster {
            println!("raster: {}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn check(args: &DesignArgs, env: &EnvArgs, requirements: &Path, as_json: bool) -> CliResult {
    let (design, config) = configure(args)?;
    let text = std::fs::read_to_string(requirements).map_err(|e| Failure::Usage(format!("{}: {e}", requirements.display())))?;
    let spec: RequirementSpec =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", requirements.display())))?;
    let scene = load_env(env)?;
    let results = check_requirements(design, &config, &mesh_of(design, &config)?, scene.as_ref(), &spec)?;
    let all = results.iter().all(|r| r.passed);
    if as_json {
        print_json(&json!({ "all_passed": all, "results": results }))?;
    } else {
        for r in &results {
            let verdict = if r.passed { "PASS" } else { "FAIL" };
            println!("{verdict} {:<24} measured {:.4} limit {:.4} excess {:+.4}", r.clause, r.measured, r.limit, r.excess);
        }
    }
    Ok(ExitCode::from(if all { 0 } else { 4 }))
}

fn serve(host: IpAddr, port: u16, cors_origin: Option<&str>) -> CliResult {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(insitu_core::service::serve(SocketAddr::new(host, port), cors_origin))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> CliResult {
    let j = cli.json;
    match &cli.command {
        Command::ListDesigns => list_designs(j),
        Command::Generate { design, out } => generate(design, out, j),
        Command::Estimate(Estimate::Stability { design, env }) => stability(design, env, j),
        Command::Estimate(Estimate::Lighting { design, env, light, raster }) => {
            lighting(design, env, light, raster.as_deref(), j)
        }
        Command::Check { design, env, requirements } => check(design, env, requirements, j),
        Command::Serve { host, port, cors_origin } => serve(*host, *port, cors_origin.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Violations(vs)) => {
            for v in &vs {
                eprintln!("violation: {v}");
            }
            ExitCode::from(2)
        }
    }
}
