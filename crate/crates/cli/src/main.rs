// `!(x > 0.0)` is deliberate: NaN must fail these checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hjdyn::eom::{derive_eom, integrate, Dynamics, Trajectory};
use hjdyn::expr::{parse, Bindings, ProbeConfig};
use hjdyn::hjpde::{build_constraints, HjpdeSet};
use hjdyn::integrability::{consistency_iterate, IntegrabilityReport};
use hjdyn::legendre::{momentum_name, LagrangianSystem};
use hjdyn::quantize::{
    build_operator, evolve_observed, expectations, write_csv, Boundary, Grid, HamiltonianOperator,
    Wavefunction, DEFAULT_DT, DEFAULT_POINTS,
};
use hjdyn::systems::{parse_system_file, Template};
use hjdyn::verify;
use serde_json::json;

/// Hamilton-Jacobi analysis and simulation of singular Lagrangians.
#[derive(Debug, Parser)]
#[command(name = "hjdyn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Residual below which a probed expression counts as zero.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_zero: f64,

    /// Constraint residual tolerated along trajectories before warning.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_surface: f64,

    /// Seed for the probe-point generator.
    #[arg(long, global = true, env = "HJDYN_SEED")]
    seed: Option<u64>,

    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Constraints, vanishing verdict, integrability and classification as JSON.
    Analyze {
        #[command(flatten)]
        system: SystemArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Integrate the total differential equations and write the trajectory.
    Simulate {
        #[command(flatten)]
        system: SystemArg,
        /// Initial values, e.g. `q=1,p=0` or `p=3,0,0` for p1..p3.
        #[arg(long, default_value = "")]
        initial: String,
        /// Evolution-parameter interval as `start:end`.
        #[arg(long, default_value = "0:10", allow_hyphen_values = true)]
        t_span: String,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Keep every n-th sample.
        #[arg(long, default_value_t = 1)]
        every: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evolve a wavefunction under the quantized Hamiltonian.
    Quantize(QuantizeArgs),
    /// Run the self-check suite and print a pass/fail table.
    Verify {
        /// Print the results as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
struct SystemArg {
    /// `template:<id>?key=value&...` or a path to a system file.
    #[arg(long)]
    system: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).multiple(false))]
struct QuantizeArgs {
    /// Potential V(q) for H = p^2/2 + V(q).
    #[arg(long, group = "source")]
    potential: Option<String>,
    /// Free relativistic particle, e.g. `m=1,c=1`.
    #[arg(long, group = "source")]
    relativistic: Option<String>,
    /// Hamiltonian in `q` and `p`, e.g. `p^2/2 + q^4`.
    #[arg(long, group = "source")]
    hamiltonian: Option<String>,
    /// `gaussian:center=0,width=1,k=0` or `plane:mode=1`.
    #[arg(long, default_value = "gaussian:center=0,width=1,k=0")]
    initial: String,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    grid: usize,
    /// Domain as `min:max`.
    #[arg(long, default_value = "-10:10", allow_hyphen_values = true)]
    domain: String,
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 100)]
    snapshot_every: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BoundaryArg {
    Dirichlet,
    Periodic,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<io::Error>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    for (name, v) in [
        ("--tol-zero", cli.tol_zero),
        ("--tol-surface", cli.tol_surface),
    ] {
        if !(v > 0.0) {
            bail!("{name} must be positive, got {v}");
        }
    }
    let mut config = ProbeConfig {
        tol: cli.tol_zero,
        ..ProbeConfig::default()
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    match cli.command {
        Command::Analyze { system, output } => {
            let set = build_constraints(&load_system(&system.system)?, &config)?;
            let report = consistency_iterate(&set, &config)?;
            let doc = analysis_json(&set, &report);
            emit(output.as_deref(), |w| {
                serde_json::to_writer_pretty(&mut *w, &doc)?;
                writeln!(w)?;
                Ok(())
            })?;
        }
        Command::Simulate {
            system,
            initial,
            t_span,
            dt,
            every,
            format,
            output,
        } => {
            let (t0, t1) = range(&t_span, "--t-span")?;
            if !(dt > 0.0) || every == 0 {
                bail!("--dt and --every must be positive");
            }
            let set = build_constraints(&load_system(&system.system)?, &config)?;
            let (eom, _) = derive_eom(&set, &config)?;
            let mut dynamics = Dynamics::new(&set, &eom)?;
            dynamics.surface_tol = cli.tol_surface;
            let mut given = initial_bindings(&dynamics, &initial)?;
            if given.contains(&dynamics.parameter) {
                bail!("set the start of `{}` through --t-span", dynamics.parameter);
            }
            given.set(dynamics.parameter.clone(), t0);
            let start = dynamics.initial_state(&given)?;
            let mut traj = integrate(&dynamics, &start, t1, dt)?;
            thin(&mut traj, every);
            emit(output.as_deref(), |w| match format {
                Format::Csv => Ok(traj.write_csv(w)?),
                Format::Json => {
                    serde_json::to_writer(&mut *w, &json!({"schema": 1, "trajectory": traj}))?;
                    writeln!(w)?;
                    Ok(())
                }
            })?;
        }
        Command::Quantize(args) => quantize(args)?,
        Command::Verify { json } => {
            let results = verify::run_all(&config);
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({"schema": 1, "checks": results}))?
                );
            } else {
                for r in &results {
                    let mark = if r.passed { "PASS" } else { "FAIL" };
                    println!(
                        "{mark} {:>2} {:<27} {:>7.2}s  {}",
                        r.id, r.name, r.seconds, r.detail
                    );
                }
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                eprintln!("{failed} of {} checks failed", results.len());
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn load_system(selector: &str) -> Result<LagrangianSystem> {
    if let Some(uri) = selector.strip_prefix("template:") {
        return Ok(Template::parse_uri(uri)?.instantiate()?);
    }
    let text = std::fs::read_to_string(selector).with_context(|| format!("reading {selector}"))?;
    parse_system_file(&text).with_context(|| format!("in {selector}"))
}

/// Writes to `path`, or stdout when absent.
fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush()
                .with_context(|| format!("writing {}", p.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn analysis_json(set: &HjpdeSet, report: &IntegrabilityReport) -> serde_json::Value {
    let sys = &set.system;
    let constraints: Vec<_> = report
        .constraints()
        .map(|c| {
            let class = report.classification.of(&c.label);
            json!({
                "label": c.label,
                "expression": c.expression.to_string(),
                "generation": c.generation,
                "origin": c.origin,
                "class": class,
            })
        })
        .collect();
    let directions: Vec<_> = set
        .directions
        .iter()
        .map(|d| {
            json!({
                "label": d.label,
                "parameter": d.parameter,
                "momentum": d.momentum,
                "hamiltonian": d.hamiltonian.to_string(),
            })
        })
        .collect();
    let variations: Vec<_> = report
        .verdicts
        .iter()
        .map(|v| json!({"label": v.label, "verdict": v.verdict.label(), "expression": v.expression.to_string()}))
        .collect();
    json!({
        "schema": 1,
        "system": sys.name,
        "coordinates": sys.coordinates,
        "velocities": sys.velocities,
        "lagrangian": sys.lagrangian.to_string(),
        "dimension": sys.dimension(),
        "rank": sys.rank,
        "canonical_hamiltonian": set.canonical_hamiltonian.to_string(),
        "vanishing": set.vanishing.label(),
        "vanishing_detail": set.vanishing,
        "evolution": set.evolution_direction().label,
        "directions": directions,
        "constraints": constraints,
        "integrability": {
            "integrable": report.integrable,
            "closed_at_generation_zero": report.closed_at_generation_zero(),
            "generations": report.generations.len(),
            "variations": variations,
            "relations": report.relations,
        },
        "classification": report.classification,
    })
}

/// Parses `a=1,b=2` or `p=3,0,0`; bare values extend the previous key, and a
/// key with several values (or one that is not a state variable) fills
/// `key1, key2, ...`.
fn initial_bindings(dynamics: &Dynamics, text: &str) -> Result<Bindings> {
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for token in text
        .split([',', ';', ' '])
        .map(str::trim)
        .filter(|t| !t.is_empty())
    {
        let value = match token.split_once('=') {
            Some((k, v)) => {
                groups.push((k.trim().to_string(), Vec::new()));
                v.trim()
            }
            None => token,
        };
        let (_, values) = groups
            .last_mut()
            .ok_or_else(|| anyhow!("initial value `{token}` has no name"))?;
        values.push(
            value
                .parse()
                .with_context(|| format!("bad number `{value}` in --initial"))?,
        );
    }
    let known = |n: &str| n == dynamics.parameter || dynamics.index(n).is_some();
    // Momenta of the coordinates other than the evolution parameter.
    let momenta: Vec<String> = dynamics
        .names
        .iter()
        .map(|q| momentum_name(q))
        .filter(|p| dynamics.index(p).is_some())
        .collect();
    let mut b = Bindings::new();
    for (key, values) in groups {
        if values.len() == 1 && known(&key) {
            b.set(key, values[0]);
            continue;
        }
        if values.len() == 1 && key == "p" && momenta.len() == 1 {
            b.set(momenta[0].clone(), values[0]);
            continue;
        }
        for (i, v) in values.iter().enumerate() {
            let name = format!("{key}{}", i + 1);
            if !known(&name) {
                bail!(
                    "`{key}` with {} values: no state variable `{name}`",
                    values.len()
                );
            }
            b.set(name, *v);
        }
    }
    Ok(b)
}

/// Parses `lo:hi` with `lo < hi`.
fn range(text: &str, flag: &str) -> Result<(f64, f64)> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("{flag} must look like min:max"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .with_context(|| format!("{flag}: bad start `{lo}`"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .with_context(|| format!("{flag}: bad end `{hi}`"))?;
    if !(hi > lo) {
        bail!("{flag}: end must exceed start, got {lo}:{hi}");
    }
    Ok((lo, hi))
}

fn thin(traj: &mut Trajectory, every: usize) {
    if every == 1 {
        return;
    }
    let last = traj.samples.len() - 1;
    let keep = |i: usize| i.is_multiple_of(every) || i == last;
    traj.samples = traj
        .samples
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(_, s)| s.clone())
        .collect();
    traj.residuals = traj
        .residuals
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(_, r)| *r)
        .collect();
}

fn key_values(text: &str) -> Result<Vec<(String, f64)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| anyhow!("expected key=value, got `{item}`"))?;
            let v: f64 = v
                .trim()
                .parse()
                .with_context(|| format!("bad number in `{item}`"))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn lookup(pairs: &[(String, f64)], key: &str, default: f64) -> f64 {
    pairs
        .iter()
        .find(|(k, _)| k == key)
        .map_or(default, |(_, v)| *v)
}

fn quantize(args: QuantizeArgs) -> Result<()> {
    let (lo, hi) = range(&args.domain, "--domain")?;
    if !(args.dt > 0.0) || args.steps == 0 || args.snapshot_every == 0 {
        bail!("--dt, --steps and --snapshot-every must be positive");
    }
    let boundary = match (args.boundary, &args.relativistic) {
        (Some(BoundaryArg::Dirichlet), _) => Boundary::Dirichlet,
        (Some(BoundaryArg::Periodic), _) | (None, Some(_)) => Boundary::Periodic,
        (None, None) => Boundary::Dirichlet,
    };
    let grid = Grid::new(lo, hi, args.grid, boundary)?;
    let op = if let Some(v) = &args.potential {
        HamiltonianOperator::potential(&parse(v)?, &grid)?
    } else if let Some(mc) = &args.relativistic {
        let kv = key_values(mc)?;
        HamiltonianOperator::relativistic(lookup(&kv, "m", 1.0), lookup(&kv, "c", 1.0), &grid)?
    } else {
        let h = args
            .hamiltonian
            .as_deref()
            .expect("clap enforces one Hamiltonian source");
        build_operator(&parse(h)?, "q", "p", &grid)?
    };

    let (kind, rest) = args
        .initial
        .split_once(':')
        .unwrap_or((args.initial.as_str(), ""));
    let kv = key_values(rest)?;
    let psi = match kind {
        "gaussian" => Wavefunction::gaussian(
            &grid,
            lookup(&kv, "center", 0.0),
            lookup(&kv, "width", 1.0),
            lookup(&kv, "k", 0.0),
        )?,
        "plane" => {
            let mode = lookup(&kv, "mode", 1.0);
            if mode.fract() != 0.0 {
                bail!("plane-wave mode must be an integer, got {mode}");
            }
            Wavefunction::plane_wave(&grid, mode as i64)?
        }
        other => bail!("unknown initial state `{other}` (expected gaussian or plane)"),
    };

    let mut snapshots = Vec::new();
    let (end, stats) = evolve_observed(&psi, &op, args.dt, args.steps, args.snapshot_every, |w| {
        snapshots.push(w.clone())
    })?;
    if snapshots.last().map(|s| s.time) != Some(end.time) {
        snapshots.push(end.clone());
    }
    match expectations(&end, &op) {
        Ok(e) => log::info!(
            "t = {}: <q> = {}, <p> = {}, <H> = {}, norm drift {:e}",
            end.time,
            e.position,
            e.momentum,
            e.energy,
            stats.max_norm_drift
        ),
        Err(e) => log::warn!("{e}"),
    }

    emit(args.output.as_deref(), |w| match args.format {
        Format::Csv => Ok(write_csv(&snapshots, w)?),
        Format::Json => {
            let frames: Vec<_> = snapshots
                .iter()
                .map(|s| {
                    json!({
                        "t": s.time,
                        "re": s.psi.iter().map(|c| c.re).collect::<Vec<_>>(),
                        "im": s.psi.iter().map(|c| c.im).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let doc = json!({"schema": 1, "grid": grid, "x": grid.points(), "snapshots": frames, "stats": stats});
            serde_json::to_writer(&mut *w, &doc)?;
            writeln!(w)?;
            Ok(())
        }
    })
}
