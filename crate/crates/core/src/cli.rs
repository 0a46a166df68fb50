//! The `chordmink` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::chord::{chord_functionals, lp_weights, ChordMethod, EstimatorOptions};
use crate::error::{Error, Result};
use crate::measure::{
    discretize, general_position_check_with, hemisphere_check, subspace_mass_check_with, DensitySpec,
    DiscreteMeasure, SubsetMode,
};
use crate::polytope::{HalfspaceSpec, Polytope};
use crate::solver::{solve, SolverConfig};
use crate::verify::{run_battery, Battery};

#[derive(Debug, Parser)]
#[command(name = "chordmink", version, about = "Discrete L_p chord Minkowski problem solver")]
struct Cli {
    /// RNG seed, or `random` for an entropy seed.
    #[arg(long, global = true, default_value = "20240601")]
    seed: String,
    /// Worker threads; 0 picks automatically. Overrides CHORDMINK_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write CSV plot data next to the output.
    #[arg(long, global = true)]
    emit_plot: bool,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve F_{p,q}(P, .) = mu for a discrete measure.
    Solve(SolveArgs),
    /// Chord integral and chord measures of a polytope.
    Chord(ChordArgs),
    /// Admissibility checks of a measure.
    MeasureCheck(MeasureCheckArgs),
    /// Discretize a density on the sphere.
    Discretize(DiscretizeArgs),
    /// Run the invariant battery.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    measure: PathBuf,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo samples per chord functional.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long, value_parser = parse_method)]
    method: Option<ChordMethod>,
}

#[derive(Debug, Args)]
struct ChordArgs {
    /// Polytope JSON with `normals` and `offsets`.
    #[arg(long)]
    polytope: PathBuf,
    #[arg(long)]
    q: f64,
    /// Also report the L_p chord measure for this p.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long, value_parser = parse_method, default_value = "auto")]
    method: ChordMethod,
}

#[derive(Debug, Args)]
struct MeasureCheckArgs {
    #[arg(long)]
    measure: PathBuf,
    /// Check the subspace mass inequality for this q (1 < q < n + 1).
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiscretizeArgs {
    /// Density JSON, e.g. {"family": "uniform", "dim": 2}.
    #[arg(long)]
    density: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// `default` or a battery JSON file.
    #[arg(long, default_value = "default")]
    battery: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the battery's Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
}

fn parse_method(s: &str) -> std::result::Result<ChordMethod, String> {
    match s {
        "auto" => Ok(ChordMethod::Auto),
        "exact" => Ok(ChordMethod::Exact),
        "quadrature" => Ok(ChordMethod::Quadrature),
        "monte-carlo" | "mc" => Ok(ChordMethod::MonteCarlo),
        _ => Err(format!("unknown method `{s}` (auto, exact, quadrature, monte-carlo)")),
    }
}

fn parse_seed(s: &str) -> Result<u64> {
    if s == "random" {
        return Ok(rand::random());
    }
    s.parse()
        .map_err(|_| Error::Parameter(format!("seed `{s}` is neither an integer nor `random`")))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
        }
    }
    Ok(())
}

/// `report.json` -> `report.plot.csv`; stdout output -> `chordmink.plot.csv`.
fn plot_path(out: Option<&Path>) -> PathBuf {
    match out {
        Some(p) => p.with_extension("plot.csv"),
        None => PathBuf::from("chordmink.plot.csv"),
    }
}

/// Vertices in boundary order for polygons, triangulated facets in space.
pub fn plot_csv(poly: &Polytope) -> Result<String> {
    let mut s = String::new();
    match poly.dim() {
        2 => {
            s.push_str("x,y\n");
            for v in poly.boundary_order_2d() {
                s.push_str(&format!("{},{}\n", v[0], v[1]));
            }
        }
        3 => {
            s.push_str("facet,x1,y1,z1,x2,y2,z2,x3,y3,z3\n");
            for f in poly.facets() {
                for tri in &f.simplices {
                    let coords: Vec<String> = tri.iter().flatten().map(|x| x.to_string()).collect();
                    s.push_str(&format!("{},{}\n", f.normal_index, coords.join(",")));
                }
            }
        }
        n => return Err(Error::Parameter(format!("plot data is available for n = 2 or 3, not {n}"))),
    }
    Ok(s)
}

fn write_plot(poly: &Polytope, out: Option<&Path>) -> Result<()> {
    let path = plot_path(out);
    fs::write(&path, plot_csv(poly)?)?;
    log::info!("plot data written to {}", path.display());
    Ok(())
}

fn cmd_solve(a: &SolveArgs, seed: u64, emit_plot: bool) -> Result<i32> {
    let mu: DiscreteMeasure = read_json(&a.measure)?;
    let mut config = SolverConfig {
        seed,
        ..SolverConfig::new(a.p, a.q)
    };
    if let Some(s) = a.samples {
        config.chord_samples = s;
        config.max_chord_samples = config.max_chord_samples.max(s);
    }
    if let Some(k) = a.max_iters {
        config.max_outer_iters = k;
    }
    if let Some(k) = a.starts {
        config.starts = k;
    }
    if let Some(m) = a.method {
        config.method = m;
    }
    log::info!("solve config: {}", serde_json::to_string(&config)?);
    let report = solve(&mu, &config)?;
    if !report.converged {
        log::warn!(
            "outer iteration stopped before the KKT tolerance (residual {:e})",
            report.diagnostics.kkt_residual
        );
    }
    emit(&report, a.out.as_deref())?;
    if emit_plot {
        write_plot(&report.polytope()?, a.out.as_deref())?;
    }
    Ok(0)
}

fn estimate_json(e: &crate::chord::ChordEstimate) -> Value {
    json!({ "value": e.value, "std_error": e.uncertainty() })
}

fn cmd_chord(a: &ChordArgs, seed: u64, emit_plot: bool) -> Result<i32> {
    let spec: HalfspaceSpec = read_json(&a.polytope)?;
    let poly = Polytope::new(spec)?;
    let opts = EstimatorOptions::new(a.samples, seed);
    let method = crate::chord::resolve_method(&poly, a.q, a.method);
    let fun = chord_functionals(&poly, a.q, method, &opts)?;
    let n = poly.dim() as f64;
    let mut out = json!({
        "q": a.q,
        "I_q": estimate_json(&fun.i_q),
        "F_q": fun.f_q.iter().map(estimate_json).collect::<Vec<_>>(),
        "config": { "q": a.q, "p": a.p, "samples": a.samples, "seed": seed, "method": method },
    });
    // G_q and F_{p,q} need the origin inside P
    match lp_weights(&poly, 0.0) {
        Ok(h) => {
            let g: Vec<Value> = fun
                .f_q
                .iter()
                .zip(&h)
                .map(|(f, h)| estimate_json(&f.scaled(h / (n + a.q - 1.0))))
                .collect();
            out["G_q"] = Value::from(g);
            if let Some(p) = a.p {
                let w = lp_weights(&poly, p)?;
                let f: Vec<Value> = fun.f_q.iter().zip(&w).map(|(f, w)| estimate_json(&f.scaled(*w))).collect();
                out["F_pq"] = Value::from(f);
            }
        }
        Err(e @ Error::OriginOutside { .. }) => {
            log::warn!("{e}; G_q omitted");
            out["G_q"] = Value::Null;
        }
        Err(e) => return Err(e),
    }
    emit(&out, a.out.as_deref())?;
    if emit_plot {
        write_plot(&poly, a.out.as_deref())?;
    }
    Ok(0)
}

fn cmd_measure_check(a: &MeasureCheckArgs, seed: u64) -> Result<i32> {
    let mu: DiscreteMeasure = read_json(&a.measure)?;
    let hemisphere = hemisphere_check(&mu);
    let mode = SubsetMode::spot_check(seed);
    let general_position = general_position_check_with(&mu.directions(), mu.dim(), mode)?;
    let subspace = match a.q {
        Some(q) => Some(subspace_mass_check_with(&mu, q, mode)?),
        None => None,
    };
    let out = json!({
        "dim": mu.dim(),
        "atoms": mu.len(),
        "total_mass": mu.total_mass(),
        "hemisphere": hemisphere,
        "general_position": general_position,
        "subspace_mass": subspace,
        "config": { "q": a.q, "seed": seed },
    });
    emit(&out, a.out.as_deref())?;
    if !hemisphere {
        eprintln!("error: {}", Error::Hemisphere);
        return Ok(1);
    }
    Ok(0)
}

fn cmd_discretize(a: &DiscretizeArgs, seed: u64) -> Result<i32> {
    let spec: DensitySpec = read_json(&a.density)?;
    let density = spec.build()?;
    let disc = discretize(&density, a.m, seed)?;
    let out = json!({
        "discretization": disc,
        "config": { "density": spec, "m": a.m, "seed": seed },
    });
    emit(&out, a.out.as_deref())?;
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs, seed: u64) -> Result<i32> {
    let mut battery = match a.battery.as_str() {
        "default" => Battery::default_battery(seed),
        path => read_json(Path::new(path))?,
    };
    if let Some(s) = a.samples {
        battery.samples = s;
    }
    let report = run_battery(&battery, seed, Default::default());
    for row in report.rows.iter().filter(|r| !r.pass) {
        eprintln!(
            "FAIL {} {} q={:?} p={:?}: gap {:.3} > {}",
            row.check, row.shape, row.q, row.p, row.gap, row.threshold
        );
    }
    eprintln!("{} rows passed, {} failed", report.passed, report.failed);
    let out = json!({ "report": report, "config": { "battery": battery, "seed": seed } });
    emit(&out, a.out.as_deref())?;
    Ok(if report.all_pass() { 0 } else { 1 })
}

fn configure_threads(flag: Option<usize>) {
    let threads = flag.or_else(|| {
        std::env::var("CHORDMINK_THREADS")
            .ok()
            .and_then(|v| v.trim().parse().ok())
    });
    if let Some(n) = threads.filter(|&n| n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::debug!("thread pool already configured: {e}");
        }
    }
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 for domain errors and failed checks, 2 for usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("CHORDMINK_LOG")
        .try_init();
    configure_threads(cli.threads);
    let seed = match parse_seed(&cli.seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    log::info!("seed {seed}");
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, seed, cli.emit_plot),
        Command::Chord(a) => cmd_chord(a, seed, cli.emit_plot),
        Command::MeasureCheck(a) => cmd_measure_check(a, seed),
        Command::Discretize(a) => cmd_discretize(a, seed),
        Command::Verify(a) => cmd_verify(a, seed),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
