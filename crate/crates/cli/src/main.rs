mod commands;
mod schema;
mod selftest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use commands::{RunConfig, Shape};
use schema::{CliError, SymbolFile};

/// Partial indices of piecewise constant matrix symbols via Fuchsian systems.
#[derive(Parser)]
#[command(name = "pi-engine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Lebesgue exponent; overrides any `p` in the input file (default 2).
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative tolerance of the ODE integrator.
    #[arg(long, global = true, default_value_t = 1e-10)]
    rel_tol: f64,
    /// Radius of the accessory-parameter scan disk.
    #[arg(long, global = true)]
    scan_radius: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Φ-criterion, data pair, reducibility type and partial indices of a symbol.
    Analyze {
        symbol: PathBuf,
        /// Run the accessory-parameter scan on dichotomy cases.
        #[arg(long)]
        resolve: bool,
    },
    /// A standard-form system of the requested shape and indices.
    Generate {
        #[arg(long, value_enum)]
        shape: Shape,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        indices: Vec<i64>,
        /// Number of singularities (default depends on the shape).
        #[arg(long)]
        points: Option<usize>,
    },
    /// Monodromy tuple of a standard-form system.
    Monodromy { system: PathBuf },
    /// Factorization of a scalar or two-jump symbol, or of a system's reconstructed symbol.
    Factor { input: PathBuf },
    /// Scan the accessory family of a dichotomy for the extremal monodromy.
    Resolve { input: PathBuf },
    /// Sign convention and a fast subset of the acceptance checks.
    Selftest,
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn emit<T: Serialize>(value: &T, json_out: Option<&Path>, summary: &str) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    match json_out {
        Some(path) => {
            std::fs::write(path, text + "\n")?;
            println!("{summary}");
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let default_radius = pi_core::index::DEFAULT_SCAN_RADIUS;
    let cfg = RunConfig::new(cli.rel_tol, cli.scan_radius.unwrap_or(default_radius), None)?;
    let out = cli.json_out.as_deref();
    match &cli.command {
        Command::Analyze { symbol, resolve } => {
            let file: SymbolFile = serde_json::from_value(read_json(symbol)?)?;
            let report = commands::analyze(&file, cli.p, *resolve, &cfg)?;
            emit(&report, out, &report.summary())
        }
        Command::Generate { shape, indices, points } => {
            let generated = commands::generate(*shape, indices, *points, cli.seed)?;
            let summary = format!("{} system with indices {:?}, p = {}", generated.shape, generated.system.indices, generated.p);
            emit(&generated, out, &summary)
        }
        Command::Monodromy { system } => {
            let sys = serde_json::from_value(read_json(system)?)?;
            let report = commands::monodromy_report(&sys, &cfg)?;
            emit(&report, out, &format!("product defect {:.1e}", report.tuple.product_defect))
        }
        Command::Factor { input } => {
            let report = commands::factor(&read_json(input)?, cli.p, &cfg)?;
            emit(&report, out, "factorization written")
        }
        Command::Resolve { input } => {
            let verdict = commands::resolve_input(&read_json(input)?, cli.scan_radius, &cfg)?;
            if !verdict.is_confirmed() {
                eprintln!("no extremal match in the scanned disk; this does not prove the balanced indices");
            }
            emit(&verdict, out, &format!("{verdict:?}"))
        }
        Command::Selftest => {
            let report = selftest::run(&cfg);
            for c in &report.checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                eprintln!("{mark}  {}: {}", c.name, c.detail);
            }
            let verdict = if report.passed { "self-test passed" } else { "self-test failed" };
            emit(&report, out, verdict)?;
            if report.passed {
                Ok(())
            } else {
                Err(CliError::numeric(verdict))
            }
        }
    }
}

fn cap_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("PI_ENGINE_THREADS") else { return Ok(()) };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::input(format!("PI_ENGINE_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::input(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cap_threads().and_then(|_| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": e });
            eprintln!("{}", serde_json::to_string_pretty(&body).unwrap_or_else(|_| e.message.clone()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
