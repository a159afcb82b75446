use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use qgv_cli::config::Format;
use qgv_cli::{execute, list_checks, CliError, Overrides, RunConfig, EXIT_FAIL};

#[derive(Parser)]
#[command(
    name = "qgv",
    version,
    about = "Verify Gauss maps of spacelike hypersurfaces of anti-de Sitter space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run verification suites and emit a report.
    Verify(VerifyArgs),
    /// Print every check id with the identity it tests.
    ListChecks {
        #[arg(long)]
        suite: Option<String>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog example: umbilic, product, rotation_sig_plus_minus, rotation_sig_minus_minus, rotation_sig_minus_null.
    #[arg(long)]
    example: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Sampling interval `a,b`, once per axis.
    #[arg(long = "box", value_name = "A,B", allow_hyphen_values = true)]
    bounds: Vec<String>,
    /// Comma-separated suite names.
    #[arg(long)]
    suites: Option<String>,
    /// Tolerance override `<suite or check>=<value>`, repeatable.
    #[arg(long = "tol", value_name = "KEY=VALUE")]
    tolerances: Vec<String>,
    /// Adds seeded random points to the grid.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Report path; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// CSV of per-point fields for plotting.
    #[arg(long)]
    dump_fields: Option<PathBuf>,
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("QGV_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

fn verify(a: VerifyArgs) -> Result<bool, CliError> {
    let base = a.config.as_deref().map(RunConfig::load).transpose()?;
    let o = Overrides {
        example: a.example,
        alpha: a.alpha,
        k: a.k,
        n: a.n,
        grid: a.grid,
        bounds: a.bounds,
        suites: a.suites,
        tolerances: a.tolerances,
        seed: a.seed,
        jobs: a.jobs,
        report: a.report,
        format: a.format,
        dump_fields: a.dump_fields,
    };
    let cfg = RunConfig::resolve(base, o)?;
    let report = execute(&cfg)?;
    if cfg.output.report.is_none() {
        println!("{}", report.render(cfg.output.format)?);
    }
    let s = &report.summary;
    eprintln!(
        "{} of {} checks passed, max residual {:.3e}, {:.2} s",
        s.passed,
        s.total,
        report.max_residual(),
        s.wall_time_s
    );
    for (name, suite) in &s.suites {
        eprintln!(
            "  {name:<14} {:>5}/{:<5} max residual {}",
            suite.passed,
            suite.total,
            suite
                .max_residual
                .map_or("-".to_string(), |x| format!("{x:.3e}"))
        );
    }
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify(a) => verify(a),
        Command::ListChecks { suite } => list_checks(suite.as_deref()).map(|lines| {
            for l in lines {
                println!("{l}");
            }
            true
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL as u8),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
