//! Scenario-driven command-line front end for the verification engine.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use einwarp::curvature::DerivativeMode;
use einwarp::runner::{run_scenario, Overrides, RunOutput, EXIT_ERROR};
use einwarp::scenario::{parse_scenario, CatalogScenario, IntegrateScenario, Scenario, Tolerances};

#[derive(Parser)]
#[command(
    name = "einwarp",
    version,
    about = "Verify Einstein conditions on warped-product and conformally flat metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args, Clone)]
struct GlobalArgs {
    /// Residual tolerance override.
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Derivative path: analytic oracles or finite differences.
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<DerivativeMode>,

    /// Output path for the report (JSON) or trajectory/scan table (CSV).
    #[arg(long, global = true)]
    out: Option<String>,

    /// Seed for quasi-random grids.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

fn parse_mode(s: &str) -> Result<DerivativeMode, String> {
    match s {
        "analytic" => Ok(DerivativeMode::Analytic),
        "fd" => Ok(DerivativeMode::FiniteDifference),
        other => Err(format!("unknown mode `{other}` (expected analytic|fd)")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (any kind).
    Verify { file: String },

    /// Instantiate and verify a catalog family.
    #[command(allow_negative_numbers = true)]
    Catalog {
        /// Family name; use --list to see them.
        #[arg(long)]
        name: Option<String>,

        /// List the known families and exit.
        #[arg(long)]
        list: bool,

        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long = "G", default_value_t = 1.0)]
        g: f64,
        #[arg(long = "C", default_value_t = 5.0)]
        c: f64,
        #[arg(long = "Theta", default_value_t = 1.0)]
        theta: f64,
        #[arg(long = "A", default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },

    /// Integrate the reduced system and export the trajectory as CSV.
    #[command(allow_negative_numbers = true)]
    Integrate {
        #[arg(long)]
        phi0: f64,
        #[arg(long)]
        dphi0: f64,
        #[arg(long = "G0")]
        rate0: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long)]
        step: f64,
        /// Integration window as `lo,hi`.
        #[arg(long, value_parser = parse_span)]
        span: (f64, f64),
        #[arg(long = "Theta", default_value_t = 1.0)]
        theta: f64,
    },

    /// Run a scan scenario file and write the CSV table.
    Scan { file: String },
}

fn parse_span(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("span must be `lo,hi`".into());
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("span lo: {e}"))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| format!("span hi: {e}"))?;
    Ok((lo, hi))
}

fn load_scenario(path: &str) -> Result<Scenario, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    parse_scenario(&text).map_err(|e| e.to_string())
}

fn finish(run: RunOutput) -> ExitCode {
    println!("{}", run.report.to_json_pretty());
    for f in &run.files_written {
        eprintln!("wrote {f}");
    }
    ExitCode::from(run.exit_code as u8)
}

fn fail(message: String) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_ERROR as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        tolerance: cli.global.tolerance,
        mode: cli.global.mode,
        out: cli.global.out.clone(),
        seed: cli.global.seed,
    };

    let scenario = match cli.command {
        Command::Verify { file } | Command::Scan { file } => match load_scenario(&file) {
            Ok(s) => s,
            Err(e) => return fail(e),
        },
        Command::Catalog {
            name,
            list,
            n,
            m,
            g,
            c,
            theta,
            a,
            kappa,
        } => {
            if list {
                for f in einwarp::catalog::family_names() {
                    println!("{f}");
                }
                return ExitCode::SUCCESS;
            }
            let Some(name) = name else {
                return fail("catalog requires --name or --list".into());
            };
            let scenario = Scenario::Catalog(CatalogScenario {
                name,
                n,
                m,
                g,
                c,
                theta,
                a,
                kappa,
                grid: None,
                mode: None,
                tolerances: Tolerances::default(),
                out: None,
            });
            if let Err(e) = scenario.validate() {
                return fail(e.to_string());
            }
            scenario
        }
        Command::Integrate {
            phi0,
            dphi0,
            rate0,
            lambda,
            kappa,
            n,
            m,
            step,
            span,
            theta,
        } => {
            let scenario = Scenario::Integrate(IntegrateScenario {
                n,
                m,
                kappa,
                lambda,
                phi0,
                dphi0,
                rate0,
                step,
                span: [span.0, span.1],
                theta,
                monitor_bound: None,
                lift: None,
                out: None,
            });
            if let Err(e) = scenario.validate() {
                return fail(e.to_string());
            }
            scenario
        }
    };

    match run_scenario(&scenario, &overrides) {
        Ok(run) => finish(run),
        Err(e) => fail(e.to_string()),
    }
}
