//! Command-line scenario runner.
//!
//! Exit codes: 0 all checks pass, 1 any check fails, 2 load or
//! validation error.

use clap::{Args, Parser, ValueEnum};
use piola_core::runner::{self, builtin_names, Overrides, Scenario, CHECK_CATALOG};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "piola",
    about = "Numerical verification of Piola-type divergence identities on Riemannian charts"
)]
enum Cli {
    /// Run verification scenarios and report per-check residuals.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Scenario JSON files.
    scenarios: Vec<PathBuf>,

    /// Built-in scenario names (may repeat); "all" runs every built-in.
    #[arg(long)]
    builtin: Vec<String>,

    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Sampling seed; the PIOLA_SEED environment variable takes priority.
    #[arg(long)]
    seed: Option<u64>,

    /// Number of sample points per pointwise check.
    #[arg(long)]
    points: Option<usize>,

    /// Gauss-Legendre order per axis for integral checks.
    #[arg(long = "quad-order")]
    quad_order: Option<usize>,

    /// Override the pointwise tolerance.
    #[arg(long)]
    tolerance: Option<f64>,

    /// List known checks and built-in scenarios, then exit.
    #[arg(long)]
    list_checks: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn main() -> ExitCode {
    let Cli::Verify(args) = Cli::parse();

    if args.list_checks {
        println!("checks:");
        for (_, name, doc) in CHECK_CATALOG {
            println!("  {name:<22} {doc}");
        }
        println!("built-in scenarios:");
        for name in builtin_names() {
            println!("  {name}");
        }
        return ExitCode::SUCCESS;
    }

    let seed = match std::env::var("PIOLA_SEED") {
        Ok(text) => match text.parse::<u64>() {
            Ok(v) => Some(v),
            Err(_) => {
                eprintln!("error: PIOLA_SEED must be an unsigned integer, got {text:?}");
                return ExitCode::from(2);
            }
        },
        Err(_) => args.seed,
    };
    let overrides = Overrides {
        seed,
        points: args.points,
        quad_order: args.quad_order,
        tolerance: args.tolerance,
    };

    let mut scenarios = Vec::new();
    for name in &args.builtin {
        if name == "all" {
            for n in builtin_names() {
                scenarios.push(Scenario::builtin(n).expect("built-ins load"));
            }
            continue;
        }
        match Scenario::builtin(name) {
            Ok(s) => scenarios.push(s),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    for path in &args.scenarios {
        match Scenario::from_path(path) {
            Ok(s) => scenarios.push(s),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    if scenarios.is_empty() {
        eprintln!("error: no scenarios given; pass files, --builtin <name>, or --builtin all");
        return ExitCode::from(2);
    }

    let mut all_pass = true;
    for scenario in &scenarios {
        let report = runner::run(scenario, &overrides);
        all_pass &= report.passed();
        match args.format {
            Format::Text => print!("{}", report.render_text()),
            Format::Json => println!("{}", report.render_json()),
        }
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
