//! Scenario runner: executes the verification pipelines described by a TOML
//! scenario (bundled or on disk), writes deterministic JSON/CSV reports, and
//! exits 0 only when every enabled check passes.

use clap::{Args, Parser, Subcommand};
use lightcone::report::ReportBundle;
use lightcone::scenario::{Checks, Scenario};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lightcone", version, about = "Lightcone holography verification runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario: a TOML file path or a bundled name
    /// (`minkowski-moretti`, `overcoupled-gauge`).
    #[arg(long)]
    scenario: String,
    /// Directory for report.json and CSV tables (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Cone-geometry checks only.
    Geometry(RunArgs),
    /// State-family checks only.
    State(RunArgs),
    /// Every pipeline the scenario enables.
    Verify(RunArgs),
    /// Characteristic (trace-operator) checks only.
    Goursat(RunArgs),
    /// Grid-refinement convergence sweep.
    Sweep {
        #[command(flatten)]
        args: RunArgs,
        /// Number of refinement levels (≥ 3).
        #[arg(long, default_value_t = 3)]
        level: usize,
    },
    /// Summarize an existing report.json.
    Report {
        /// Directory holding report.json.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(args: &RunArgs) -> anyhow::Result<Scenario> {
    let path = Path::new(&args.scenario);
    let mut scenario = if path.exists() {
        Scenario::load(path)?
    } else {
        Scenario::builtin(&args.scenario)?
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn finish(bundle: &ReportBundle) -> ExitCode {
    print!("{}", bundle.summary());
    if bundle.all_pass() {
        println!("PASS {}", bundle.scenario);
        ExitCode::SUCCESS
    } else {
        println!("FAIL {}", bundle.scenario);
        ExitCode::FAILURE
    }
}

fn run_with(args: &RunArgs, restrict: Option<Checks>) -> anyhow::Result<ExitCode> {
    let mut scenario = load(args)?;
    if let Some(checks) = restrict {
        scenario.checks = checks;
    }
    let bundle = scenario.run(args.out.as_deref())?;
    Ok(finish(&bundle))
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    let only = |geometry, state, goursat| Checks {
        geometry,
        state,
        bulk: false,
        goursat,
    };
    match cli.cmd {
        Cmd::Geometry(args) => run_with(&args, Some(only(true, false, false))),
        Cmd::State(args) => run_with(&args, Some(only(false, true, false))),
        Cmd::Goursat(args) => run_with(&args, Some(only(false, false, true))),
        Cmd::Verify(args) => run_with(&args, None),
        Cmd::Sweep { args, level } => {
            let scenario = load(&args)?;
            let bundle = scenario.convergence_sweep(level, args.out.as_deref())?;
            Ok(finish(&bundle))
        }
        Cmd::Report { out } => {
            let text = std::fs::read_to_string(out.join("report.json"))?;
            let bundle = ReportBundle::from_json(&text)?;
            Ok(finish(&bundle))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
