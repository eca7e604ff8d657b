use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ris_isac::channels::{generate, load_channels, save_channels};
use ris_isac::driver::{solve, solve_baseline, Method};
use ris_isac::scenario::{load_config, validate, ScenarioGeometry, SystemConfig};
use ris_isac::sweep::{emit_csv, load_sweep_spec, phase_rng, run_sweep, write_csv};
use ris_isac::Error;

/// Joint beamforming and RIS reflection design for integrated sensing and
/// communication.
#[derive(Parser)]
#[command(name = "ris-isac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file (desk-scale defaults when absent).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of proposed, random-ris, no-ris.
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel realization and print the report as JSON.
    Run {
        #[command(flatten)]
        common: Common,
        /// Replay channels from a JSON dump instead of drawing them.
        #[arg(long)]
        channels: Option<PathBuf>,
        /// Write the drawn channels to a JSON dump.
        #[arg(long)]
        dump_channels: Option<PathBuf>,
    },
    /// Run a Monte-Carlo sweep described by a TOML file and write CSV.
    Sweep {
        /// Sweep specification.
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Overrides the trial count of the spec.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run the built-in oracle and invariant checks on small instances.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

enum Failure {
    Validation(Error),
    AllFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Validation(e)
    }
}

fn load_base(common: &Common) -> Result<(SystemConfig, ScenarioGeometry), Error> {
    let (mut cfg, geometry) = match &common.config {
        Some(p) => load_config(p)?,
        None => (SystemConfig::desk_default(), ScenarioGeometry::default()),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    validate(&cfg, &geometry)?;
    Ok((cfg, geometry))
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        }),
        None => {
            // a closed pipe (e.g. `| head`) is not an error
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
    }
}

fn cmd_run(
    common: Common,
    channels: Option<PathBuf>,
    dump: Option<PathBuf>,
) -> Result<(), Failure> {
    let (cfg, geometry) = load_base(&common)?;
    let cs = match &channels {
        Some(p) => load_channels(p)?,
        None => generate(&cfg, &geometry, &mut ChaCha8Rng::seed_from_u64(cfg.seed)),
    };
    cs.check_dims(&cfg)?;
    if let Some(p) = &dump {
        save_channels(&cs, p)?;
    }
    let methods = if common.method.is_empty() {
        vec![Method::Proposed]
    } else {
        common.method.clone()
    };
    let mut reports = Vec::new();
    for m in methods {
        let result = match m {
            Method::Proposed => solve(&cs, &cfg)?,
            _ => solve_baseline(&cs, &cfg, m, &mut phase_rng(cfg.seed, 0))?,
        };
        reports.push(result.report(&cs, &cfg));
    }
    let text = if reports.len() == 1 {
        reports[0].to_json()
    } else {
        serde_json::to_string_pretty(&reports).expect("reports serialize")
    };
    write_output(&common.out, &text)?;
    if reports.iter().all(|r| r.sum_rate.is_none()) {
        return Err(Failure::AllFailed);
    }
    Ok(())
}

fn cmd_sweep(spec_path: PathBuf, common: Common, trials: Option<usize>) -> Result<(), Failure> {
    let mut spec = load_sweep_spec(&spec_path)?;
    if common.config.is_some() {
        let (cfg, geometry) = load_base(&common)?;
        spec.base = cfg;
        spec.geometry = geometry;
    } else if let Some(seed) = common.seed {
        spec.base.seed = seed;
    }
    if let Some(t) = trials {
        spec.trials = t;
    }
    if !common.method.is_empty() {
        spec.methods = common.method.clone();
    }
    spec.validate()?;
    let result = run_sweep(&spec)?;
    match &common.out {
        Some(p) => emit_csv(&result, p)?,
        None => write_csv(&result, std::io::stdout().lock())?,
    }
    for row in result.rows.iter().filter(|r| r.all_failed()) {
        log::error!("{} at {} = {}: every trial failed", row.method, row.param.label(), row.value);
    }
    if result.any_cell_failed() {
        return Err(Failure::AllFailed);
    }
    Ok(())
}

fn cmd_check(seed: u64) -> Result<(), Failure> {
    let outcomes = ris_isac::check::run_checks(seed);
    for c in &outcomes {
        let _ = writeln!(
            std::io::stdout().lock(),
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if outcomes.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::AllFailed)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            common,
            channels,
            dump_channels,
        } => cmd_run(common, channels, dump_channels),
        Command::Sweep {
            spec,
            common,
            trials,
        } => cmd_sweep(spec, common, trials),
        Command::Check { seed } => cmd_check(seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::AllFailed) => ExitCode::from(2),
    }
}
