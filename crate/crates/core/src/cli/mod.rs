//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration, usage or numerical error,
//! 2 infeasible constraints (a budget outside its valid range or a program
//! with no feasible point).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod config;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, Format, Mode, RunConfig};
pub use output::{Report, Table, Value};
pub use run::{execute, failed_checks};

#[derive(Debug, Parser)]
#[command(name = "relayguard", version, about = "Power, rate and hop-count planning for relay links under UAV surveillance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one secrecy or covert problem (mode = secrecy | covert).
    Solve(RunArgs),
    /// Run a parameter sweep (mode = sweep).
    Sweep(RunArgs),
    /// Check the closed forms against Monte Carlo and quadrature oracles (mode = validate).
    Validate(RunArgs),
    /// Print the annotated configuration schema.
    Schema,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML run configuration
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; overrides `output.path`
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; overrides `output.format`
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Monte Carlo seed; overrides `mc.seed`
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("`{command}` cannot run a config with mode = {mode:?}; expected {expected}")]
    ModeMismatch {
        command: &'static str,
        mode: &'static str,
        expected: &'static str,
    },
    #[error("cannot build a pool of {threads} threads: {message}")]
    Threads { threads: usize, message: String },
    #[error(transparent)]
    Solver(#[from] crate::Error),
    #[error(transparent)]
    Render(#[from] output::RenderError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(crate::Error::Infeasible(_) | crate::Error::InvalidConstraint(_)) => 2,
            _ => 1,
        }
    }
}

/// Loads the config named in `args`, applies flag overrides and checks that
/// it matches the subcommand.
pub fn resolve(command: &'static str, args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = load_config(&args.config)?;
    let expected = match command {
        "solve" => "secrecy or covert",
        "sweep" => "sweep",
        _ => "validate",
    };
    let ok = match command {
        "solve" => matches!(cfg.mode, Mode::Secrecy | Mode::Covert),
        "sweep" => cfg.mode == Mode::Sweep,
        _ => cfg.mode == Mode::Validate,
    };
    if !ok {
        return Err(CliError::ModeMismatch {
            command,
            mode: cfg.mode.as_str(),
            expected,
        });
    }
    if let Some(seed) = args.seed {
        cfg.mc.seed = seed;
    }
    if let Some(f) = args.format {
        cfg.output.format = f;
    }
    if let Some(p) = &args.out {
        cfg.output.path = Some(p.clone());
    }
    Ok(cfg)
}

/// Executes `cfg` on a pool of `threads` workers (all cores if `None`).
pub fn execute_with_threads(cfg: &RunConfig, threads: Option<usize>) -> Result<Report, CliError> {
    match threads {
        None => Ok(execute(cfg)?),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Threads {
                    threads: n,
                    message: e.to_string(),
                })?;
            Ok(pool.install(|| execute(cfg))?)
        }
    }
}

fn run_command(command: &'static str, args: &RunArgs) -> Result<(), CliError> {
    if args.threads == Some(0) {
        return Err(CliError::Threads {
            threads: 0,
            message: "need at least one".into(),
        });
    }
    let cfg = resolve(command, args)?;
    let report = execute_with_threads(&cfg, args.threads)?;
    match &cfg.output.path {
        Some(path) => {
            for f in report.write_files(path, cfg.output.format)? {
                eprintln!("wrote {}", f.display());
            }
        }
        None => {
            let bytes = report.render(cfg.output.format)?;
            let mut out = std::io::stdout().lock();
            // a closed pipe is not worth an error message
            let _ = out.write_all(&bytes).and_then(|_| out.flush());
        }
    }
    if cfg.mode == Mode::Validate {
        let total = report.tables[0].rows.len();
        let failed = failed_checks(&report);
        eprintln!("{} of {total} checks passed", total - failed);
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Schema => {
            print!("{}", config::SCHEMA);
            Ok(())
        }
        Command::Solve(a) => run_command("solve", a),
        Command::Sweep(a) => run_command("sweep", a),
        Command::Validate(a) => run_command("validate", a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
