//! Library side of the `scion` binary: config resolution, command bodies
//! and the clap definition, exposed so tests can drive them directly.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;
use std::time::Instant;

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

pub use commands::{run, Outcome};
pub use config::{resolve, Command};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "scion",
    version,
    about = "Norm-constrained conditional-gradient optimizers and their diagnostics"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON file merged over the command defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Overrides the top-level `seed` key.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving the output files.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    pub out: PathBuf,
    /// Dotted-path override, applied after the file; repeatable.
    #[arg(long = "set", global = true, value_name = "PATH=VALUE")]
    pub set: Vec<String>,
    /// Print the resolved config and exit without running.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug, Subcommand, Clone, Copy)]
pub enum Sub {
    /// Randomized oracle contract check over every norm kind.
    LmoCheck,
    /// Train an MLP classifier and log per-step diagnostics.
    Train,
    /// Width sweep of per-layer output change after one step.
    CoordCheck,
    /// Learning-rate sweep across widths.
    Sweep,
    /// Convergence-rate harness on a stochastic quadratic.
    Rate,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::LmoCheck => Command::LmoCheck,
            Sub::Train => Command::Train,
            Sub::CoordCheck => Command::CoordCheck,
            Sub::Sweep => Command::Sweep,
            Sub::Rate => Command::Rate,
        }
    }
}

/// The clap command with each subcommand's key table appended to its help.
pub fn cli_command() -> clap::Command {
    let mut c = Cli::command();
    for cmd in Command::ALL {
        let text = cmd.help_text();
        c = c.mut_subcommand(cmd.name(), |s| s.after_help(text));
    }
    c
}

fn parse(args: &[String]) -> Result<Cli, clap::Error> {
    let matches: ArgMatches = cli_command().try_get_matches_from(args)?;
    Cli::from_arg_matches(&matches)
}

/// Runs the binary with the given argv and returns the process exit code.
pub fn main_with(args: &[String]) -> i32 {
    let cli = match parse(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let cmd = Command::from(cli.command);
    let g = &cli.global;
    let tree = resolve(cmd, g.config.as_deref(), g.seed, &g.set)?;
    if g.dry_run {
        println!("{}", serde_json::to_string_pretty(&tree).expect("json value"));
        return Ok(());
    }
    let start = Instant::now();
    let outcome = run(cmd, &tree, &g.out)?;
    println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("json value"));
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    println!("elapsed {:.3}s", start.elapsed().as_secs_f64());
    match outcome.violation {
        Some(v) => Err(CliError::Violation(v)),
        None => Ok(()),
    }
}
