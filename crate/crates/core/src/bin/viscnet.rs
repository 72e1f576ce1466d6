use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use viscnet::cli::{error_line, run, Command, RunConfig, Verbosity};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Gen,
    Train,
    Eval,
    Calibrate,
    Report,
    Sweep,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Gen => Command::Gen,
            Cmd::Train => Command::Train,
            Cmd::Eval => Command::Eval,
            Cmd::Calibrate => Command::Calibrate,
            Cmd::Report => Command::Report,
            Cmd::Sweep => Command::Sweep,
        }
    }
}

/// Viscosity estimation from refracted-pattern videos.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    command: Cmd,
    /// JSON config for the command.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for generation.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// More log output; repeat for debug.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
    #[arg(short, long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let rc = RunConfig {
        command: args.command.into(),
        config_path: args.config,
        output_dir: args.output,
        seed: args.seed,
        workers: args.workers,
        verbosity: Verbosity::from_flags(args.verbose, args.quiet),
    };
    env_logger::Builder::new()
        .filter_level(rc.verbosity.log_filter())
        .init();
    match run(&rc) {
        Ok(out) => {
            for line in out.lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::FAILURE
        }
    }
}
