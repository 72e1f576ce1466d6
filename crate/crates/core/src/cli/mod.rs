//! Command implementations behind the `viscnet` binary.
//!
//! Every command reads one JSON config, writes its artifacts under the
//! output directory and returns the lines to print. Relative paths inside a
//! config resolve against the config file's directory.

mod eval;
mod gen;
mod plot;
mod report;
mod sweep;
mod train;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use eval::{
    calibration_path, cmd_calibrate, cmd_eval, CalibrateConfig, CalibrationReport, EvalConfig, EvalMetrics,
};
pub use gen::cmd_gen;
pub use report::{cmd_report, ReportConfig, FIGURES};
pub use sweep::{cmd_sweep, SweepCommand};
pub use train::{cmd_train, TrainRunConfig};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Gen,
    Train,
    Eval,
    Calibrate,
    Report,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Gen,
        Command::Train,
        Command::Eval,
        Command::Calibrate,
        Command::Report,
        Command::Sweep,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Calibrate => "calibrate",
            Command::Report => "report",
            Command::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub enum Verbosity {
    Quiet,
    #[default]
    Normal,
    Verbose,
    Debug,
}

impl Verbosity {
    pub fn from_flags(verbose: u8, quiet: bool) -> Self {
        match (quiet, verbose) {
            (true, _) => Verbosity::Quiet,
            (false, 0) => Verbosity::Normal,
            (false, 1) => Verbosity::Verbose,
            _ => Verbosity::Debug,
        }
    }

    pub fn log_filter(&self) -> log::LevelFilter {
        match self {
            Verbosity::Quiet => log::LevelFilter::Error,
            Verbosity::Normal => log::LevelFilter::Warn,
            Verbosity::Verbose => log::LevelFilter::Info,
            Verbosity::Debug => log::LevelFilter::Debug,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub config_path: PathBuf,
    /// Created if absent.
    pub output_dir: PathBuf,
    /// Replaces the config's seed when given.
    pub seed: Option<u64>,
    pub workers: usize,
    pub verbosity: Verbosity,
}

/// What a command wrote.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    /// Human-readable summary lines.
    pub lines: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

pub fn run(run: &RunConfig) -> Result<CommandOutput> {
    std::fs::create_dir_all(&run.output_dir).map_err(|e| Error::io(&run.output_dir, e))?;
    match run.command {
        Command::Gen => cmd_gen(run),
        Command::Train => cmd_train(run),
        Command::Eval => cmd_eval(run),
        Command::Calibrate => cmd_calibrate(run),
        Command::Report => cmd_report(run),
        Command::Sweep => cmd_sweep(run),
    }
}

/// One-line JSON error record: `{"error":"<kind>","message":"..."}`.
pub fn error_line(err: &Error) -> String {
    serde_json::json!({ "error": err.kind(), "message": err.to_string() }).to_string()
}

pub(crate) fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

/// `p` relative to the directory holding the config file.
pub(crate) fn resolve(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        return p.to_path_buf();
    }
    config_path.parent().map_or_else(|| p.to_path_buf(), |d| d.join(p))
}

pub(crate) fn require_file(p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Error::MissingArtifacts(vec![p.display().to_string()]))
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.as_str().parse::<Command>().unwrap(), c);
        }
        assert!("fit".parse::<Command>().is_err());
    }

    #[test]
    fn error_line_is_single_line_json() {
        let e = Error::Curriculum("regress needs\na classify checkpoint".into());
        let line = error_line(&e);
        assert!(!line.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["error"], "curriculum");
        assert!(v["message"].as_str().unwrap().contains("classify"));
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let cfg = Path::new("/runs/a/train.json");
        assert_eq!(
            resolve(cfg, Path::new("data/m.jsonl")),
            Path::new("/runs/a/data/m.jsonl")
        );
        assert_eq!(resolve(cfg, Path::new("/abs/m.jsonl")), Path::new("/abs/m.jsonl"));
        assert_eq!(resolve(Path::new("t.json"), Path::new("m.jsonl")), Path::new("m.jsonl"));
    }

    #[test]
    fn verbosity_flags() {
        assert_eq!(Verbosity::from_flags(3, true), Verbosity::Quiet);
        assert_eq!(Verbosity::from_flags(0, false).log_filter(), log::LevelFilter::Warn);
        assert_eq!(Verbosity::from_flags(2, false), Verbosity::Debug);
    }
}
