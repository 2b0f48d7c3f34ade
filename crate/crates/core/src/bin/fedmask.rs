//! Command-line front end: `run`, `sweep`, `attack`, `clt-check`, `replay`.
//!
//! Exit codes: 0 success, 2 config error, 3 a report check or replay failed,
//! 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedmask::harness::{run_scenario, ExperimentKind, ScenarioConfig};
use fedmask::secagg::{replay_aggregate, RoundTranscript};
use fedmask::Error;

/// Overrides the output directory, and nothing else.
const OUT_ENV: &str = "FEDMASK_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "fedmask",
    version,
    about = "Federated-learning security workbench"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the scenario described by a config file.
    Run(Common),
    /// Alpha sweep over client counts (masked local vs. global accuracy).
    Sweep(Common),
    /// Adversary strategies and the DLG follow-up.
    Attack(Common),
    /// Check that the mean of n masks has standard deviation alpha/sqrt(3n).
    CltCheck(Common),
    /// Recompute a secure-aggregation transcript's aggregate from its messages.
    Replay { transcript: PathBuf },
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML). Defaults apply when omitted.
    config: Option<PathBuf>,
    /// Replace the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; beats the config and the environment.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Check(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn load(c: &Common, kind: Option<ExperimentKind>) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match (&c.config, kind) {
        (Some(p), _) => ScenarioConfig::load(p)?,
        (None, Some(k)) => ScenarioConfig::preset(k),
        (None, None) => return Err(Failure::Config("`run` needs a config file".into())),
    };
    if let Some(k) = kind {
        cfg.kind = k;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    } else if let Some(o) = std::env::var_os(OUT_ENV) {
        cfg.output_dir = PathBuf::from(o);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn scenario(c: &Common, kind: Option<ExperimentKind>) -> Result<(), Failure> {
    let cfg = load(c, kind)?;
    let report = run_scenario(&cfg)?;
    let files = report.write(&cfg.output_dir)?;
    for ch in &report.body.checks {
        println!(
            "[{}] {}: {}",
            if ch.passed { "pass" } else { "FAIL" },
            ch.name,
            ch.detail
        );
    }
    for (k, v) in &report.body.summary {
        println!("{k} = {v}");
    }
    println!(
        "wrote {} files to {}",
        files.len(),
        cfg.output_dir.display()
    );
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{} check(s) failed",
            report.body.checks.iter().filter(|c| !c.passed).count()
        )))
    }
}

fn replay(path: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    let t = RoundTranscript::from_jsonl(&text)?;
    let again = replay_aggregate(&t)?;
    if again == t.aggregate {
        println!(
            "replay matches: {} messages, aggregate {}",
            t.messages.len(),
            if again.is_some() {
                "recomputed"
            } else {
                "absent (aborted round)"
            }
        );
        Ok(())
    } else {
        Err(Failure::Check(
            "replayed aggregate differs from the recorded one".into(),
        ))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Run(c) => scenario(c, None),
        Cmd::Sweep(c) => scenario(c, Some(ExperimentKind::AlphaSweep)),
        Cmd::Attack(c) => scenario(c, Some(ExperimentKind::AttackDemo)),
        Cmd::CltCheck(c) => scenario(c, Some(ExperimentKind::CltCheck)),
        Cmd::Replay { transcript } => replay(transcript),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("assertion failed: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
