//! `conerisk`: batch front end for the exact risk-measure and market checkers.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

mod commands;
mod sweep;

#[derive(Parser)]
#[command(
    name = "conerisk",
    version,
    about = "Exact checkers for coherent risk measures and bid-ask markets on finite trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Print the JSON report instead of the human summary.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Re-verify every certificate in the report; exit 3 if one fails.
    #[arg(long, global = true)]
    recheck: bool,
    /// Add wall-clock timings (the report is then no longer deterministic).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Clone)]
pub struct ClaimArgs {
    /// Claim as a JSON array, flat or one array per leaf, e.g. "[4,-2]".
    #[arg(long)]
    pub claim: String,
}

#[derive(Args, Clone)]
pub struct EpsilonArg {
    /// Augmentation parameter in (0, 1); defaults to the fixture's value, else 1/10.
    #[arg(long)]
    pub epsilon: Option<String>,
}

#[derive(Subcommand, Clone)]
pub enum Command {
    /// Parse and validate a fixture.
    Validate { file: PathBuf },
    /// Conditional risk `ρ_t(X)` at every time-t node.
    Rho {
        file: PathBuf,
        #[command(flatten)]
        claim: ClaimArgs,
        #[arg(long, default_value_t = 0)]
        t: usize,
    },
    /// Nested risk `ρ_0 ∘ ⋯ ∘ ρ_{T−1}(X)` next to `ρ_0(X)`.
    Compose {
        file: PathBuf,
        #[command(flatten)]
        claim: ClaimArgs,
    },
    /// Optional V-m-stability of the scenario set.
    CheckStability {
        file: PathBuf,
        /// Random pastings used as a cross-check when stable.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Whether the acceptance cone is the sum of the step cones.
    CheckRepresentability { file: PathBuf },
    /// Split an acceptable claim into step-cone portfolios.
    Decompose {
        file: PathBuf,
        #[command(flatten)]
        claim: ClaimArgs,
    },
    /// No-arbitrage check of the market (or of the step cones).
    CheckArbitrage { file: PathBuf },
    /// Superhedging price of a claim in one numéraire.
    Superhedge {
        file: PathBuf,
        #[command(flatten)]
        claim: ClaimArgs,
        #[arg(long, default_value_t = 0)]
        numeraire: usize,
    },
    /// Coin-spin augmentation of a bid-ask market.
    Augment {
        file: PathBuf,
        #[command(flatten)]
        epsilon: EpsilonArg,
    },
    /// Scenario set and numéraires equivalent to a bid-ask market.
    ExtractScenarios {
        file: PathBuf,
        #[command(flatten)]
        epsilon: EpsilonArg,
    },
    /// Attainable claims of the market against the extracted acceptance cone.
    VerifyEquivalence {
        file: PathBuf,
        #[command(flatten)]
        epsilon: EpsilonArg,
    },
    /// Randomized property battery.
    Sweep(sweep::SweepArgs),
}

/// An input problem (exit 2) or a failed internal consistency check (exit 3).
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Internal(String),
}

impl Failure {
    pub fn input(e: impl std::fmt::Display) -> Self {
        Failure::Input(e.to_string())
    }
}

/// What a command hands back: the report body, a verdict, a human summary
/// and the outcome of re-verification when requested.
pub struct Outcome {
    pub verdict: Option<bool>,
    pub result: Value,
    pub summary: String,
    pub recheck: Option<Recheck>,
}

#[derive(Debug, Default, Serialize)]
pub struct Recheck {
    pub passed: bool,
    pub checks: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

impl Recheck {
    pub fn new() -> Self {
        Recheck {
            passed: true,
            ..Default::default()
        }
    }

    pub fn check(&mut self, ok: bool, what: &str) {
        self.checks += 1;
        if !ok {
            self.passed = false;
            self.failures.push(what.to_string());
        }
    }
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Report {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<InputDigest>,
    parameters: Value,
    verdict: Option<bool>,
    result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    recheck: Option<Recheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Value>,
}

fn init_threads() -> Result<(), Failure> {
    if let Ok(n) = std::env::var("CONERISK_THREADS") {
        let n: usize = n.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Failure::Input(format!("CONERISK_THREADS must be a positive integer, got {n:?}"))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    Ok(())
}

fn digest(path: &PathBuf) -> Result<(String, InputDigest), Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok((
        text,
        InputDigest {
            path: path.display().to_string(),
            sha256,
        },
    ))
}

fn run(cli: &Cli) -> Result<(Report, String), Failure> {
    init_threads()?;
    let start = Instant::now();
    let file = commands::input_file(&cli.command);
    let (text, input) = match file {
        Some(p) => {
            let (t, d) = digest(p)?;
            (Some(t), Some(d))
        }
        None => (None, None),
    };
    let (name, parameters) = commands::describe(&cli.command);
    let outcome = commands::dispatch(&cli.command, text.as_deref(), cli.common.recheck)?;
    let timings = cli
        .common
        .timings
        .then(|| serde_json::json!({ "total_ms": start.elapsed().as_secs_f64() * 1e3 }));
    Ok((
        Report {
            tool: "conerisk",
            version: env!("CARGO_PKG_VERSION"),
            command: name,
            input,
            parameters,
            verdict: outcome.verdict,
            result: outcome.result,
            recheck: outcome.recheck,
            timings,
        },
        outcome.summary,
    ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((report, summary)) => {
            let json = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
            if let Some(path) = &cli.common.output {
                if let Err(e) = std::fs::write(path, &json) {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            match cli.common.format {
                Format::Json => print!("{json}"),
                Format::Text => println!("{summary}"),
            }
            if report.recheck.as_ref().is_some_and(|r| !r.passed) {
                eprintln!("error: certificate re-verification failed");
                return ExitCode::from(3);
            }
            match report.verdict {
                Some(false) => ExitCode::from(1),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
