//! Command-line front end: scenario simulation, economic sweeps, model
//! comparison, the transit-price game and chain validation.

pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use roamchain::contracts::world_snapshot;
use roamchain::economics::{self, EconError, SweepParam};
use roamchain::ledger::{validate_chain, validate_chain_with, Chain, CoinAgeLedger};
use roamchain::roamsim::{self, ConfigError, ScenarioConfig, SimError};

pub const SEED_ENV: &str = "ROAMCHAIN_SEED";

#[derive(Debug, Parser, PartialEq)]
#[command(
    name = "roamchain",
    version,
    about = "Blockchain roaming simulator and economics toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, PartialEq)]
pub enum Command {
    /// Run a scenario and write chain, world and metrics to a directory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep one tariff or market parameter and report trend directions.
    EconSweep {
        #[arg(long)]
        config: PathBuf,
        /// One of p, c, t, lambda, theta_bar.
        #[arg(long)]
        param: String,
        /// start:end:step, both ends inclusive.
        #[arg(long)]
        range: String,
        /// Index of the operator (and its country) being varied.
        #[arg(long, default_value_t = 0)]
        operator: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare traditional and blockchain roaming across first-country wealth rates.
    EconCompare {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated list of lambda values for the first country.
        #[arg(long, value_delimiter = ',', required = true)]
        lambda1: Vec<f64>,
        /// Exit with status 1 unless every structural check passes.
        #[arg(long)]
        assert: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the transit-price game by best-response iteration.
    EconNash {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a chain export for integrity.
    Validate {
        #[arg(long)]
        chain: PathBuf,
        /// Also check consensus proofs against this scenario's settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Io(_) => 4,
            CliError::Failed(_) => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EconError> for CliError {
    fn from(e: EconError) -> Self {
        match e {
            EconError::BadRange(_) | EconError::NoSuchOperator { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => c.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Expands `start:end:step` into `start + k * step` for every `k` that
/// stays within `end` (tolerating rounding at the end point).
pub fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Usage(format!("range {text:?}: {why}"));
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, step] = parts[..] else {
        return Err(bad("expected start:end:step"));
    };
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    let (Some(a), Some(b), Some(step)) = (num(a), num(b), num(step)) else {
        return Err(bad("not a number"));
    };
    if step <= 0.0 {
        return Err(bad("step must be > 0"));
    }
    if b < a {
        return Err(bad("end before start"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + k as f64 * step).collect())
}

pub fn load_config(path: &Path, seed_override: Option<&str>) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut cfg = ScenarioConfig::from_toml_str(&text)?;
    if let Some(seed) = seed_override {
        cfg.scenario.seed = seed.trim().parse().map_err(|_| {
            CliError::Config(format!(
                "{SEED_ENV}: {seed:?} is not an unsigned 64-bit integer"
            ))
        })?;
    }
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_err(&path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn operator_names(cfg: &ScenarioConfig) -> Vec<String> {
    cfg.operators.iter().map(|o| o.name.clone()).collect()
}

/// Runs one command, writing human-readable output to `stdout`.
pub fn run(cli: Cli, seed_override: Option<&str>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut say = |s: &str| {
        stdout
            .write_all(s.as_bytes())
            .map_err(|e| CliError::Io(e.to_string()))
    };
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = load_config(&config, seed_override)?;
            let seed = cfg.scenario.seed;
            let (chain, world, metrics) = roamsim::run_scenario(cfg.clone())?;
            let (replayed, rejected) = roamsim::replay_world(&cfg, &chain);
            let replay_ok = rejected.is_empty() && replayed == world;
            let summary = report::summary(seed, &metrics, replay_ok);
            ensure_dir(&out)?;
            write_file(&out, "chain.txt", &chain.export())?;
            write_file(&out, "operators.csv", &report::operators_csv(&metrics))?;
            write_file(&out, "summary.txt", &summary)?;
            write_file(&out, "world.jsonl", &world_snapshot(&world))?;
            say(&summary)?;
            if !metrics.conserved() || !replay_ok {
                return Err(CliError::Failed(
                    "conservation or replay audit failed".into(),
                ));
            }
        }
        Command::EconSweep {
            config,
            param,
            range,
            operator,
            out,
        } => {
            let cfg = load_config(&config, seed_override)?;
            let param: SweepParam = param.parse()?;
            let values = parse_range(&range)?;
            let (markets, tariffs, model) = cfg.economic_inputs();
            let result = economics::sweep(&markets, &tariffs, &model, param, operator, &values)?;
            let names = operator_names(&cfg);
            let csv = report::sweep_csv(&names, &result);
            match out {
                Some(dir) => {
                    ensure_dir(&dir)?;
                    write_file(&dir, "sweep.csv", &csv)?;
                }
                None => say(&csv)?,
            }
            say(&report::sweep_table(&names, &result))?;
        }
        Command::EconCompare {
            config,
            lambda1,
            assert,
            out,
        } => {
            let cfg = load_config(&config, seed_override)?;
            let (markets, tariffs, model) = cfg.economic_inputs();
            let cmp = economics::compare_models(&markets, &tariffs, &model, &lambda1)?;
            let names = operator_names(&cfg);
            let csv = report::compare_csv(&names, &cmp);
            match out {
                Some(dir) => {
                    ensure_dir(&dir)?;
                    write_file(&dir, "compare.csv", &csv)?;
                }
                None => say(&csv)?,
            }
            say(&report::compare_table(&cmp))?;
            if assert && !cmp.all_pass() {
                return Err(CliError::Failed("model comparison checks failed".into()));
            }
        }
        Command::EconNash { config, out } => {
            let cfg = load_config(&config, seed_override)?;
            let (markets, tariffs, model) = cfg.economic_inputs();
            let r = economics::transit_nash(&markets, &tariffs, &model)?;
            let names = operator_names(&cfg);
            if let Some(dir) = out {
                ensure_dir(&dir)?;
                write_file(&dir, "nash.csv", &report::nash_csv(&names, &r))?;
            }
            say(&report::nash_table(&names, &r))?;
            if !r.converged {
                return Err(CliError::Failed(
                    "best-response iteration did not converge".into(),
                ));
            }
        }
        Command::Validate { chain, config } => {
            let text = fs::read_to_string(&chain).map_err(|e| io_err(&chain, e))?;
            let parsed = Chain::import(&text).map_err(|e| CliError::Failed(e.to_string()))?;
            let verdict = match config {
                Some(path) => {
                    let cfg = load_config(&path, None)?;
                    let mut stake = CoinAgeLedger::new();
                    for o in &cfg.operators {
                        let amount = o.initial_crypto.minor() as u64;
                        if amount > 0 {
                            let addr =
                                roamchain::Address::from_label(&format!("operator:{}", o.name));
                            stake.add_holding(addr, amount, 0);
                        }
                    }
                    validate_chain_with(&parsed, &cfg.consensus_config(), &stake)
                }
                None => validate_chain(&parsed),
            };
            say(&format!("{verdict}\n"))?;
            if !verdict.is_ok() {
                return Err(CliError::Failed("chain is invalid".into()));
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with(
    args: impl IntoIterator<Item = OsString>,
    seed_override: Option<&str>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match run(cli, seed_override, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "roamchain: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("roamchain").chain(args.iter().copied()))
    }

    #[test]
    fn simulate_command() {
        assert_eq!(
            parse(&[
                "simulate",
                "--config",
                "two_country.cfg",
                "--out",
                "results/"
            ])
            .unwrap(),
            Cli {
                command: Command::Simulate {
                    config: "two_country.cfg".into(),
                    out: "results/".into()
                }
            }
        );
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with(
            ["roamchain", "frobnicate"].map(OsString::from),
            None,
            &mut out,
            &mut err,
        );
        assert_eq!(code, 2);
        assert!(!err.is_empty());
    }

    #[test]
    fn lambda_list() {
        let cli = parse(&["econ-compare", "--config", "x", "--lambda1", "0.25,0.5,1"]).unwrap();
        let Command::EconCompare {
            lambda1, assert, ..
        } = cli.command
        else {
            panic!()
        };
        assert_eq!(lambda1, vec![0.25, 0.5, 1.0]);
        assert!(!assert);
    }

    #[test]
    fn range_expansion() {
        assert_eq!(
            parse_range("0.5:2.0:0.5").unwrap(),
            vec![0.5, 1.0, 1.5, 2.0]
        );
        assert_eq!(parse_range("0:1:0.1").unwrap().len(), 11);
        assert_eq!(parse_range("1:1:0.5").unwrap(), vec![1.0]);
        for bad in ["1:2", "a:2:1", "0:1:0", "2:1:0.5", "0:1:-1"] {
            assert_eq!(parse_range(bad).unwrap_err().exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn missing_config_is_io_error() {
        let cli = parse(&["econ-nash", "--config", "/nonexistent/x.cfg"]).unwrap();
        let err = run(cli, None, &mut Vec::new()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
