//! Command-line front end. Exit codes: 0 success, 1 configuration or usage
//! error, 2 trial failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{rescore, run_bench, summary, write_records, Algorithm, ExperimentConfig, TrialContext};
use crate::error::Error;
use crate::mdp::{exact_diameter, is_communicating, load_mdp, optimal_gain_bias, save_mdp};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_TRIAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "avgmdp", version, about = "Average-reward MDP policy identification experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Results file (CSV).
    #[arg(long, default_value = "results.csv")]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long, env = "AVGMDP_WORKERS", default_value_t = 1)]
    pub workers: usize,
    /// Per-trial progress on stderr.
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact gain, bias, span and diameter of a model.
    Solve {
        /// TOML config naming the instance.
        #[arg(long, conflicts_with = "mdp", required_unless_present = "mdp")]
        config: Option<PathBuf>,
        /// Model file (JSON).
        #[arg(long)]
        mdp: Option<PathBuf>,
    },
    /// Diameter estimation trials.
    EstimateDiameter(RunArgs),
    /// Diameter-free exploration trials.
    Dfe(RunArgs),
    /// Adaptive stopping trials.
    Stopping(RunArgs),
    /// Runs whatever algorithm the config names.
    Bench(RunArgs),
    /// Re-scores a results file against the exact model.
    Verify {
        /// Config the results were produced with.
        #[arg(long)]
        config: PathBuf,
        /// Results file (CSV).
        #[arg(long)]
        results: PathBuf,
    },
    /// Writes the configured instance as a model file.
    Export {
        /// TOML config naming the instance.
        #[arg(long)]
        config: PathBuf,
        /// Destination model file (JSON).
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Trial(e)) => {
            eprintln!("trial error: {e}");
            EXIT_TRIAL
        }
    }
}

enum Failure {
    Config(Error),
    Trial(Error),
}

fn config_err(e: Error) -> Failure {
    Failure::Config(e)
}

fn trial_err(e: Error) -> Failure {
    Failure::Trial(e)
}

fn dispatch(cmd: Command) -> std::result::Result<(), Failure> {
    match cmd {
        Command::Solve { config, mdp } => solve(config, mdp),
        Command::EstimateDiameter(a) => bench(a, Some(Algorithm::Diameter)),
        Command::Dfe(a) => bench(a, Some(Algorithm::Dfe)),
        Command::Stopping(a) => bench(a, Some(Algorithm::Stopping)),
        Command::Bench(a) => bench(a, None),
        Command::Verify { config, results } => verify(config, results),
        Command::Export { config, out } => {
            let cfg = ExperimentConfig::load(&config).map_err(config_err)?;
            let (mdp, _) = cfg.build_instance().map_err(config_err)?;
            save_mdp(&mdp, &out).map_err(config_err)
        }
    }
}

fn solve(config: Option<PathBuf>, mdp: Option<PathBuf>) -> std::result::Result<(), Failure> {
    let (model, label) = match (config, mdp) {
        (Some(c), _) => ExperimentConfig::load(&c).and_then(|cfg| cfg.build_instance()).map_err(config_err)?,
        (None, Some(m)) => (load_mdp(&m).map_err(config_err)?, m.display().to_string()),
        (None, None) => return Err(Failure::Config(Error::Config("give --config or --mdp".into()))),
    };
    let sol = optimal_gain_bias(&model).map_err(trial_err)?;
    let mut out = std::io::stdout().lock();
    let bias: Vec<String> = sol.gain_bias.bias.iter().map(|b| super::format_sig(*b)).collect();
    let diameter = if is_communicating(model.kernel()) {
        super::format_sig(exact_diameter(&model).map_err(trial_err)?)
    } else {
        "inf".into()
    };
    let text = format!(
        "instance: {label}\ngain: {}\nspan: {}\ndiameter: {diameter}\npolicy: {}\nbias: [{}]\n",
        super::format_sig(sol.gain_bias.gain),
        super::format_sig(sol.gain_bias.span),
        sol.policy,
        bias.join(", ")
    );
    out.write_all(text.as_bytes()).map_err(|e| trial_err(e.into()))
}

fn bench(args: RunArgs, forced: Option<Algorithm>) -> std::result::Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(&args.config).map_err(config_err)?;
    if let Some(alg) = forced {
        cfg.algorithm = alg;
    }
    // instance problems are configuration errors, not trial failures
    cfg.build_instance().map_err(config_err)?;
    let records = run_bench(&cfg, args.workers, args.verbose).map_err(trial_err)?;
    let file = File::create(&args.out).map_err(|e| config_err(e.into()))?;
    write_records(BufWriter::new(file), &records).map_err(trial_err)?;
    print!("{}", summary(&records));
    Ok(())
}

fn verify(config: PathBuf, results: PathBuf) -> std::result::Result<(), Failure> {
    let cfg = ExperimentConfig::load(&config).map_err(config_err)?;
    let file = File::open(&results).map_err(|e| config_err(e.into()))?;
    let records = super::read_records(file).map_err(config_err)?;
    let algorithm = records.first().map(|r| r.algorithm.as_str()).unwrap_or(cfg.algorithm.name());
    let algorithm = [Algorithm::Dfe, Algorithm::Planner, Algorithm::Stopping, Algorithm::Diameter]
        .into_iter()
        .find(|a| a.name() == algorithm)
        .ok_or_else(|| config_err(Error::Config(format!("unknown algorithm '{algorithm}'"))))?;
    let (mdp, label) = cfg.build_instance().map_err(config_err)?;
    let ctx = TrialContext::new(mdp, label, algorithm).map_err(trial_err)?;
    let mut mismatches = 0;
    for r in &records {
        if rescore(&ctx, r).map_err(trial_err)? != r.success {
            mismatches += 1;
            eprintln!("mismatch: eps={} seed={}", r.eps, r.seed);
        }
    }
    println!("verified {} records, {} mismatches", records.len(), mismatches);
    if mismatches > 0 {
        return Err(Failure::Trial(Error::NoConvergence(format!("{mismatches} success flags disagree"))));
    }
    Ok(())
}

