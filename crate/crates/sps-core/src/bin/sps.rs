//! Command-line front end for the experiment harness.
//!
//! Exit codes: 0 on success, 1 when a property or concentration check
//! fails, 2 on usage/config errors.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sps_core::bounds::BoundInputs;
use sps_core::experiments::{
    bound_csv, bound_curve, checks_csv, coverage_csv, figure1_csv, lemma8_curve,
    run_concentration_check, run_coverage, run_figure1, run_property_suite, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "sps", about = "Confidence-region experiments for linear regression", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// TOML experiment config; defaults to the built-in simulation setup
    #[arg(long)]
    config: Option<String>,
    /// Master seed (overrides the config value)
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; stdout when absent
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo coverage of the true parameter
    Coverage {
        #[command(flatten)]
        common: CommonOpts,
        /// Number of independent trials (overrides the config value)
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        q: Option<usize>,
    },
    /// Empirical diameter quantiles vs the theoretical bound over a grid
    Figure1 {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Randomized verification of the projection/geometry identities
    Properties {
        /// Number of random instances
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Tail-probability checks against the concentration inequalities
    Concentration {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated epsilon grid
        #[arg(long, default_value = "0.01,0.02,0.05,0.1,0.2,0.5,1.0")]
        epsilons: String,
    },
    /// Evaluate the diameter bound over a range of sample sizes
    Bound {
        /// Sample sizes: a single value or an inclusive range "a..b"
        #[arg(long)]
        n: String,
        #[arg(long, default_value_t = 1)]
        step: usize,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        lambda0: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        q: usize,
        /// Use the sharper factor-of-two form (requires m = 2, q = 1)
        #[arg(long, default_value_t = false)]
        half: bool,
        #[arg(long)]
        out: Option<String>,
    },
}

fn load_config(common: &CommonOpts) -> sps_core::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::benchmark(0),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn emit(out: &Option<String>, text: &str) -> sps_core::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_range(spec: &str, step: usize) -> Result<Vec<usize>, String> {
    if step == 0 {
        return Err("step must be >= 1".into());
    }
    if let Some((a, b)) = spec.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
        let b: usize = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
        if a > b {
            return Err(format!("empty range {spec:?}"));
        }
        Ok((a..=b).step_by(step).collect())
    } else {
        let v: usize = spec.trim().parse().map_err(|_| format!("bad sample size {spec:?}"))?;
        Ok(vec![v])
    }
}

fn run(cli: Cli) -> Result<ExitCode,ERR> {
    match cli.command {
        Command::Coverage { common, trials, m, q } => {
            let mut cfg = load_config(&common)?;
            if let Some(t) = trials {
                cfg.trajectories = t;
            }
            if let Some(m) = m {
                cfg.m = m;
            }
            if let Some(q) = q {
                cfg.q = q;
            }
            let result = run_coverage(&cfg)?;
            emit(&common.out, &coverage_csv(&result))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Figure1 { common } => {
            let cfg = load_config(&common)?;
            let result = run_figure1(&cfg)?;
            emit(&common.out, &figure1_csv(&result))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Properties { instances, seed, out } => {
            let rows = run_property_suite(seed, instances)?;
            let failed = rows.iter().any(|r| !r.pass);
            emit(&out, &checks_csv(&rows))?;
            Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Concentration { common, epsilons } => {
            let cfg = load_config(&common)?;
            let grid: Vec<f64> = epsilons
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad epsilon {s:?}")))
                .collect::<Result<_, _>>()?;
            let rows = run_concentration_check(&cfg, &grid)?;
            let failed = rows.iter().any(|r| !r.pass);
            emit(&common.out, &checks_csv(&rows))?;
            Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Bound {
            n, step, delta, sigma, lambda0, kappa, rho, d, m, q, half, out,
        } => {
            let ns = parse_range(&n, step)?;
            let base = BoundInputs { sigma, lambda0, kappa, rho, delta, d, n: ns[0], m, q };
            base.validate()?;
            let rows = if half { lemma8_curve(&base, ns) } else { bound_curve(&base, ns) };
            emit(&out, &bound_csv(&rows))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

enum ERR {
    Usage(String),
    Runtime(String),
}

impl From<String> for ERR {
    fn from(s: String) -> Self {
        ERR::Usage(s)
    }
}

impl From<sps_core::SpsError> for ERR {
    fn from(e: sps_core::SpsError) -> Self {
        use sps_core::SpsError::*;
        match e {
            Config(_) | InvalidInput(_) | InvalidMq { .. } | DeltaOutOfRange(_) => {
                ERR::Usage(e.to_string())
            }
            other => ERR::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(ERR::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(ERR::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
