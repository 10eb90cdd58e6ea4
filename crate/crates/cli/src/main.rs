use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use tvipm_core::harness::{emit_summary, run_scenario, validate_scenario};
use tvipm_core::{Error, RunConfig, ScenarioKind, Summary};

#[derive(Parser)]
#[command(name = "tvipm", version, about = "Prediction-correction interior point flows for time-varying problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario, check the oracle bounds and print a summary.
    Run(RunArgs),
    /// Finite-difference check of every field in a scenario.
    Validate {
        #[command(flatten)]
        opts: Opts,
        /// Random points per field.
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Run a grid of gains and seeds in parallel, one summary row per cell.
    Sweep {
        #[command(flatten)]
        opts: Opts,
        #[arg(long, value_delimiter = ',', required = true)]
        sigmas: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Directory receiving one CSV per cell.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the resolved configuration in config-file form.
    Config(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    opts: Opts,
    /// CSV trace destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    Switching,
    TwoAgent,
    Equality,
    /// Take the scenario from the file given by --config.
    CustomFile,
}

#[derive(Args)]
struct Opts {
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    /// Config file of `key = value` lines; flags override its entries.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    gamma_c: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    /// Initial slack, or `auto` to derive it from the start point.
    #[arg(long)]
    s0: Option<String>,
    /// Margin added to a violated start when s0 is auto, or `auto`.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    max_step: Option<f64>,
    #[arg(long)]
    sample_interval: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of polynomial coefficients per target path.
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    oracle_tol: Option<f64>,
}

impl Opts {
    fn config(&self) -> Result<RunConfig, Error> {
        let flag_kind = match self.scenario {
            Some(ScenarioArg::Switching) => Some(ScenarioKind::Switching),
            Some(ScenarioArg::TwoAgent) => Some(ScenarioKind::TwoAgent),
            Some(ScenarioArg::Equality) => Some(ScenarioKind::Equality),
            Some(ScenarioArg::CustomFile) | None => None,
        };
        let mut cfg = match (&self.config, flag_kind) {
            (Some(path), kind) => {
                let cfg = RunConfig::load(path)?;
                if let Some(kind) = kind.filter(|k| *k != cfg.scenario) {
                    return Err(Error::InvalidInput(format!(
                        "--scenario {kind} conflicts with scenario {} in {}",
                        cfg.scenario,
                        path.display()
                    )));
                }
                cfg
            }
            (None, _) if self.scenario == Some(ScenarioArg::CustomFile) => {
                return Err(Error::InvalidInput("--scenario custom-file needs --config FILE".into()))
            }
            (None, kind) => RunConfig::new(kind.unwrap_or(ScenarioKind::Switching)),
        };
        let mut overrides: Vec<(&str, String)> = Vec::new();
        let mut put = |key: &'static str, v: Option<String>| {
            if let Some(v) = v {
                overrides.push((key, v));
            }
        };
        put("sigma", self.sigma.map(|v| v.to_string()));
        put("gamma_c", self.gamma_c.map(|v| v.to_string()));
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("c0", self.c0.map(|v| v.to_string()));
        put("s0", self.s0.clone());
        put("epsilon", self.epsilon.clone());
        put("t_end", self.t_end.map(|v| v.to_string()));
        put("max_step", self.max_step.map(|v| v.to_string()));
        put("sample_interval", self.sample_interval.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("degree", self.degree.map(|v| v.to_string()));
        put("oracle_tol", self.oracle_tol.map(|v| v.to_string()));
        for (key, value) in overrides {
            cfg.set(key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(args: &RunArgs) -> Result<Summary, Error> {
    let mut cfg = args.opts.config()?;
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    let summary = emit_summary(&run_scenario(&cfg)?);
    println!("{summary}");
    if let Some(out) = &cfg.out {
        println!("trace written to {}", out.display());
    }
    Ok(summary)
}

fn validate(opts: &Opts, count: usize) -> Result<bool, Error> {
    let cfg = opts.config()?;
    let mut by_field: BTreeMap<String, (usize, usize, f64)> = BTreeMap::new();
    for (label, report) in validate_scenario(&cfg, count)? {
        let entry = by_field.entry(label).or_insert((0, 0, 0.0));
        entry.0 += 1;
        entry.1 += usize::from(!report.passed());
        entry.2 = entry.2.max(report.max_error());
    }
    println!("{:<14} {:>7} {:>8} {:>12}", "field", "points", "failed", "worst_err");
    let mut ok = true;
    for (label, (points, failed, worst)) in &by_field {
        println!("{label:<14} {points:>7} {failed:>8} {worst:>12.3e}");
        ok &= *failed == 0;
    }
    println!("status {}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

fn sweep(opts: &Opts, sigmas: &[f64], seeds: &[u64], out_dir: Option<&PathBuf>) -> Result<ExitCode, Error> {
    let base = opts.config()?;
    let seeds = if seeds.is_empty() { vec![base.seed] } else { seeds.to_vec() };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let cells: Vec<(f64, u64)> = sigmas.iter().flat_map(|&s| seeds.iter().map(move |&k| (s, k))).collect();
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(sigma, seed)| {
            let mut cfg = base.clone();
            cfg.sigma = sigma;
            cfg.seed = seed;
            cfg.out = out_dir.map(|d| d.join(format!("{}_sigma{sigma}_seed{seed}.csv", cfg.scenario)));
            cfg.validate().and_then(|_| run_scenario(&cfg)).map(|t| emit_summary(&t))
        })
        .collect();
    println!("{:>6} {}", "seed", Summary::table_header());
    let mut code = 0u8;
    for ((_, seed), result) in cells.iter().zip(&results) {
        match result {
            Ok(summary) => {
                println!("{seed:>6} {}", summary.table_row());
                if !summary.passed() {
                    code = code.max(1);
                }
            }
            Err(e) => {
                println!("{seed:>6} error: {e}");
                code = 2;
            }
        }
    }
    Ok(ExitCode::from(code))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args).map(|s| ExitCode::from(s.exit_code() as u8)),
        Command::Validate { opts, count } => validate(opts, *count).map(|ok| ExitCode::from(u8::from(!ok))),
        Command::Sweep {
            opts,
            sigmas,
            seeds,
            out_dir,
        } => sweep(opts, sigmas, seeds, out_dir.as_ref()),
        Command::Config(args) => args.opts.config().map(|mut cfg| {
            cfg.out = args.out.clone().or(cfg.out);
            print!("{}", cfg.to_text());
            ExitCode::SUCCESS
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
