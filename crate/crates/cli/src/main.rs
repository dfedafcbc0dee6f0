//! `kolmo`: run the verification suites and experiments, writing
//! `report.json` and `trials.csv` to the output directory.
//!
//! Exit status is 0 when every check passes, 1 when a check fails or a run
//! breaks down, and 2 for usage errors and infeasible grid sizes.

mod settings;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kolmogorov::discretization::Grid;
use kolmogorov::estimator::suites::{self, Fault, SuiteOptions};
use kolmogorov::estimator::{
    averaging_experiment, hormander_experiment, regularity_ratio, weak11_experiment, AveragingConfig, ExperimentReport,
    HormanderConfig, RegularityConfig, Weak11Config,
};
use serde::Serialize;
use serde_json::json;
use settings::{usage, CliError, Settings};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "kolmo", version, about = "Verification suites and experiments for the Kolmogorov operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a verification suite.
    Verify { suite: Suite },
    /// Run an experiment.
    Run { experiment: Experiment },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Suite {
    Geometry,
    Kernel,
    Fractional,
    Solver,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Experiment {
    Regularity,
    Hormander,
    Weak11,
    Averaging,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FaultArg {
    Gamma1,
}

#[derive(Args, Debug)]
struct Opts {
    /// Spatial dimension.
    #[arg(long, global = true)]
    d: Option<String>,
    /// Grid nodes per axis.
    #[arg(long, global = true, value_name = "NX,NY,NT")]
    grid: Option<String>,
    /// Box half-lengths per axis.
    #[arg(long = "box", global = true, value_name = "LX,LY,LT")]
    box_: Option<String>,
    /// Integrability exponent in (x, t); a comma list pairs with --q.
    #[arg(long, global = true)]
    p: Option<String>,
    /// Integrability exponent in y.
    #[arg(long, global = true)]
    q: Option<String>,
    /// Ensemble size, pair count or sample count, depending on the command.
    #[arg(long, global = true)]
    n: Option<String>,
    /// Averaging radii, comma separated.
    #[arg(long = "R", global = true, value_name = "R1,R2,...")]
    r: Option<String>,
    /// Seed for every random draw; required.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Tolerance override, repeatable.
    #[arg(long, global = true, value_name = "KEY=VAL")]
    tol: Vec<String>,
    /// Flat key=value file; flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, global = true, hide = true)]
    inject_fault: Option<FaultArg>,
}

impl Opts {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut s = Settings::default();
        if let Some(path) = &self.config {
            s.merge_file(path)?;
        }
        let flags = [
            ("d", &self.d),
            ("grid", &self.grid),
            ("box", &self.box_),
            ("p", &self.p),
            ("q", &self.q),
            ("n", &self.n),
            ("R", &self.r),
            ("seed", &self.seed),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                s.set(k, v.clone())?;
            }
        }
        if let Some(out) = &self.out {
            s.set("out", out.to_string_lossy())?;
        }
        for t in &self.tol {
            s.set_tol(t)?;
        }
        Ok(s)
    }
}

#[derive(Serialize)]
struct Document<'a> {
    version: &'static str,
    command: String,
    passed: bool,
    config: serde_json::Value,
    report: &'a ExperimentReport,
}

struct Outcome {
    command: String,
    config: serde_json::Value,
    report: ExperimentReport,
}

fn seed(s: &Settings, command: &str) -> Result<u64, CliError> {
    match s.get::<u64>("seed")? {
        Some(v) => Ok(v),
        None => usage(format!("`{command}` draws random samples; pass --seed")),
    }
}

fn dimension(s: &Settings) -> Result<usize, CliError> {
    let d = s.get::<usize>("d")?.unwrap_or(1);
    if !(1..=2).contains(&d) {
        return usage(format!("d must be 1 or 2, got {d}"));
    }
    Ok(d)
}

fn triple<T: std::str::FromStr + Copy>(s: &Settings, key: &str, default: [T; 3], len: usize) -> Result<Vec<T>, CliError> {
    match s.list::<T>(key)? {
        None => Ok(default[..len].to_vec()),
        Some(v) if v.len() == len || (len == 2 && v.len() == 3) => Ok(v[..len].to_vec()),
        Some(v) => usage(format!("--{key} needs {len} comma-separated values, got {}", v.len())),
    }
}

fn exponents(s: &Settings, default: &[(f64, f64)]) -> Result<Vec<(f64, f64)>, CliError> {
    match (s.list::<f64>("p")?, s.list::<f64>("q")?) {
        (None, None) => Ok(default.to_vec()),
        (Some(p), Some(q)) if p.len() == q.len() => Ok(p.into_iter().zip(q).collect()),
        (Some(_), Some(_)) => usage("--p and --q lists must have the same length"),
        _ => usage("--p and --q must be given together"),
    }
}

fn warn_unused(s: &Settings, used: &[&str]) {
    for k in s.unused(used) {
        eprintln!("note: setting `{k}` is not used by this command");
    }
}

fn verify(suite: Suite, s: &Settings, fault: Option<FaultArg>) -> Result<Outcome, CliError> {
    let name = format!("{suite:?}").to_lowercase();
    let command = format!("verify {name}");
    warn_unused(s, &["seed", "n", "d", "out"]);
    s.tolerances(&[])?;
    if dimension(s)? != 1 {
        return usage("the verification suites run at d = 1");
    }
    let mut opts = SuiteOptions::new(seed(s, &command)?);
    if let Some(n) = s.get::<usize>("n")? {
        if n < 1000 {
            return usage("--n must be at least 1000 for the verification suites");
        }
        opts.samples = n;
    }
    opts.fault = match fault {
        Some(FaultArg::Gamma1) => Some(Fault::Gamma1),
        None => None,
    };
    let report = match suite {
        Suite::Geometry => suites::geometry_suite(&opts)?,
        Suite::Kernel => suites::kernel_suite(&opts)?,
        Suite::Fractional => suites::fractional_suite(&opts)?,
        Suite::Solver => suites::solver_suite(&opts)?,
    };
    Ok(Outcome { command, config: json!(opts), report })
}

fn apply_tol(target: &mut f64, tol: &std::collections::BTreeMap<String, f64>, key: &str) {
    if let Some(v) = tol.get(key) {
        *target = *v;
    }
}

fn run(experiment: Experiment, s: &Settings) -> Result<Outcome, CliError> {
    let name = format!("{experiment:?}").to_lowercase();
    let command = format!("run {name}");
    let seed = seed(s, &command)?;
    let d = dimension(s)?;
    let (config, report) = match experiment {
        Experiment::Regularity => {
            warn_unused(s, &["seed", "d", "grid", "box", "p", "q", "n", "out"]);
            let tol = s.tolerances(&["drift", "dilation"])?;
            let mut cfg = RegularityConfig::standard(vec![(2.0, 2.0), (1.5, 3.0), (3.0, 1.5)], 20, seed);
            cfg.exponents = exponents(s, &cfg.exponents)?;
            cfg.n = s.get("n")?.unwrap_or(cfg.n);
            let nodes = triple(s, "grid", [64, 64, 128], 3)?;
            let half = triple(s, "box", [2.0, 2.0, 6.0], 3)?;
            cfg.grid = Grid::xyt(d, [half[0], half[1], half[2]], [nodes[0], nodes[1], nodes[2]])?;
            apply_tol(&mut cfg.drift_tol, &tol, "drift");
            apply_tol(&mut cfg.dilation_tol, &tol, "dilation");
            (json!(cfg), regularity_ratio(&cfg)?)
        }
        Experiment::Hormander => {
            warn_unused(s, &["seed", "d", "n", "out"]);
            let tol = s.tolerances(&["stderr", "sigma", "spread"])?;
            let mut cfg = HormanderConfig::standard(seed);
            cfg.d = d;
            cfg.pairs = s.get("n")?.unwrap_or(cfg.pairs);
            apply_tol(&mut cfg.stderr_tol, &tol, "stderr");
            apply_tol(&mut cfg.sigma_tol, &tol, "sigma");
            apply_tol(&mut cfg.spread_tol, &tol, "spread");
            (json!(cfg), hormander_experiment(&cfg)?)
        }
        Experiment::Weak11 => {
            warn_unused(s, &["seed", "d", "grid", "box", "out"]);
            let tol = s.tolerances(&["spread"])?;
            let mut cfg = Weak11Config::standard(seed);
            let nodes = triple(s, "grid", [256, 256, 256], 3)?;
            let half = triple(s, "box", [0.8, 0.8, 0.8], 3)?;
            cfg.grid = Grid::xyt(d, [half[0], half[1], half[2]], [nodes[0], nodes[1], nodes[2]])?;
            apply_tol(&mut cfg.spread_tol, &tol, "spread");
            (json!(cfg), weak11_experiment(&cfg)?)
        }
        Experiment::Averaging => {
            warn_unused(s, &["seed", "d", "grid", "box", "p", "q", "R", "out"]);
            let tol = s.tolerances(&["slope", "weak", "drift", "dilation"])?;
            let mut cfg = AveragingConfig::standard(seed);
            cfg.exponents = exponents(s, &cfg.exponents)?;
            if let Some(r) = s.list::<f64>("R")? {
                cfg.r_list = r;
            }
            let nodes = triple(s, "grid", [128, 128, 0], 2)?;
            let half = triple(s, "box", [3.0, 3.0, 0.0], 2)?;
            cfg.window = Grid::xy(d, [half[0], half[1]], [nodes[0], nodes[1]])?;
            apply_tol(&mut cfg.slope_max, &tol, "slope");
            apply_tol(&mut cfg.weak_tol, &tol, "weak");
            apply_tol(&mut cfg.drift_tol, &tol, "drift");
            apply_tol(&mut cfg.dilation_tol, &tol, "dilation");
            (json!(cfg), averaging_experiment(&cfg)?)
        }
    };
    Ok(Outcome { command, config, report })
}

fn write(outcome: &Outcome, out: &std::path::Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Failed(format!("cannot write to {}: {e}", out.display()));
    std::fs::create_dir_all(out).map_err(io)?;
    let doc = Document {
        version: env!("CARGO_PKG_VERSION"),
        command: outcome.command.clone(),
        passed: outcome.report.passed(),
        config: outcome.config.clone(),
        report: &outcome.report,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Failed(e.to_string()))?;
    text.push('\n');
    std::fs::write(out.join("report.json"), text).map_err(io)?;
    outcome.report.write_csv(&out.join("trials.csv"))?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let s = cli.opts.settings()?;
    if cli.opts.inject_fault.is_some() && !matches!(cli.command, Command::Verify { suite: Suite::Kernel }) {
        return usage("fault injection only applies to `verify kernel`");
    }
    let outcome = match cli.command {
        Command::Verify { suite } => verify(suite, &s, cli.opts.inject_fault)?,
        Command::Run { experiment } => run(experiment, &s)?,
    };
    let out: PathBuf = s.get("out")?.unwrap_or_else(|| PathBuf::from("kolmo-out"));
    let mut config = outcome.config;
    config["out"] = json!(out);
    let outcome = Outcome { config, ..outcome };
    write(&outcome, &out)?;
    for c in &outcome.report.criteria {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed: Vec<&str> = outcome.report.criteria.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        eprintln!("{} failed {} of {} checks:", outcome.command, failed.len(), outcome.report.criteria.len());
        for f in &failed {
            eprintln!("  {f}");
        }
    }
    println!("report written to {}", out.join("report.json").display());
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
