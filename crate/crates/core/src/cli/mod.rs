//! Command-line front end: `gen`, `run`, `analyze`, `fit`, `analytic` and
//! `selftest`.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 for
//! numerical-consistency failures (including a failing self-test).

mod config;
mod pipeline;

pub use config::{DeltaRule, ExperimentConfig, LadderSpec, ScheduleSpec};
pub use pipeline::{
    cmd_analyze, cmd_fit, cmd_gen, cmd_run, generate_instance, route_for, Analysis, BetaStarFit, BetaStarRow,
    CurveRow, FitSummary, InstanceEntry, ResidualRow, Route, RunRecord,
};

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::{
    anneal_csv, grover_anneal_gibbs_weight, grover_beta_of_p0, indep_spins_beta_of_p0, interior_grid,
    qubit_anneal_gibbs_weight,
};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::instance::ClassTag;
use crate::validation::run_selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "betascale", version, about = "Temperature scaling of Gibbs samplers on spin glasses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the instance set
    Gen(PipelineArgs),
    /// Enumerate or sample every instance
    Run(PipelineArgs),
    /// Aggregate beta* and specific-heat medians per size
    Analyze(PipelineArgs),
    /// Fit log and power laws to the analysis tables
    Fit(PipelineArgs),
    /// Emit closed-form reference curves as CSV
    Analytic(AnalyticArgs),
    /// Compare the sampler with exact enumeration on small instances
    Selftest(SelftestArgs),
}

/// Flags override fields of the config file, which overrides the defaults.
#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub class: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub oracle_cap: Option<usize>,
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    /// Target rules: zero, const<k>, sqrt, linear
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    #[arg(long)]
    pub exclude_smallest: bool,
}

impl PipelineArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.class {
            cfg.class = v.parse::<ClassTag>()?;
        }
        if let Some(v) = &self.sizes {
            cfg.sizes = v.clone();
        }
        if let Some(v) = self.instances {
            cfg.instances_per_size = v;
        }
        if let Some(v) = self.oracle_cap {
            cfg.oracle_cap = v;
        }
        if let Some(v) = self.warmup {
            cfg.schedule.warmup_swaps = v;
        }
        if let Some(v) = self.n_samples {
            cfg.schedule.n_samples = v;
        }
        if let Some(v) = &self.q {
            cfg.q = v.clone();
        }
        if let Some(v) = &self.targets {
            cfg.targets = v.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if self.exclude_smallest {
            cfg.exclude_smallest = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Curve {
    /// p(s) for N independent qubits
    AnnealQubits,
    /// p(s) for the Grover problem
    AnnealGrover,
    /// beta(p0) for independent spins over a list of N
    BetaIndep,
    /// beta(p0) for the Grover spectrum over a list of N
    BetaGrover,
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    #[arg(long, value_enum)]
    pub curve: Curve,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 99)]
    pub points: usize,
    #[arg(long, default_value_t = 0.1)]
    pub p0: f64,
    #[arg(long, value_delimiter = ',', default_value = "10,20,40")]
    pub n_list: Vec<usize>,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write the JSON report here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn analytic(args: &AnalyticArgs) -> Result<String> {
    let hash = format!("analytic:{:?}:n={}:beta={}", args.curve, args.n, args.beta);
    match args.curve {
        Curve::AnnealQubits => anneal_csv(&qubit_anneal_gibbs_weight(args.n, args.beta, &interior_grid(args.points))?, &hash),
        Curve::AnnealGrover => anneal_csv(&grover_anneal_gibbs_weight(args.n, args.beta, &interior_grid(args.points))?, &hash),
        Curve::BetaIndep | Curve::BetaGrover => {
            let mut s = format!("# betascale {} p0={}\nn,beta_exact,beta_expansion\n", crate::TOOL_VERSION, args.p0);
            for &n in &args.n_list {
                let b = match args.curve {
                    Curve::BetaIndep => indep_spins_beta_of_p0(n, args.p0)?,
                    _ => grover_beta_of_p0(n, args.p0)?,
                };
                s.push_str(&format!("{n},{},{}\n", b.beta_exact, b.beta_expansion));
            }
            Ok(s)
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Gen(a) => {
            let written = cmd_gen(&a.resolve()?)?;
            println!("wrote {} instances", written.len());
        }
        Command::Run(a) => {
            let runs = cmd_run(&a.resolve()?)?;
            let failing = runs.iter().filter(|r| r.block_test_pass == Some(false)).count();
            println!("ran {} instances ({failing} failed the block test)", runs.len());
        }
        Command::Analyze(a) => {
            let an = cmd_analyze(&a.resolve()?)?;
            for r in &an.beta_star {
                let b = r.median_beta_star.map_or("not reached".to_string(), |b| format!("{b:.4}"));
                println!("{} N={} delta={} q={} median beta*={b}", r.size_label, r.n_spins, r.delta_rule, r.q);
            }
        }
        Command::Fit(a) => {
            let f = cmd_fit(&a.resolve()?)?;
            for b in &f.beta_star {
                println!(
                    "delta={} q={}: b={:.4} [{:.4}, {:.4}], alpha={:.4}, rss ratio={:.3}{}",
                    b.delta_rule,
                    b.q,
                    b.log_fit.slope().value,
                    b.log_fit.slope().ci95.0,
                    b.log_fit.slope().ci95.1,
                    b.power_fit.slope().value,
                    b.comparison.ratio,
                    if b.comparison.indistinguishable { " (indistinguishable)" } else { "" }
                );
            }
        }
        Command::Analytic(a) => emit(&a.out, &analytic(a)?)?,
        Command::Selftest(a) => {
            let report = run_selftest(a.seed)?;
            for c in &report.comparisons {
                let bad = c.rungs.iter().filter(|r| !(r.mean_ok && r.c_ok)).count();
                println!("{} N={} {}: {} rungs, {bad} outside tolerance", c.class_tag, c.n_spins, &c.instance_hash[..12], c.rungs.len());
            }
            if let Some(p) = &a.out {
                write_atomic(p, serde_json::to_string_pretty(&report)?.as_bytes())?;
            }
            println!("selftest {}", if report.pass { "passed" } else { "FAILED" });
            if !report.pass {
                return Ok(EXIT_NUMERICAL);
            }
        }
    }
    Ok(EXIT_OK)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Consistency(_) => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    // Energy-drift and NaN checks inside the sampler panic; report them as
    // numerical failures.
    match std::panic::catch_unwind(|| execute(&cli)) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(_) => EXIT_NUMERICAL,
    }
}
