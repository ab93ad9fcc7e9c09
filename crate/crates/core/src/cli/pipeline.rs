use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{DeltaRule, ExperimentConfig};
use crate::error::{Error, Result};
use crate::estimators::{
    beta_star_from_ladder, estimates_from_dos, estimates_from_samples, estimates_json,
    series_thermalization_test, ThermalEstimates, MIN_BLOCK_TEST_SAMPLES,
};
use crate::fits::{compare_models, fit_log_law, fit_power_law, residual_scaling, FitPoint, ModelComparison, ResidualPoint, ScalingFit};
use crate::fsutil::{read_to_string, write_atomic};
use crate::instance::{build_chimera, generate_bimodal, generate_planted, generate_xorsat3, ClassTag, Instance};
use crate::oracle::{beta_star_exact, enumerate_dos_capped, DensityOfStates};
use crate::pt::{pt_run_with, read_samples_csv, write_samples_csv, PtOptions, SampleSeries};
use crate::rng::derive_seed;
use crate::stats::median;
use crate::TOOL_VERSION;

const PT_SEED_SALT: u64 = 0x5054;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceEnvelope {
    tool_version: String,
    config_hash: String,
    name: String,
    size: usize,
    instance: Instance,
}

/// One generated instance on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEntry {
    pub name: String,
    pub size: usize,
    pub path: PathBuf,
}

fn dir(cfg: &ExperimentConfig, sub: &str) -> PathBuf {
    cfg.output_dir.join(sub)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    write_atomic(path, serde_json::to_string_pretty(value)?.as_bytes())
}

fn instance_seed(cfg: &ExperimentConfig, size: usize, k: usize) -> u64 {
    derive_seed(derive_seed(cfg.seed, size as u64), k as u64)
}

pub fn generate_instance(cfg: &ExperimentConfig, size: usize, k: usize) -> Result<Instance> {
    let seed = instance_seed(cfg, size, k);
    match cfg.class {
        ClassTag::Planted => generate_planted(&build_chimera(size, size)?, &cfg.planted, seed),
        ClassTag::Bimodal => generate_bimodal(&build_chimera(size, size)?, seed),
        ClassTag::Xorsat3 => generate_xorsat3(size, seed),
        ClassTag::Custom => Err(Error::Config("cannot generate custom instances".into())),
    }
}

/// Writes `instances/<class>_<size>_<k>.json` for every size and index.
pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<Vec<InstanceEntry>> {
    cfg.validate()?;
    let hash = cfg.hash();
    write_json(&cfg.output_dir.join("config.json"), &json!({
        "tool_version": TOOL_VERSION,
        "config_hash": hash,
        "config": cfg,
    }))?;
    let jobs: Vec<(usize, usize)> = cfg
        .sizes
        .iter()
        .flat_map(|&s| (0..cfg.instances_per_size).map(move |k| (s, k)))
        .collect();
    jobs.par_iter()
        .map(|&(size, k)| {
            let instance = generate_instance(cfg, size, k)?;
            let name = format!("{}_{}_{k:04}", cfg.class, cfg.size_label(size));
            let path = dir(cfg, "instances").join(format!("{name}.json"));
            let env = InstanceEnvelope {
                tool_version: TOOL_VERSION.into(),
                config_hash: hash.clone(),
                name: name.clone(),
                size,
                instance,
            };
            write_atomic(&path, serde_json::to_string_pretty(&env)?.as_bytes())?;
            Ok(InstanceEntry { name, size, path })
        })
        .collect()
}

fn load_instance(path: &Path) -> Result<(InstanceEnvelope, Instance)> {
    let env: InstanceEnvelope = serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let inst = env.instance.clone();
    Ok((env, inst))
}

/// Instances listed by the config, generating any that are missing.
fn entries(cfg: &ExperimentConfig) -> Result<Vec<InstanceEntry>> {
    let mut out = Vec::new();
    for &size in &cfg.sizes {
        for k in 0..cfg.instances_per_size {
            let name = format!("{}_{}_{k:04}", cfg.class, cfg.size_label(size));
            let path = dir(cfg, "instances").join(format!("{name}.json"));
            if !path.exists() {
                return cmd_gen(cfg);
            }
            out.push(InstanceEntry { name, size, path });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Oracle,
    Pt,
}

pub fn route_for(cfg: &ExperimentConfig, n_spins: usize) -> Route {
    if n_spins <= cfg.oracle_cap {
        Route::Oracle
    } else {
        Route::Pt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub name: String,
    pub size: usize,
    pub n_spins: usize,
    pub route: Route,
    /// `None` when the block test was not applicable (oracle route or too
    /// few samples).
    pub block_test_pass: Option<bool>,
    pub block_test_failing_fraction: Option<f64>,
}

fn run_one(cfg: &ExperimentConfig, hash: &str, entry: &InstanceEntry) -> Result<RunRecord> {
    let (_, inst) = load_instance(&entry.path)?;
    let ladder = cfg.ladder.build()?;
    let out = dir(cfg, "runs").join(&entry.name);
    let n = inst.n_spins();
    let route = route_for(cfg, n);
    let (estimates, block): (Vec<ThermalEstimates>, Option<(bool, f64)>) = match route {
        Route::Oracle => {
            let dos = enumerate_dos_capped(&inst, cfg.oracle_cap)?;
            let e0 = inst.known_e0().unwrap_or(dos.ground_energy());
            write_json(&out.join("dos.json"), &json!({
                "tool_version": TOOL_VERSION,
                "config_hash": hash,
                "dos": dos,
            }))?;
            let est = ladder
                .betas()
                .iter()
                .map(|&b| estimates_from_dos(&dos, b, Some(e0), Some(e0)))
                .collect::<Result<_>>()?;
            (est, None)
        }
        Route::Pt => {
            let options = PtOptions {
                budget_spin_updates: cfg.budget_spin_updates,
                target_e: inst.known_e0(),
                ..PtOptions::default()
            };
            let schedule = cfg.schedule.with_seed(derive_seed(inst.seed(), PT_SEED_SALT));
            let series = pt_run_with(&inst, &ladder, &schedule, &options)?;
            write_samples_csv(&out.join("samples.csv"), &series, hash)?;
            let est = series
                .energies
                .iter()
                .zip(ladder.betas())
                .map(|(es, &b)| estimates_from_samples(es, b, n, inst.known_e0(), inst.known_e0()))
                .collect::<Result<_>>()?;
            let ns = series.n_samples();
            let block = if ns >= MIN_BLOCK_TEST_SAMPLES && ns % 8 == 0 {
                let t = series_thermalization_test(&series, cfg.block_test_max_failing_fraction)?;
                write_json(&out.join("blocktest.json"), &json!({
                    "tool_version": TOOL_VERSION,
                    "config_hash": hash,
                    "block_test": t,
                }))?;
                Some((t.pass, t.failing_fraction))
            } else {
                None
            };
            (est, block)
        }
    };
    write_atomic(&out.join("estimates.json"), estimates_json(&estimates, hash)?.as_bytes())?;
    Ok(RunRecord {
        name: entry.name.clone(),
        size: entry.size,
        n_spins: n,
        route,
        block_test_pass: block.map(|b| b.0),
        block_test_failing_fraction: block.map(|b| b.1),
    })
}

/// Solves or samples every instance and writes per-instance results plus
/// `runs/summary.json`.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let hash = cfg.hash();
    let records = entries(cfg)?
        .par_iter()
        .map(|e| run_one(cfg, &hash, e))
        .collect::<Result<Vec<_>>>()?;
    write_json(&dir(cfg, "runs").join("summary.json"), &json!({
        "tool_version": TOOL_VERSION,
        "config_hash": hash,
        "runs": records,
    }))?;
    Ok(records)
}

/// Per-size median of beta* for one target rule and q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaStarRow {
    pub size_label: String,
    pub n_spins: usize,
    pub delta_rule: DeltaRule,
    pub delta: f64,
    pub q: f64,
    /// `None` when more than half the instances never reach `q` on the ladder.
    pub median_beta_star: Option<f64>,
    /// Median quantization error, `spacing / sqrt(12)` per sampled instance.
    pub median_uncertainty: f64,
    pub n_found: usize,
    pub n_instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub size_label: String,
    pub n_spins: usize,
    pub beta: f64,
    pub median_mean_residual: f64,
    pub median_sigma_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub size_label: String,
    pub n_spins: usize,
    pub beta: f64,
    pub median_c_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub beta_star: Vec<BetaStarRow>,
    pub residuals: Vec<ResidualRow>,
    pub c_beta_curves: Vec<CurveRow>,
}

enum Solved {
    Exact(DensityOfStates),
    Sampled(SampleSeries),
}

struct InstanceSummary {
    size: usize,
    n_spins: usize,
    /// `(beta*, sigma)` per (rule, q) in config order; `None` if not reached.
    beta_star: Vec<Option<(f64, f64)>>,
    c_beta: Vec<f64>,
    residual: Option<(f64, f64, f64)>,
}

fn read_estimates(path: &Path) -> Result<Vec<ThermalEstimates>> {
    let v: serde_json::Value = serde_json::from_str(&read_to_string(path)?)?;
    Ok(serde_json::from_value(v["rungs"].clone())?)
}

fn summarize(cfg: &ExperimentConfig, entry: &InstanceEntry) -> Result<InstanceSummary> {
    let (_, inst) = load_instance(&entry.path)?;
    let run_dir = dir(cfg, "runs").join(&entry.name);
    let dos_path = run_dir.join("dos.json");
    let solved = if dos_path.exists() {
        let v: serde_json::Value = serde_json::from_str(&read_to_string(&dos_path)?)?;
        Solved::Exact(serde_json::from_value(v["dos"].clone())?)
    } else {
        Solved::Sampled(read_samples_csv(&run_dir.join("samples.csv"))?.0)
    };
    // Without a planted or enumerated ground state, the lowest sampled energy stands in.
    let e0 = inst.known_e0().unwrap_or_else(|| match &solved {
        Solved::Exact(d) => d.ground_energy(),
        Solved::Sampled(s) => s.energies.iter().flatten().copied().fold(f64::INFINITY, f64::min),
    });
    let n = inst.n_spins();
    let mut beta_star = Vec::new();
    for rule in &cfg.targets {
        let target = e0 + rule.delta(n);
        for &q in &cfg.q {
            beta_star.push(match &solved {
                Solved::Exact(d) => Some((beta_star_exact(d, target, q)?, 0.0)),
                Solved::Sampled(s) => beta_star_from_ladder(s, target, q)?
                    .map(|b| (b.beta_star, b.uncertainty / 12f64.sqrt())),
            });
        }
    }
    let est = read_estimates(&run_dir.join("estimates.json"))?;
    let ladder = cfg.ladder.build()?;
    let k = ladder.nearest(cfg.residual_beta);
    let residual = est.get(k).map(|e| (ladder.betas()[k], e.mean_e * n as f64 - e0, e.sigma_h));
    Ok(InstanceSummary {
        size: entry.size,
        n_spins: n,
        beta_star,
        c_beta: est.iter().map(|e| e.c_beta).collect(),
        residual,
    })
}

/// Aggregates per-instance results into per-size medians.
pub fn cmd_analyze(cfg: &ExperimentConfig) -> Result<Analysis> {
    cfg.validate()?;
    let hash = cfg.hash();
    let summaries = entries(cfg)?
        .par_iter()
        .map(|e| summarize(cfg, e))
        .collect::<Result<Vec<_>>>()?;
    let mut by_size: BTreeMap<usize, Vec<&InstanceSummary>> = BTreeMap::new();
    for s in &summaries {
        by_size.entry(s.size).or_default().push(s);
    }
    let betas = cfg.ladder.build()?.betas().to_vec();
    let mut analysis = Analysis {
        beta_star: Vec::new(),
        residuals: Vec::new(),
        c_beta_curves: Vec::new(),
    };
    for (&size, group) in &by_size {
        let label = cfg.size_label(size);
        let n_spins = group[0].n_spins;
        let mut col = 0;
        for rule in &cfg.targets {
            for &q in &cfg.q {
                let vals: Vec<f64> = group
                    .iter()
                    .map(|s| s.beta_star[col].map_or(f64::INFINITY, |b| b.0))
                    .collect();
                let errs: Vec<f64> = group.iter().filter_map(|s| s.beta_star[col].map(|b| b.1)).collect();
                let m = median(&vals).filter(|m| m.is_finite());
                analysis.beta_star.push(BetaStarRow {
                    size_label: label.clone(),
                    n_spins,
                    delta_rule: *rule,
                    delta: rule.delta(n_spins),
                    q,
                    median_beta_star: m,
                    median_uncertainty: median(&errs).unwrap_or(0.0),
                    n_found: errs.len(),
                    n_instances: group.len(),
                });
                col += 1;
            }
        }
        for (k, &beta) in betas.iter().enumerate() {
            let cs: Vec<f64> = group.iter().map(|s| s.c_beta[k]).collect();
            analysis.c_beta_curves.push(CurveRow {
                size_label: label.clone(),
                n_spins,
                beta,
                median_c_beta: median(&cs).unwrap_or(f64::NAN),
            });
        }
        let res: Vec<(f64, f64, f64)> = group.iter().filter_map(|s| s.residual).collect();
        if !res.is_empty() {
            analysis.residuals.push(ResidualRow {
                size_label: label.clone(),
                n_spins,
                beta: res[0].0,
                median_mean_residual: median(&res.iter().map(|r| r.1).collect::<Vec<_>>()).unwrap(),
                median_sigma_h: median(&res.iter().map(|r| r.2).collect::<Vec<_>>()).unwrap(),
            });
        }
    }
    let out = dir(cfg, "analysis");
    write_json(&out.join("analysis.json"), &json!({
        "tool_version": TOOL_VERSION,
        "config_hash": hash,
        "analysis": analysis,
    }))?;
    write_csv(&out.join("beta_star.csv"), &hash, &analysis.beta_star)?;
    write_csv(&out.join("residuals.csv"), &hash, &analysis.residuals)?;
    write_csv(&out.join("median_c_beta.csv"), &hash, &analysis.c_beta_curves)?;
    Ok(analysis)
}

#[derive(Serialize)]
struct BetaStarCsvRow<'a> {
    size_label: &'a str,
    n_spins: usize,
    delta_rule: String,
    delta: f64,
    q: f64,
    median_beta_star: Option<f64>,
    median_uncertainty: f64,
    n_found: usize,
    n_instances: usize,
}

trait CsvRow {
    fn write(&self, w: &mut csv::Writer<&mut Vec<u8>>) -> Result<()>;
}

impl CsvRow for BetaStarRow {
    fn write(&self, w: &mut csv::Writer<&mut Vec<u8>>) -> Result<()> {
        Ok(w.serialize(BetaStarCsvRow {
            size_label: &self.size_label,
            n_spins: self.n_spins,
            delta_rule: self.delta_rule.to_string(),
            delta: self.delta,
            q: self.q,
            median_beta_star: self.median_beta_star,
            median_uncertainty: self.median_uncertainty,
            n_found: self.n_found,
            n_instances: self.n_instances,
        })?)
    }
}

impl CsvRow for ResidualRow {
    fn write(&self, w: &mut csv::Writer<&mut Vec<u8>>) -> Result<()> {
        Ok(w.serialize(self)?)
    }
}

impl CsvRow for CurveRow {
    fn write(&self, w: &mut csv::Writer<&mut Vec<u8>>) -> Result<()> {
        Ok(w.serialize(self)?)
    }
}

fn write_csv<T: CsvRow>(path: &Path, hash: &str, rows: &[T]) -> Result<()> {
    let mut buf = format!("# betascale {TOOL_VERSION} config_hash={hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            r.write(&mut w)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    write_atomic(path, &buf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaStarFit {
    pub delta_rule: DeltaRule,
    pub q: f64,
    pub points: Vec<FitPoint>,
    pub log_fit: ScalingFit,
    pub power_fit: ScalingFit,
    pub comparison: ModelComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub beta_star: Vec<BetaStarFit>,
    /// Power fits of the mean residual energy and of its spread.
    pub residual: Option<(ScalingFit, ScalingFit)>,
}

fn read_analysis(cfg: &ExperimentConfig) -> Result<Analysis> {
    let path = dir(cfg, "analysis").join("analysis.json");
    let v: serde_json::Value = serde_json::from_str(&read_to_string(&path)?)?;
    Ok(serde_json::from_value(v["analysis"].clone())?)
}

/// Fits both scaling laws to every (rule, q) table with at least three
/// sizes, plus the residual-energy power laws.
pub fn cmd_fit(cfg: &ExperimentConfig) -> Result<FitSummary> {
    cfg.validate()?;
    let hash = cfg.hash();
    let analysis = read_analysis(cfg)?;
    let out = dir(cfg, "fits");
    let mut summary = FitSummary {
        beta_star: Vec::new(),
        residual: None,
    };
    for rule in &cfg.targets {
        for &q in &cfg.q {
            let mut points: Vec<FitPoint> = analysis
                .beta_star
                .iter()
                .filter(|r| r.delta_rule == *rule && r.q == q)
                .filter_map(|r| {
                    r.median_beta_star.map(|b| {
                        let err = (r.median_uncertainty > 0.0).then_some(r.median_uncertainty);
                        FitPoint::new(r.n_spins as f64, b, err)
                    })
                })
                .collect();
            points.sort_by(|a, b| a.n.total_cmp(&b.n));
            if points.len() < 3 {
                continue;
            }
            let log_fit = fit_log_law(&points)?;
            let power_fit = fit_power_law(&points)?;
            let comparison = compare_models(&log_fit, &power_fit)?;
            let stem = format!("beta_star_{rule}_q{q}");
            write_json(&out.join(format!("{stem}.json")), &json!({
                "tool_version": TOOL_VERSION,
                "config_hash": hash,
                "delta_rule": rule.to_string(),
                "q": q,
                "log_fit": log_fit,
                "power_fit": power_fit,
                "comparison": comparison,
            }))?;
            let mut buf = format!(
                "# betascale {TOOL_VERSION} config_hash={hash}\n# columns: n_spins beta_star err log_fit power_fit\n"
            )
            .into_bytes();
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                w.write_record(["n_spins", "beta_star", "err", "log_fit", "power_fit"])?;
                for p in &points {
                    w.serialize((p.n, p.y, p.y_err.unwrap_or(0.0), log_fit.predict(p.n), power_fit.predict(p.n)))?;
                }
                w.flush().map_err(|e| Error::io(&out, e))?;
            }
            write_atomic(&out.join(format!("{stem}.csv")), &buf)?;
            summary.beta_star.push(BetaStarFit {
                delta_rule: *rule,
                q,
                points,
                log_fit,
                power_fit,
                comparison,
            });
        }
    }
    let res: Vec<ResidualPoint> = analysis
        .residuals
        .iter()
        .map(|r| ResidualPoint {
            n: r.n_spins as f64,
            mean_residual: r.median_mean_residual,
            sigma: r.median_sigma_h,
        })
        .collect();
    let usable = res.len() - usize::from(cfg.exclude_smallest && !res.is_empty());
    if usable >= 3 && res.iter().all(|r| r.mean_residual > 0.0 && r.sigma > 0.0) {
        let (mean_fit, sigma_fit) = residual_scaling(&res, cfg.exclude_smallest)?;
        write_json(&out.join("residual_scaling.json"), &json!({
            "tool_version": TOOL_VERSION,
            "config_hash": hash,
            "exclude_smallest": cfg.exclude_smallest,
            "mean_residual": mean_fit,
            "sigma_h": sigma_fit,
        }))?;
        summary.residual = Some((mean_fit, sigma_fit));
    }
    Ok(summary)
}
