//! Sampler validation against exhaustive enumeration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::estimates_from_samples;
use crate::instance::{build_chimera, generate_bimodal, generate_planted, generate_xorsat3, Instance, PlantedParams};
use crate::oracle::{enumerate_dos, thermo_from_dos, DensityOfStates};
use crate::pt::{geometric_ladder, pt_run, Ladder, PtSchedule};
use crate::rng::derive_seed;

/// Allowed deviation in combined standard errors.
pub const N_SIGMA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RungCheck {
    pub beta: f64,
    pub exact_mean_e: f64,
    pub sampled_mean_e: f64,
    pub mean_e_tolerance: f64,
    pub exact_c_beta: f64,
    pub sampled_c_beta: f64,
    pub c_beta_tolerance: f64,
    pub mean_ok: bool,
    pub c_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub instance_hash: String,
    pub class_tag: String,
    pub n_spins: usize,
    pub rungs: Vec<RungCheck>,
    pub pass: bool,
}

fn min_level_spacing(dos: &DensityOfStates) -> f64 {
    dos.levels()
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(f64::INFINITY, f64::min)
}

/// Runs PT on `instance` and checks every rung's mean energy and specific
/// heat against the exact values. The tolerance is `N_SIGMA` blocking
/// errors, widened in quadrature by the resolution of `n` discrete samples
/// (one sample moved by the smallest level spacing), which only matters
/// on rungs where every sample sits on the same level.
pub fn compare_with_oracle(instance: &Instance, ladder: &Ladder, schedule: &PtSchedule) -> Result<OracleComparison> {
    let dos = enumerate_dos(instance)?;
    let series = pt_run(instance, ladder, schedule)?;
    let n = instance.n_spins() as f64;
    let de = min_level_spacing(&dos);
    let rungs = series
        .energies
        .iter()
        .zip(ladder.betas())
        .map(|(es, &beta)| {
            let est = estimates_from_samples(es, beta, instance.n_spins(), None, None)?;
            let exact = thermo_from_dos(&dos, beta, f64::NEG_INFINITY)?;
            let m = es.len() as f64;
            let floor_mean = de / (n * m);
            let floor_c = de * de / (n * m);
            let mean_e_tolerance = N_SIGMA * est.mean_e_stderr.hypot(floor_mean);
            let c_beta_tolerance = N_SIGMA * est.c_beta_stderr.hypot(floor_c);
            Ok(RungCheck {
                beta,
                exact_mean_e: exact.mean_e,
                sampled_mean_e: est.mean_e,
                mean_e_tolerance,
                exact_c_beta: exact.c_beta,
                sampled_c_beta: est.c_beta,
                c_beta_tolerance,
                mean_ok: (est.mean_e - exact.mean_e).abs() <= mean_e_tolerance,
                c_ok: (est.c_beta - exact.c_beta).abs() <= c_beta_tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleComparison {
        instance_hash: instance.content_hash(),
        class_tag: instance.class_tag().to_string(),
        n_spins: instance.n_spins(),
        pass: rungs.iter().all(|r| r.mean_ok && r.c_ok),
        rungs,
    })
}

/// Ten small instances: four bimodal (N=16), four planted (N=16 and 24)
/// and two 3-regular 3-XORSAT (N=12).
pub fn selftest_instances(master_seed: u64) -> Result<Vec<Instance>> {
    let c2 = build_chimera(1, 2)?;
    let c3 = build_chimera(1, 3)?;
    let seed = |k: u64| derive_seed(master_seed, k);
    let planted = PlantedParams::default();
    Ok(vec![
        generate_bimodal(&c2, seed(0))?,
        generate_bimodal(&c2, seed(1))?,
        generate_bimodal(&c2, seed(2))?,
        generate_bimodal(&c2, seed(3))?,
        generate_planted(&c2, &planted, seed(4))?,
        generate_planted(&c2, &planted, seed(5))?,
        generate_planted(&c3, &planted, seed(6))?,
        generate_planted(&c3, &planted, seed(7))?,
        generate_xorsat3(12, seed(8))?,
        generate_xorsat3(12, seed(9))?,
    ])
}

pub fn selftest_ladder() -> Ladder {
    geometric_ladder(0.1, 3.0, 8).expect("valid ladder")
}

pub fn selftest_schedule(seed: u64) -> PtSchedule {
    PtSchedule {
        warmup_swaps: 5_000,
        sweeps_per_swap: 1,
        sample_stride_swaps: 2,
        n_samples: 100_000,
        seed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub master_seed: u64,
    pub comparisons: Vec<OracleComparison>,
    pub pass: bool,
}

pub fn run_selftest(master_seed: u64) -> Result<SelftestReport> {
    let instances = selftest_instances(master_seed)?;
    let ladder = selftest_ladder();
    let comparisons = instances
        .par_iter()
        .enumerate()
        .map(|(k, inst)| {
            compare_with_oracle(inst, &ladder, &selftest_schedule(derive_seed(master_seed, 1000 + k as u64)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SelftestReport {
        master_seed,
        pass: comparisons.iter().all(|c| c.pass),
        comparisons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_shape() {
        let insts = selftest_instances(1).unwrap();
        assert_eq!(insts.len(), 10);
        assert!(insts.iter().all(|i| i.n_spins() <= 24));
        assert_eq!(insts.iter().filter(|i| i.n_spins() == 12).count(), 2);
    }

    #[test]
    fn small_comparison_runs() {
        let inst = &selftest_instances(2).unwrap()[0];
        let ladder = geometric_ladder(0.2, 2.0, 4).unwrap();
        let sched = PtSchedule {
            n_samples: 4_000,
            ..selftest_schedule(3)
        };
        let cmp = compare_with_oracle(inst, &ladder, &sched).unwrap();
        assert_eq!(cmp.rungs.len(), 4);
        assert!(cmp.rungs.iter().all(|r| r.mean_e_tolerance > 0.0 && r.c_beta_tolerance > 0.0));
    }
}
