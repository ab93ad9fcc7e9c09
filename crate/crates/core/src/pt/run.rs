use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ladder::Ladder;
use super::sweep::{AcceptTable, Sweeper};
use crate::error::{Error, Result};
use crate::instance::{Instance, SpinConfig};
use crate::oracle::thermo::at_or_below;
use crate::rng::{stream_rng, streams, StreamRng};

/// Timing of a parallel tempering run, in swap rounds. Each round is
/// `sweeps_per_swap` Metropolis sweeps of every replica followed by one
/// swap step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PtSchedule {
    pub warmup_swaps: u64,
    pub sweeps_per_swap: u64,
    pub sample_stride_swaps: u64,
    pub n_samples: usize,
    pub seed: u64,
}

impl PtSchedule {
    /// 5e5 warmup swaps, 10 sweeps per swap, one sample every 50 swaps,
    /// 1e4 samples.
    pub fn reference(seed: u64) -> Self {
        PtSchedule {
            warmup_swaps: 500_000,
            sweeps_per_swap: 10,
            sample_stride_swaps: 50,
            n_samples: 10_000,
            seed,
        }
    }

    /// Reference schedule with the warmup used for the largest planted sizes.
    pub fn reference_planted_large(seed: u64) -> Self {
        PtSchedule {
            warmup_swaps: 2_000_000,
            ..Self::reference(seed)
        }
    }

    pub fn reference_bimodal(seed: u64) -> Self {
        PtSchedule {
            warmup_swaps: 24_000_000,
            ..Self::reference(seed)
        }
    }

    pub fn reference_xorsat(seed: u64) -> Self {
        PtSchedule {
            warmup_swaps: 200_000_000,
            ..Self::reference(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.warmup_swaps == 0
            || self.sweeps_per_swap == 0
            || self.sample_stride_swaps == 0
            || self.n_samples == 0
        {
            return Err(Error::Domain("all schedule counts must be >= 1".into()));
        }
        Ok(())
    }

    pub fn total_rounds(&self) -> u64 {
        self.warmup_swaps + self.n_samples as u64 * self.sample_stride_swaps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtOptions {
    /// Refuse runs needing more single-spin updates than this.
    pub budget_spin_updates: f64,
    /// Energy counted by `ground_hits`; defaults to the instance's known E0.
    pub target_e: Option<f64>,
    pub keep_final_configs: bool,
    /// Sweeps between full energy recomputations.
    pub drift_check_interval: u64,
    pub parallel: bool,
}

impl Default for PtOptions {
    fn default() -> Self {
        PtOptions {
            budget_spin_updates: 1e13,
            target_e: None,
            keep_final_configs: false,
            drift_check_interval: 1_000,
            parallel: true,
        }
    }
}

const DRIFT_TOLERANCE: f64 = 1e-6;

/// A configuration travelling through the ladder together with its energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Replica {
    spins: Vec<i32>,
    energy: f64,
}

impl Replica {
    pub fn new(instance: &Instance, config: &SpinConfig) -> Result<Self> {
        let energy = instance.energy(config)?;
        let mut spins: Vec<i32> = config.spins().iter().map(|&s| s as i32).collect();
        spins.push(1);
        Ok(Replica { spins, energy })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn config(&self) -> SpinConfig {
        let n = self.spins.len() - 1;
        SpinConfig::new(self.spins[..n].iter().map(|&s| s as i8).collect())
            .expect("replica spins are +-1")
    }
}

/// Outcome of one swap step; entry `i` concerns the pair `(i, i+1)` and is
/// `None` when that pair was not proposed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapRecord {
    pub pairs: Vec<Option<bool>>,
}

/// Proposes exchanges between adjacent rungs: pairs `(0,1), (2,3), ...`
/// when `round` is even and `(1,2), (3,4), ...` when odd. Pair `(i, i+1)`
/// is exchanged with probability
/// `min(1, exp[(beta_{i+1} - beta_i)(E_{i+1} - E_i)])`.
pub fn swap_step<R: Rng + ?Sized>(
    replicas: &mut [Replica],
    ladder: &Ladder,
    round: u64,
    rng: &mut R,
) -> Result<SwapRecord> {
    let n = ladder.len();
    if replicas.len() != n {
        return Err(Error::Domain(format!(
            "{} replicas for a ladder of {n} rungs",
            replicas.len()
        )));
    }
    let betas = ladder.betas();
    let mut pairs = vec![None; n.saturating_sub(1)];
    let mut i = (round % 2) as usize;
    while i + 1 < n {
        let x = (betas[i + 1] - betas[i]) * (replicas[i + 1].energy - replicas[i].energy);
        let accept = x >= 0.0 || rng.gen::<f64>() < x.exp();
        if accept {
            replicas.swap(i, i + 1);
        }
        pairs[i] = Some(accept);
        i += 2;
    }
    Ok(SwapRecord { pairs })
}

/// Energies sampled at every rung of a parallel tempering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSeries {
    pub n_spins: usize,
    pub betas: Vec<f64>,
    /// `energies[rung][k]` is the k-th recorded extensive energy.
    pub energies: Vec<Vec<f64>>,
    /// Accepted fraction of proposed swaps for each adjacent pair.
    pub swap_accept: Vec<f64>,
    pub target_e: Option<f64>,
    pub ground_hits: Option<Vec<usize>>,
    pub schedule: PtSchedule,
    pub instance_hash: String,
    #[serde(skip)]
    pub final_configs: Option<Vec<SpinConfig>>,
}

impl SampleSeries {
    pub fn n_rungs(&self) -> usize {
        self.betas.len()
    }

    pub fn n_samples(&self) -> usize {
        self.energies.first().map_or(0, Vec::len)
    }

    pub fn ladder(&self) -> Result<Ladder> {
        Ladder::new(self.betas.clone())
    }
}

pub fn pt_run(instance: &Instance, ladder: &Ladder, schedule: &PtSchedule) -> Result<SampleSeries> {
    pt_run_with(instance, ladder, schedule, &PtOptions::default())
}

pub fn pt_run_with(
    instance: &Instance,
    ladder: &Ladder,
    schedule: &PtSchedule,
    options: &PtOptions,
) -> Result<SampleSeries> {
    schedule.validate()?;
    let n = instance.n_spins();
    let n_rungs = ladder.len();
    let rounds = schedule.total_rounds();
    let work = n as f64 * n_rungs as f64 * schedule.sweeps_per_swap as f64 * rounds as f64;
    if work > options.budget_spin_updates {
        return Err(Error::Refused(format!(
            "run needs {work:.3e} spin updates, budget is {:.3e}",
            options.budget_spin_updates
        )));
    }

    let sweeper = Sweeper::new(instance);
    let tables: Vec<AcceptTable> = ladder.betas().iter().map(|&b| sweeper.table(b)).collect();
    let mut init_rng = stream_rng(schedule.seed, streams::PT_INIT);
    let mut replicas = (0..n_rungs)
        .map(|_| Replica::new(instance, &SpinConfig::random(n, &mut init_rng)))
        .collect::<Result<Vec<_>>>()?;
    let mut slots: Vec<Slot> = (0..n_rungs)
        .map(|i| Slot {
            rng: stream_rng(schedule.seed, streams::PT_RUNG_BASE + i as u64),
            sweeps: 0,
        })
        .collect();
    let mut swap_rng = stream_rng(schedule.seed, streams::PT_SWAP);
    let mut proposed = vec![0u64; n_rungs.saturating_sub(1)];
    let mut accepted = vec![0u64; n_rungs.saturating_sub(1)];
    let mut energies = vec![Vec::with_capacity(schedule.n_samples); n_rungs];

    let parallel = options.parallel && n as u64 * schedule.sweeps_per_swap >= 256;
    let sweep_slot = |(k, (replica, slot)): (usize, (&mut Replica, &mut Slot))| {
        for _ in 0..schedule.sweeps_per_swap {
            sweeper.sweep(&mut replica.spins, &mut replica.energy, &tables[k], &mut slot.rng);
            slot.sweeps += 1;
            if slot.sweeps % options.drift_check_interval == 0 {
                let exact = sweeper.energy(&replica.spins);
                let drift = (exact - replica.energy).abs();
                assert!(
                    drift <= DRIFT_TOLERANCE && !replica.energy.is_nan(),
                    "energy drift {drift:e} at rung {k} exceeds {DRIFT_TOLERANCE:e}"
                );
                replica.energy = exact;
            }
        }
    };

    for round in 0..rounds {
        if parallel {
            replicas
                .par_iter_mut()
                .zip(slots.par_iter_mut())
                .enumerate()
                .for_each(sweep_slot);
        } else {
            replicas
                .iter_mut()
                .zip(slots.iter_mut())
                .enumerate()
                .for_each(sweep_slot);
        }
        let record = swap_step(&mut replicas, ladder, round, &mut swap_rng)?;
        for (i, outcome) in record.pairs.iter().enumerate() {
            if let Some(a) = outcome {
                proposed[i] += 1;
                accepted[i] += *a as u64;
            }
        }
        if round >= schedule.warmup_swaps
            && (round - schedule.warmup_swaps + 1).is_multiple_of(schedule.sample_stride_swaps)
        {
            for (k, r) in replicas.iter().enumerate() {
                assert!(!r.energy.is_nan(), "NaN energy at rung {k}");
                energies[k].push(r.energy);
            }
        }
    }

    let target_e = options.target_e.or(instance.known_e0());
    let ground_hits = target_e.map(|t| {
        energies
            .iter()
            .map(|es| es.iter().filter(|&&e| at_or_below(e, t)).count())
            .collect()
    });
    let swap_accept = proposed
        .iter()
        .zip(&accepted)
        .map(|(&p, &a)| if p == 0 { 0.0 } else { a as f64 / p as f64 })
        .collect();
    Ok(SampleSeries {
        n_spins: n,
        betas: ladder.betas().to_vec(),
        energies,
        swap_accept,
        target_e,
        ground_hits,
        schedule: *schedule,
        instance_hash: instance.content_hash(),
        final_configs: options
            .keep_final_configs
            .then(|| replicas.iter().map(Replica::config).collect()),
    })
}

struct Slot {
    rng: StreamRng,
    sweeps: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{build_chimera, generate_bimodal, ClassTag, Term};
    use crate::pt::geometric_ladder;

    fn small_schedule(seed: u64) -> PtSchedule {
        PtSchedule {
            warmup_swaps: 100,
            sweeps_per_swap: 2,
            sample_stride_swaps: 2,
            n_samples: 200,
            seed,
        }
    }

    fn two_level() -> Instance {
        Instance::new(1, vec![Term::field(0, 0.5).unwrap()], ClassTag::Custom, 0).unwrap()
    }

    #[test]
    fn equal_energies_always_swap() {
        let inst = two_level();
        let ladder = Ladder::new(vec![0.5, 1.0]).unwrap();
        let cfg = SpinConfig::all_up(1);
        let mut reps = vec![Replica::new(&inst, &cfg).unwrap(), Replica::new(&inst, &cfg).unwrap()];
        let mut rng = stream_rng(0, 0);
        for _ in 0..100 {
            let rec = swap_step(&mut reps, &ladder, 0, &mut rng).unwrap();
            assert_eq!(rec.pairs, vec![Some(true)]);
        }
    }

    #[test]
    fn colder_rung_takes_lower_energy() {
        let inst = two_level();
        let ladder = Ladder::new(vec![0.5, 1.0]).unwrap();
        let low = Replica::new(&inst, &SpinConfig::all_down(1)).unwrap();
        let high = Replica::new(&inst, &SpinConfig::all_up(1)).unwrap();
        let mut rng = stream_rng(0, 0);
        for _ in 0..100 {
            // cold rung (index 1) holds the lower energy after any exchange
            let mut reps = vec![low.clone(), high.clone()];
            swap_step(&mut reps, &ladder, 0, &mut rng).unwrap();
            assert_eq!(reps[0].energy(), 0.5);
            assert_eq!(reps[1].energy(), -0.5);
        }
    }

    #[test]
    fn swap_alternates_parity_and_preserves_multiset() {
        let g = build_chimera(1, 1).unwrap();
        let inst = generate_bimodal(&g, 1).unwrap();
        let ladder = geometric_ladder(0.2, 2.0, 5).unwrap();
        let mut rng = stream_rng(1, 0);
        let mut reps: Vec<Replica> = (0..5)
            .map(|_| Replica::new(&inst, &SpinConfig::random(8, &mut rng)).unwrap())
            .collect();
        let mut before: Vec<Vec<i8>> = reps.iter().map(|r| r.config().spins().to_vec()).collect();
        let even = swap_step(&mut reps, &ladder, 0, &mut rng).unwrap();
        assert!(even.pairs[0].is_some() && even.pairs[1].is_none() && even.pairs[2].is_some());
        let odd = swap_step(&mut reps, &ladder, 1, &mut rng).unwrap();
        assert!(odd.pairs[0].is_none() && odd.pairs[1].is_some() && odd.pairs[3].is_some());
        let mut after: Vec<Vec<i8>> = reps.iter().map(|r| r.config().spins().to_vec()).collect();
        before.sort();
        after.sort();
        assert_eq!(before, after);
        for r in &reps {
            assert_eq!(r.energy(), inst.energy(&r.config()).unwrap());
        }
    }

    #[test]
    fn length_mismatch() {
        let inst = two_level();
        let ladder = Ladder::new(vec![0.5, 1.0, 2.0]).unwrap();
        let mut reps = vec![Replica::new(&inst, &SpinConfig::all_up(1)).unwrap()];
        assert!(swap_step(&mut reps, &ladder, 0, &mut stream_rng(0, 0)).is_err());
    }

    #[test]
    fn runs_are_reproducible_and_parallelism_independent() {
        let g = build_chimera(2, 2).unwrap();
        let inst = generate_bimodal(&g, 3).unwrap();
        let ladder = geometric_ladder(0.2, 3.0, 6).unwrap();
        let s = small_schedule(9);
        let a = pt_run(&inst, &ladder, &s).unwrap();
        let b = pt_run(&inst, &ladder, &s).unwrap();
        let serial = pt_run_with(&inst, &ladder, &s, &PtOptions { parallel: false, ..Default::default() })
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a, serial);
        assert_eq!(a.n_samples(), 200);
        assert!(a.swap_accept.iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert!(a.swap_accept.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn budget_refusal() {
        let inst = two_level();
        let ladder = Ladder::new(vec![1.0]).unwrap();
        let opts = PtOptions {
            budget_spin_updates: 10.0,
            ..Default::default()
        };
        assert!(matches!(
            pt_run_with(&inst, &ladder, &small_schedule(0), &opts),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn zero_counts_rejected() {
        let inst = two_level();
        let ladder = Ladder::new(vec![1.0]).unwrap();
        let mut s = small_schedule(0);
        s.sample_stride_swaps = 0;
        assert!(pt_run(&inst, &ladder, &s).is_err());
    }

    #[test]
    fn final_configs_match_last_energies() {
        let g = build_chimera(1, 1).unwrap();
        let inst = generate_bimodal(&g, 2).unwrap();
        let ladder = geometric_ladder(0.3, 3.0, 4).unwrap();
        let opts = PtOptions {
            keep_final_configs: true,
            ..Default::default()
        };
        let s = pt_run_with(&inst, &ladder, &small_schedule(5), &opts).unwrap();
        let cfgs = s.final_configs.as_ref().unwrap();
        for (k, c) in cfgs.iter().enumerate() {
            assert_eq!(inst.energy(c).unwrap(), *s.energies[k].last().unwrap());
        }
    }
}
