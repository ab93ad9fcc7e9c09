use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fsutil::read_to_string;
use crate::instance::{ClassTag, PlantedParams};
use crate::pt::{geometric_ladder, Ladder, PtSchedule};

/// Offset of the target energy above the ground energy as a function of N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRule {
    Zero,
    Constant(f64),
    /// `round(sqrt(N/2))`
    SqrtHalfN,
    /// `4 + N/32`
    Linear,
}

impl DeltaRule {
    pub fn delta(&self, n_spins: usize) -> f64 {
        let n = n_spins as f64;
        match *self {
            DeltaRule::Zero => 0.0,
            DeltaRule::Constant(k) => k,
            DeltaRule::SqrtHalfN => (n / 2.0).sqrt().round(),
            DeltaRule::Linear => 4.0 + n / 32.0,
        }
    }
}

impl fmt::Display for DeltaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaRule::Zero => write!(f, "zero"),
            DeltaRule::Constant(k) => write!(f, "const{k}"),
            DeltaRule::SqrtHalfN => write!(f, "sqrt"),
            DeltaRule::Linear => write!(f, "linear"),
        }
    }
}

impl std::str::FromStr for DeltaRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(DeltaRule::Zero),
            "sqrt" => Ok(DeltaRule::SqrtHalfN),
            "linear" => Ok(DeltaRule::Linear),
            other => other
                .strip_prefix("const")
                .and_then(|k| k.parse().ok())
                .map(DeltaRule::Constant)
                .ok_or_else(|| Error::Config(format!("unknown delta rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    pub beta_min: f64,
    pub beta_max: f64,
    pub n_rungs: usize,
}

impl LadderSpec {
    pub fn build(&self) -> Result<Ladder> {
        geometric_ladder(self.beta_min, self.beta_max, self.n_rungs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub warmup_swaps: u64,
    pub sweeps_per_swap: u64,
    pub sample_stride_swaps: u64,
    pub n_samples: usize,
}

impl ScheduleSpec {
    pub fn with_seed(&self, seed: u64) -> PtSchedule {
        PtSchedule {
            warmup_swaps: self.warmup_swaps,
            sweeps_per_swap: self.sweeps_per_swap,
            sample_stride_swaps: self.sample_stride_swaps,
            n_samples: self.n_samples,
            seed,
        }
    }
}

/// A complete experiment description. Values come from the built-in
/// defaults, then the JSON config file, then command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub class: ClassTag,
    /// Chimera side length L (N = 8 L^2) for planted and bimodal classes,
    /// spin count N for xorsat3.
    pub sizes: Vec<usize>,
    pub instances_per_size: usize,
    pub seed: u64,
    pub planted: PlantedParams,
    pub ladder: LadderSpec,
    pub schedule: ScheduleSpec,
    pub targets: Vec<DeltaRule>,
    pub q: Vec<f64>,
    /// Instances with at most this many spins are solved by enumeration.
    pub oracle_cap: usize,
    pub output_dir: PathBuf,
    pub budget_spin_updates: f64,
    /// Inverse temperature of the residual-energy scaling table.
    pub residual_beta: f64,
    pub exclude_smallest: bool,
    pub block_test_max_failing_fraction: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = PtSchedule::reference(0);
        ExperimentConfig {
            class: ClassTag::Planted,
            sizes: vec![2, 3, 4],
            instances_per_size: 100,
            seed: 1,
            planted: PlantedParams::default(),
            ladder: LadderSpec {
                beta_min: 0.1,
                beta_max: 5.0,
                n_rungs: 32,
            },
            schedule: ScheduleSpec {
                warmup_swaps: s.warmup_swaps,
                sweeps_per_swap: s.sweeps_per_swap,
                sample_stride_swaps: s.sample_stride_swaps,
                n_samples: s.n_samples,
            },
            targets: vec![DeltaRule::Zero],
            q: vec![0.1],
            oracle_cap: 24,
            output_dir: PathBuf::from("betascale-out"),
            budget_spin_updates: 1e13,
            residual_beta: 1.47,
            exclude_smallest: false,
            block_test_max_failing_fraction: crate::estimators::DEFAULT_MAX_FAILING_FRACTION,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return bad("sizes must be a nonempty list of positive values".into());
        }
        if self.instances_per_size == 0 {
            return bad("instances_per_size must be >= 1".into());
        }
        if let Some(q) = self.q.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return bad(format!("every q must lie in (0,1), got {q}"));
        }
        if self.targets.is_empty() || self.q.is_empty() {
            return bad("targets and q must be nonempty".into());
        }
        if matches!(self.class, ClassTag::Custom) {
            return bad("class must be planted, bimodal or xorsat3".into());
        }
        self.ladder.build().map_err(|e| Error::Config(e.to_string()))?;
        self.schedule
            .with_seed(0)
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn n_spins(&self, size: usize) -> usize {
        match self.class {
            ClassTag::Xorsat3 => size,
            _ => 8 * size * size,
        }
    }

    pub fn size_label(&self, size: usize) -> String {
        match self.class {
            ClassTag::Xorsat3 => format!("N{size}"),
            _ => format!("L{size}"),
        }
    }

    /// Hex SHA-256 of the canonical JSON of this config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
