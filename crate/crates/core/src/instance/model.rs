use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};

/// Largest admissible |coefficient| of a single term. Planted instances may
/// stack two loop couplings on one edge, hence 2 rather than 1.
pub const MAX_COUPLING: f64 = 2.0;

/// Configuration of N Ising spins, each +1 or -1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(pos) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidConfig(format!(
                "spin {pos} is {}, expected +1 or -1",
                spins[pos]
            )));
        }
        Ok(SpinConfig(spins))
    }

    pub fn all_up(n: usize) -> Self {
        SpinConfig(vec![1; n])
    }

    pub fn all_down(n: usize) -> Self {
        SpinConfig(vec![-1; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        SpinConfig((0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
    }

    /// Spin `i` is -1 iff bit `i` of `bits` is set.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        SpinConfig((0..n).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    /// Elementwise product, the action of a gauge on a configuration.
    pub fn product(&self, other: &SpinConfig) -> Result<SpinConfig> {
        if self.len() != other.len() {
            return Err(Error::InvalidConfig(format!(
                "length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(SpinConfig(
            self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect(),
        ))
    }
}

impl TryFrom<Vec<i8>> for SpinConfig {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        SpinConfig::new(v)
    }
}

impl From<SpinConfig> for Vec<i8> {
    fn from(c: SpinConfig) -> Self {
        c.0
    }
}

/// One k-local term `coefficient * prod_{i in support} s_i`, k in 1..=3.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    support: Vec<usize>,
    coefficient: f64,
}

impl Term {
    pub fn new(mut support: Vec<usize>, coefficient: f64) -> Result<Self> {
        support.sort_unstable();
        if support.is_empty() || support.len() > 3 {
            return Err(Error::InvalidTerm(format!(
                "arity {} not in 1..=3",
                support.len()
            )));
        }
        if support.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTerm(format!("repeated index in {support:?}")));
        }
        if !coefficient.is_finite() || coefficient.abs() > MAX_COUPLING {
            return Err(Error::InvalidTerm(format!(
                "coefficient {coefficient} outside [-{MAX_COUPLING}, {MAX_COUPLING}]"
            )));
        }
        Ok(Term {
            support,
            coefficient,
        })
    }

    pub fn field(i: usize, h: f64) -> Result<Self> {
        Term::new(vec![i], h)
    }

    pub fn coupling(i: usize, j: usize, j_ij: f64) -> Result<Self> {
        Term::new(vec![i, j], j_ij)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn arity(&self) -> usize {
        self.support.len()
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn value(&self, spins: &[i8]) -> f64 {
        let sign: i32 = self.support.iter().map(|&i| spins[i] as i32).product();
        self.coefficient * sign as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassTag {
    Planted,
    Bimodal,
    Xorsat3,
    Custom,
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClassTag::Planted => "planted",
            ClassTag::Bimodal => "bimodal",
            ClassTag::Xorsat3 => "xorsat3",
            ClassTag::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ClassTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "planted" => Ok(ClassTag::Planted),
            "bimodal" => Ok(ClassTag::Bimodal),
            "xorsat3" => Ok(ClassTag::Xorsat3),
            "custom" => Ok(ClassTag::Custom),
            other => Err(Error::Config(format!("unknown instance class '{other}'"))),
        }
    }
}

/// A Hamiltonian `H = sum_t c_t prod_{i in t} s_i` over `n_spins` spins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    n_spins: usize,
    terms: Vec<Term>,
    class_tag: ClassTag,
    seed: u64,
    planted_config: Option<SpinConfig>,
    known_e0: Option<f64>,
    known_gap: Option<f64>,
}

impl Instance {
    pub fn new(n_spins: usize, terms: Vec<Term>, class_tag: ClassTag, seed: u64) -> Result<Self> {
        let inst = Instance {
            n_spins,
            terms,
            class_tag,
            seed,
            planted_config: None,
            known_e0: None,
            known_gap: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Records a configuration known to reach the ground energy `e0`.
    pub fn with_planted(mut self, config: SpinConfig, e0: f64) -> Result<Self> {
        self.planted_config = Some(config);
        self.known_e0 = Some(e0);
        self.validate()?;
        Ok(self)
    }

    pub fn with_known_e0(mut self, e0: f64) -> Self {
        self.known_e0 = Some(e0);
        self
    }

    pub fn with_known_gap(mut self, gap: f64) -> Self {
        self.known_gap = Some(gap);
        self
    }

    fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if let Some(&last) = t.support.last() {
                if last >= self.n_spins {
                    return Err(Error::InvalidInstance(format!(
                        "term support {:?} exceeds {} spins",
                        t.support, self.n_spins
                    )));
                }
            }
        }
        if self.class_tag == ClassTag::Xorsat3
            && self
                .terms
                .iter()
                .any(|t| t.arity() != 3 || t.coefficient != 1.0)
        {
            return Err(Error::InvalidInstance(
                "xorsat3 instances need arity-3 terms with coefficient +1".into(),
            ));
        }
        if let Some(cfg) = &self.planted_config {
            if cfg.len() != self.n_spins {
                return Err(Error::InvalidInstance(format!(
                    "planted config has {} spins, instance has {}",
                    cfg.len(),
                    self.n_spins
                )));
            }
            let e0 = self.known_e0.ok_or_else(|| {
                Error::InvalidInstance("planted config without known_e0".into())
            })?;
            let e = self.energy_unchecked(cfg.spins());
            if (e - e0).abs() > 1e-9 * e0.abs().max(1.0) {
                return Err(Error::InvalidInstance(format!(
                    "planted config has energy {e}, known_e0 is {e0}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn class_tag(&self) -> ClassTag {
        self.class_tag
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn planted_config(&self) -> Option<&SpinConfig> {
        self.planted_config.as_ref()
    }

    pub fn known_e0(&self) -> Option<f64> {
        self.known_e0
    }

    pub fn known_gap(&self) -> Option<f64> {
        self.known_gap
    }

    pub fn max_arity(&self) -> usize {
        self.terms.iter().map(Term::arity).max().unwrap_or(0)
    }

    pub fn energy(&self, config: &SpinConfig) -> Result<f64> {
        if config.len() != self.n_spins {
            return Err(Error::InvalidConfig(format!(
                "config has {} spins, instance has {}",
                config.len(),
                self.n_spins
            )));
        }
        Ok(self.energy_unchecked(config.spins()))
    }

    pub(crate) fn energy_unchecked(&self, spins: &[i8]) -> f64 {
        self.terms.iter().map(|t| t.value(spins)).sum()
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("instance serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `sum_t coefficient(t) * prod_{i in support(t)} s_i`.
pub fn energy(instance: &Instance, config: &SpinConfig) -> Result<f64> {
    instance.energy(config)
}

/// Relabels `s_i -> g_i s_i`. Couplings pick up `g_i g_j`, fields `g_i`;
/// the spectrum is unchanged. Defined for arities 1 and 2 only.
pub fn gauge_transform(instance: &Instance, gauge: &SpinConfig) -> Result<Instance> {
    if gauge.len() != instance.n_spins {
        return Err(Error::InvalidConfig(format!(
            "gauge has {} spins, instance has {}",
            gauge.len(),
            instance.n_spins
        )));
    }
    if instance.terms.iter().any(|t| t.arity() == 3) {
        return Err(Error::UnsupportedTransform(
            "gauge transform of 3-body terms is not supported".into(),
        ));
    }
    let terms = instance
        .terms
        .iter()
        .map(|t| {
            let sign: i32 = t.support.iter().map(|&i| gauge.get(i) as i32).product();
            Term {
                support: t.support.clone(),
                coefficient: t.coefficient * sign as f64,
            }
        })
        .collect();
    let planted_config = match &instance.planted_config {
        Some(c) => Some(c.product(gauge)?),
        None => None,
    };
    let out = Instance {
        terms,
        planted_config,
        ..instance.clone()
    };
    out.validate()?;
    Ok(out)
}

pub fn random_gauge(n: usize, seed: u64) -> SpinConfig {
    SpinConfig::random(n, &mut stream_rng(seed, streams::GAUGE))
}

#[derive(Serialize, Deserialize)]
struct TermFile {
    support: Vec<usize>,
    coeff: String,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n_spins: usize,
    class_tag: ClassTag,
    seed: u64,
    terms: Vec<TermFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    planted_config: Option<SpinConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    known_e0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    known_gap: Option<f64>,
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;
    fn try_from(f: InstanceFile) -> Result<Self> {
        let terms = f
            .terms
            .into_iter()
            .map(|t| {
                let c: f64 = t.coeff.trim().parse().map_err(|_| {
                    Error::InvalidTerm(format!("coefficient '{}' is not a number", t.coeff))
                })?;
                Term::new(t.support, c)
            })
            .collect::<Result<Vec<_>>>()?;
        let inst = Instance {
            n_spins: f.n_spins,
            terms,
            class_tag: f.class_tag,
            seed: f.seed,
            planted_config: f.planted_config,
            known_e0: f.known_e0,
            known_gap: f.known_gap,
        };
        inst.validate()?;
        Ok(inst)
    }
}

impl From<Instance> for InstanceFile {
    fn from(i: Instance) -> Self {
        InstanceFile {
            n_spins: i.n_spins,
            class_tag: i.class_tag,
            seed: i.seed,
            // f64 Display is the shortest decimal that round-trips exactly.
            terms: i
                .terms
                .into_iter()
                .map(|t| TermFile {
                    support: t.support,
                    coeff: t.coefficient.to_string(),
                })
                .collect(),
            planted_config: i.planted_config,
            known_e0: i.known_e0,
            known_gap: i.known_gap,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_spin_fm() -> Instance {
        Instance::new(2, vec![Term::coupling(0, 1, -1.0).unwrap()], ClassTag::Custom, 0).unwrap()
    }

    #[test]
    fn ferromagnetic_pair_energy() {
        let inst = two_spin_fm();
        let up = SpinConfig::new(vec![1, 1]).unwrap();
        assert_eq!(energy(&inst, &up).unwrap(), -1.0);
        let mixed = SpinConfig::new(vec![1, -1]).unwrap();
        assert_eq!(energy(&inst, &mixed).unwrap(), 1.0);
    }

    #[test]
    fn energy_length_mismatch() {
        let inst = two_spin_fm();
        assert!(matches!(
            energy(&inst, &SpinConfig::all_up(3)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn spin_config_rejects_zero() {
        assert!(SpinConfig::new(vec![1, 0, -1]).is_err());
    }

    #[test]
    fn term_validation() {
        assert!(Term::new(vec![], 1.0).is_err());
        assert!(Term::new(vec![0, 1, 2, 3], 1.0).is_err());
        assert!(Term::new(vec![1, 1], 1.0).is_err());
        assert!(Term::new(vec![0, 1], 2.5).is_err());
        assert!(Term::new(vec![0, 1], f64::NAN).is_err());
        assert_eq!(Term::new(vec![2, 0, 1], 1.0).unwrap().support(), &[0, 1, 2]);
    }

    #[test]
    fn support_out_of_range() {
        let t = Term::coupling(0, 5, 1.0).unwrap();
        assert!(Instance::new(3, vec![t], ClassTag::Custom, 0).is_err());
    }

    #[test]
    fn identity_gauge() {
        let inst = two_spin_fm();
        let g = gauge_transform(&inst, &SpinConfig::all_up(2)).unwrap();
        assert_eq!(g, inst);
    }

    #[test]
    fn gauge_flips_coupling_and_keeps_ground_energy() {
        let inst = two_spin_fm();
        let gauge = SpinConfig::new(vec![1, -1]).unwrap();
        let g = gauge_transform(&inst, &gauge).unwrap();
        assert_eq!(g.terms()[0].coefficient(), 1.0);
        let ground = |i: &Instance| {
            (0..4u64)
                .map(|b| i.energy(&SpinConfig::from_bits(2, b)).unwrap())
                .fold(f64::INFINITY, f64::min)
        };
        assert_eq!(ground(&inst), ground(&g));
    }

    #[test]
    fn gauge_rejects_three_body() {
        let t = Term::new(vec![0, 1, 2], 1.0).unwrap();
        let inst = Instance::new(3, vec![t], ClassTag::Custom, 0).unwrap();
        assert!(matches!(
            gauge_transform(&inst, &SpinConfig::all_up(3)),
            Err(Error::UnsupportedTransform(_))
        ));
    }

    #[test]
    fn planted_energy_is_checked() {
        let inst = two_spin_fm();
        assert!(inst
            .clone()
            .with_planted(SpinConfig::all_up(2), -1.0)
            .is_ok());
        assert!(inst.with_planted(SpinConfig::all_up(2), -3.0).is_err());
    }

    #[test]
    fn json_uses_decimal_strings() {
        let inst = Instance::new(
            2,
            vec![
                Term::coupling(0, 1, -1.0).unwrap(),
                Term::field(1, 0.1).unwrap(),
            ],
            ClassTag::Custom,
            9,
        )
        .unwrap();
        let json = inst.to_json_pretty().unwrap();
        assert!(json.contains("\"coeff\": \"-1\""));
        assert!(json.contains("\"coeff\": \"0.1\""));
        assert_eq!(Instance::from_json(&json).unwrap(), inst);
    }

    #[test]
    fn json_rejects_invalid_planted_energy() {
        let json = r#"{"n_spins":2,"class_tag":"custom","seed":0,
            "terms":[{"support":[0,1],"coeff":"-1"}],
            "planted_config":[1,1],"known_e0":-2}"#;
        assert!(Instance::from_json(json).is_err());
    }
}
