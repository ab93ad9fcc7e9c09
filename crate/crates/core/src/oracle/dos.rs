use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Compiled;
use crate::instance::{Instance, SpinConfig};

pub const DEFAULT_MAX_SPINS: usize = 26;

/// Bits enumerated by each parallel chunk are the low `n - HIGH_BITS`.
const HIGH_BITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, u64)", into = "(f64, u64)")]
pub struct Level {
    pub energy: f64,
    pub degeneracy: u64,
}

impl From<(f64, u64)> for Level {
    fn from((energy, degeneracy): (f64, u64)) -> Self {
        Level { energy, degeneracy }
    }
}

impl From<Level> for (f64, u64) {
    fn from(l: Level) -> Self {
        (l.energy, l.degeneracy)
    }
}

/// Exact energy levels `E_n` with degeneracies `g_n`, `sum g_n = 2^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DosFile")]
pub struct DensityOfStates {
    n_spins: usize,
    levels: Vec<Level>,
}

#[derive(Deserialize)]
struct DosFile {
    n_spins: usize,
    levels: Vec<Level>,
}

impl TryFrom<DosFile> for DensityOfStates {
    type Error = Error;
    fn try_from(f: DosFile) -> Result<Self> {
        DensityOfStates::new(f.n_spins, f.levels)
    }
}

impl DensityOfStates {
    pub fn new(n_spins: usize, levels: Vec<Level>) -> Result<Self> {
        if n_spins > 63 {
            return Err(Error::Domain(format!("{n_spins} spins exceed the u64 state count")));
        }
        if levels.is_empty() {
            return Err(Error::Domain("density of states has no levels".into()));
        }
        if levels.windows(2).any(|w| !(w[0].energy < w[1].energy)) {
            return Err(Error::Domain("level energies must be strictly increasing".into()));
        }
        if levels.iter().any(|l| l.degeneracy == 0 || !l.energy.is_finite()) {
            return Err(Error::Domain("levels need finite energy and g >= 1".into()));
        }
        let total: u64 = levels.iter().map(|l| l.degeneracy).sum();
        if total != 1u64 << n_spins {
            return Err(Error::Domain(format!(
                "degeneracies sum to {total}, expected 2^{n_spins}"
            )));
        }
        Ok(DensityOfStates { n_spins, levels })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn ground_energy(&self) -> f64 {
        self.levels[0].energy
    }

    /// `E_1 - E_0`, or `None` for a single-level spectrum.
    pub fn gap(&self) -> Option<f64> {
        self.levels.get(1).map(|l| l.energy - self.levels[0].energy)
    }

    pub fn total_states(&self) -> u64 {
        1u64 << self.n_spins
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn enumerate_dos(instance: &Instance) -> Result<DensityOfStates> {
    enumerate_dos_capped(instance, DEFAULT_MAX_SPINS)
}

/// Gray-code enumeration of all `2^N` configurations. Each step flips one
/// spin and updates the energy from the terms containing it. The index
/// space is split on its top bits into independent chunks that run in
/// parallel and are merged at the end.
pub fn enumerate_dos_capped(instance: &Instance, max_spins: usize) -> Result<DensityOfStates> {
    let n = instance.n_spins();
    if n > max_spins.min(62) {
        return Err(Error::Refused(format!(
            "exact enumeration of {n} spins exceeds the cap of {max_spins}"
        )));
    }
    let compiled = Compiled::new(instance);
    let high = if n > 12 { HIGH_BITS.min(n) } else { 0 };
    let low = n - high;
    let chunks = 1u64 << high;

    let levels = if compiled.half_integral() {
        let bound: i64 = instance
            .terms()
            .iter()
            .map(|t| (2.0 * t.coefficient()).abs() as i64)
            .sum();
        let width = (2 * bound + 1) as usize;
        let hist = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut hist = vec![0u64; width];
                let mut spins = chunk_start(&compiled, low, chunk);
                let mut e = compiled.energy_half(&spins);
                hist[(e + bound) as usize] += 1;
                for step in 1..(1u64 << low) {
                    let i = step.trailing_zeros() as usize;
                    e += compiled.flip_delta_half(&spins, i);
                    spins[i] = -spins[i];
                    hist[(e + bound) as usize] += 1;
                }
                hist
            })
            .reduce(
                || vec![0u64; width],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        hist.into_iter()
            .enumerate()
            .filter(|&(_, g)| g > 0)
            .map(|(k, g)| Level {
                energy: (k as i64 - bound) as f64 / 2.0,
                degeneracy: g,
            })
            .collect()
    } else {
        let scale: f64 = 1.0 + instance.terms().iter().map(|t| t.coefficient().abs()).sum::<f64>();
        let quantum = 1e-9 * scale;
        let merged = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut hist: HashMap<i64, (f64, u64)> = HashMap::new();
                let mut spins = chunk_start(&compiled, low, chunk);
                let mut e = compiled.energy(&spins);
                let mut record = |e: f64| {
                    hist.entry((e / quantum).round() as i64).or_insert((e, 0)).1 += 1;
                };
                record(e);
                for step in 1..(1u64 << low) {
                    let i = step.trailing_zeros() as usize;
                    e += compiled.flip_delta(&spins, i);
                    spins[i] = -spins[i];
                    record(e);
                }
                hist
            })
            .reduce(HashMap::new, |mut a, b| {
                for (k, (e, g)) in b {
                    a.entry(k).or_insert((e, 0)).1 += g;
                }
                a
            });
        let mut keys: Vec<_> = merged.into_iter().collect();
        keys.sort_by_key(|&(k, _)| k);
        keys.into_iter()
            .map(|(_, (energy, degeneracy))| Level { energy, degeneracy })
            .collect()
    };
    DensityOfStates::new(n, levels)
}

fn chunk_start(compiled: &Compiled, low: usize, chunk: u64) -> Vec<i32> {
    let n = compiled.n();
    let cfg = SpinConfig::from_bits(n, chunk << low);
    compiled.spin_buffer(cfg.spins())
}

/// Direct scan over all configurations without incremental updates.
/// Slow; kept as an independent check of [`enumerate_dos`].
pub fn naive_dos(instance: &Instance) -> Result<DensityOfStates> {
    let n = instance.n_spins();
    if n > 24 {
        return Err(Error::Refused(format!("naive scan of {n} spins refused")));
    }
    let mut map: std::collections::BTreeMap<i64, (f64, u64)> = Default::default();
    for bits in 0..(1u64 << n) {
        let e = instance.energy(&SpinConfig::from_bits(n, bits))?;
        map.entry((e * 1e9).round() as i64).or_insert((e, 0)).1 += 1;
    }
    DensityOfStates::new(
        n,
        map.into_values()
            .map(|(energy, degeneracy)| Level { energy, degeneracy })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{build_chimera, generate_bimodal, ClassTag, Term};

    fn levels(d: &DensityOfStates) -> Vec<(f64, u64)> {
        d.levels().iter().map(|l| (l.energy, l.degeneracy)).collect()
    }

    #[test]
    fn single_spin_field() {
        let inst = Instance::new(1, vec![Term::field(0, 0.5).unwrap()], ClassTag::Custom, 0).unwrap();
        let d = enumerate_dos(&inst).unwrap();
        assert_eq!(levels(&d), vec![(-0.5, 1), (0.5, 1)]);
    }

    #[test]
    fn ferromagnetic_pair() {
        let inst =
            Instance::new(2, vec![Term::coupling(0, 1, -1.0).unwrap()], ClassTag::Custom, 0).unwrap();
        let d = enumerate_dos(&inst).unwrap();
        assert_eq!(levels(&d), vec![(-1.0, 2), (1.0, 2)]);
    }

    #[test]
    fn bimodal_sixteen_matches_naive_scan() {
        let g = build_chimera(1, 2).unwrap();
        let inst = generate_bimodal(&g, 8).unwrap();
        let d = enumerate_dos(&inst).unwrap();
        assert_eq!(d.levels().iter().map(|l| l.degeneracy).sum::<u64>(), 65536);
        let naive = naive_dos(&inst).unwrap();
        assert_eq!(d, naive);
    }

    #[test]
    fn continuous_couplings_use_float_path() {
        let g = build_chimera(1, 2).unwrap();
        let terms = g
            .edges()
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| Term::coupling(a, b, ((k as f64) * 0.37).sin()).unwrap())
            .collect();
        let inst = Instance::new(16, terms, ClassTag::Custom, 0).unwrap();
        let d = enumerate_dos(&inst).unwrap();
        let naive = naive_dos(&inst).unwrap();
        assert_eq!(d.levels().len(), naive.levels().len());
        for (a, b) in d.levels().iter().zip(naive.levels()) {
            assert_eq!(a.degeneracy, b.degeneracy);
            assert!((a.energy - b.energy).abs() < 1e-9);
        }
    }

    #[test]
    fn over_cap_refused() {
        let g = build_chimera(1, 4).unwrap();
        let inst = generate_bimodal(&g, 1).unwrap();
        let err = enumerate_dos(&inst).unwrap_err();
        assert!(err.to_string().contains("exceeds the cap"));
    }

    #[test]
    fn zero_hamiltonian_single_level() {
        let inst = Instance::new(3, vec![], ClassTag::Custom, 0).unwrap();
        let d = enumerate_dos(&inst).unwrap();
        assert_eq!(levels(&d), vec![(0.0, 8)]);
        assert_eq!(d.gap(), None);
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let d = DensityOfStates::new(
            2,
            vec![Level { energy: -1.0, degeneracy: 2 }, Level { energy: 1.0, degeneracy: 2 }],
        )
        .unwrap();
        let s = d.to_json_pretty().unwrap();
        assert_eq!(DensityOfStates::from_json(&s).unwrap(), d);
        assert!(DensityOfStates::from_json(r#"{"n_spins":2,"levels":[[-1,2],[1,1]]}"#).is_err());
        assert!(DensityOfStates::from_json(r#"{"n_spins":1,"levels":[[1,1],[-1,1]]}"#).is_err());
    }
}
