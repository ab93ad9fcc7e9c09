use rand::Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::Compiled;
use crate::instance::{Instance, SpinConfig};

/// Single-spin Metropolis updates. A sweep is `N` proposals at sites drawn
/// uniformly with replacement.
#[derive(Debug, Clone)]
pub struct Sweeper {
    compiled: Compiled,
}

/// Precomputed `exp(-beta dE)` for every possible positive half-unit `dE`
/// of a half-integral instance.
#[derive(Debug, Clone)]
pub(crate) struct AcceptTable {
    beta: f64,
    table: Option<Vec<f64>>,
}

impl Sweeper {
    pub fn new(instance: &Instance) -> Self {
        Sweeper {
            compiled: Compiled::new(instance),
        }
    }

    pub fn n_spins(&self) -> usize {
        self.compiled.n()
    }

    pub(crate) fn table(&self, beta: f64) -> AcceptTable {
        let table = self.compiled.half_integral().then(|| {
            (0..=self.compiled.max_flip_half())
                .map(|k| (-beta * k as f64 / 2.0).exp())
                .collect()
        });
        AcceptTable { beta, table }
    }

    pub(crate) fn buffer(&self, config: &SpinConfig) -> Vec<i32> {
        self.compiled.spin_buffer(config.spins())
    }

    pub(crate) fn energy(&self, spins: &[i32]) -> f64 {
        self.compiled.energy(spins)
    }

    /// `N` random-site proposals; returns the number of accepted flips.
    pub(crate) fn sweep<R: Rng + ?Sized>(
        &self,
        spins: &mut [i32],
        energy: &mut f64,
        accept: &AcceptTable,
        rng: &mut R,
    ) -> usize {
        let n = self.compiled.n();
        let mut accepted = 0;
        if n == 0 {
            return 0;
        }
        match &accept.table {
            Some(table) => {
                for _ in 0..n {
                    let i = rng.gen_range(0..n);
                    let dh = self.compiled.flip_delta_half(spins, i);
                    if dh <= 0 || rng.gen::<f64>() < table[dh as usize] {
                        spins[i] = -spins[i];
                        *energy += dh as f64 / 2.0;
                        accepted += 1;
                    }
                }
            }
            None => {
                for _ in 0..n {
                    let i = rng.gen_range(0..n);
                    let de = self.compiled.flip_delta(spins, i);
                    if de <= 0.0 || rng.gen::<f64>() < (-accept.beta * de).exp() {
                        spins[i] = -spins[i];
                        *energy += de;
                        accepted += 1;
                    }
                }
            }
        }
        accepted
    }
}

/// One Metropolis sweep at `beta`; returns the new configuration and its
/// energy.
pub fn metropolis_sweep<R: Rng + ?Sized>(
    instance: &Instance,
    config: &SpinConfig,
    beta: f64,
    rng: &mut R,
) -> Result<(SpinConfig, f64)> {
    if config.len() != instance.n_spins() {
        return Err(Error::InvalidConfig(format!(
            "config has {} spins, instance has {}",
            config.len(),
            instance.n_spins()
        )));
    }
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("beta must be >= 0, got {beta}")));
    }
    let sweeper = Sweeper::new(instance);
    let mut spins = sweeper.buffer(config);
    let mut e = sweeper.energy(&spins);
    sweeper.sweep(&mut spins, &mut e, &sweeper.table(beta), rng);
    let n = instance.n_spins();
    let out = SpinConfig::new(spins[..n].iter().map(|&s| s as i8).collect())?;
    Ok((out, e))
}
