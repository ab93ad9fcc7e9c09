use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pt::SampleSeries;
use crate::stats;

/// Each of the three windows must hold at least 100 samples.
pub const MIN_BLOCK_TEST_SAMPLES: usize = 800;

/// A run passes when at most this fraction of its rungs fail individually.
pub const DEFAULT_MAX_FAILING_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEstimate {
    pub c_beta: f64,
    pub stderr: f64,
}

/// Specific heat on the last half, second quarter and second eighth of one
/// rung's samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockTest {
    pub last_half: BlockEstimate,
    pub second_quarter: BlockEstimate,
    pub second_eighth: BlockEstimate,
    pub pass: bool,
}

fn block_estimate(energies: &[f64], n: f64) -> Result<BlockEstimate> {
    let c = |xs: &[f64]| -stats::variance(xs) / n;
    Ok(BlockEstimate {
        c_beta: c(energies),
        stderr: stats::blocking_stderr_of(energies, stats::N_BLOCKS, c)?,
    })
}

fn agree(a: &BlockEstimate, b: &BlockEstimate) -> bool {
    let sigma = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
    (a.c_beta - b.c_beta).abs() <= 2.0 * sigma
}

/// Passes when the three window estimates agree pairwise within two
/// combined standard errors.
pub fn block_thermalization_test(energies: &[f64], n_spins: usize) -> Result<BlockTest> {
    let len = energies.len();
    if len < MIN_BLOCK_TEST_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_BLOCK_TEST_SAMPLES,
            got: len,
        });
    }
    if !len.is_multiple_of(8) {
        return Err(Error::Domain(format!("sample count {len} is not divisible by 8")));
    }
    let n = n_spins as f64;
    let last_half = block_estimate(&energies[len / 2..], n)?;
    let second_quarter = block_estimate(&energies[len / 4..len / 2], n)?;
    let second_eighth = block_estimate(&energies[len / 8..len / 4], n)?;
    let pass = agree(&last_half, &second_quarter)
        && agree(&last_half, &second_eighth)
        && agree(&second_quarter, &second_eighth);
    Ok(BlockTest {
        last_half,
        second_quarter,
        second_eighth,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesBlockTest {
    pub rungs: Vec<BlockTest>,
    pub failing_fraction: f64,
    pub max_failing_fraction: f64,
    pub pass: bool,
}

/// Applies [`block_thermalization_test`] to every rung. Rungs of an
/// equilibrated run fail by chance at a rate of roughly one in eight, so
/// the run-level verdict tolerates a fraction `max_failing_fraction` of
/// failing rungs.
pub fn series_thermalization_test(series: &SampleSeries, max_failing_fraction: f64) -> Result<SeriesBlockTest> {
    let rungs = series
        .energies
        .iter()
        .map(|es| block_thermalization_test(es, series.n_spins))
        .collect::<Result<Vec<_>>>()?;
    let failing = rungs.iter().filter(|r| !r.pass).count();
    let failing_fraction = failing as f64 / rungs.len().max(1) as f64;
    Ok(SeriesBlockTest {
        rungs,
        failing_fraction,
        max_failing_fraction,
        pass: failing_fraction <= max_failing_fraction,
    })
}
