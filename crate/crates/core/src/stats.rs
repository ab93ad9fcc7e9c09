//! Small descriptive statistics used throughout the estimators and fits.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Number of blocks used for every blocking standard error.
pub const N_BLOCKS: usize = 20;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divides by n), computed around the mean.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (divides by n - 1).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    variance(xs) * n / (n - 1.0)
}

/// Third central moment (divides by n).
pub fn third_central_moment(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / xs.len() as f64
}

/// Moment skewness `m3 / m2^{3/2}`; zero for constant data.
pub fn skewness(xs: &[f64]) -> f64 {
    let v = variance(xs);
    if v <= 0.0 {
        return 0.0;
    }
    third_central_moment(xs) / v.powf(1.5)
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    })
}

/// Splits `xs` into `n_blocks` contiguous blocks of equal length; a
/// remainder of `len % n_blocks` leading samples is dropped.
pub fn blocks(xs: &[f64], n_blocks: usize) -> Result<Vec<&[f64]>> {
    let size = xs.len() / n_blocks.max(1);
    if n_blocks < 2 || size == 0 {
        return Err(Error::InsufficientSamples {
            needed: n_blocks.max(2),
            got: xs.len(),
        });
    }
    let start = xs.len() - size * n_blocks;
    Ok(xs[start..].chunks(size).collect())
}

/// Standard error of `stat` by blocking: the statistic is evaluated on each
/// block and the spread of the block values gives the error of the
/// full-sample value.
pub fn blocking_stderr_of<F>(xs: &[f64], n_blocks: usize, stat: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let values: Vec<f64> = blocks(xs, n_blocks)?.into_iter().map(stat).collect();
    Ok((sample_variance(&values) / values.len() as f64).sqrt())
}

/// Blocking standard error of the mean with [`N_BLOCKS`] blocks.
pub fn blocking_stderr(xs: &[f64]) -> Result<f64> {
    blocking_stderr_of(xs, N_BLOCKS, mean)
}

/// Two-sided Student-t critical value: `P(|T| <= t) = level` for `dof`
/// degrees of freedom.
pub fn t_critical(level: f64, dof: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&level) || dof <= 0.0 {
        return Err(Error::Domain(format!("t quantile needs level in [0,1) and dof > 0, got {level}, {dof}")));
    }
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(t.inverse_cdf(0.5 + level / 2.0))
}
