use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inverse temperatures of the replicas, strictly increasing and positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Ladder {
    betas: Vec<f64>,
}

impl Ladder {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::Domain("ladder needs at least one beta".into()));
        }
        if betas.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(Error::Domain("ladder betas must be finite and positive".into()));
        }
        if betas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("ladder betas must be strictly increasing".into()));
        }
        Ok(Ladder { betas })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// Index of the rung closest to `beta`.
    pub fn nearest(&self, beta: f64) -> usize {
        let mut best = 0;
        for (i, b) in self.betas.iter().enumerate() {
            if (b - beta).abs() < (self.betas[best] - beta).abs() {
                best = i;
            }
        }
        best
    }

    /// Distance from rung `i` to the rung below it (or to zero for i = 0).
    pub fn spacing_below(&self, i: usize) -> f64 {
        if i == 0 {
            self.betas[0]
        } else {
            self.betas[i] - self.betas[i - 1]
        }
    }
}

impl TryFrom<Vec<f64>> for Ladder {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Ladder::new(v)
    }
}

impl From<Ladder> for Vec<f64> {
    fn from(l: Ladder) -> Self {
        l.betas
    }
}

/// `n` betas spaced geometrically between `beta_min` and `beta_max`:
/// `beta_max * (beta_min / beta_max)^{i/(n-1)}` for `i = 0..n`, stored in
/// ascending order. Endpoints are exact.
pub fn geometric_ladder(beta_min: f64, beta_max: f64, n: usize) -> Result<Ladder> {
    if !(beta_min > 0.0 && beta_min < beta_max && beta_max.is_finite()) {
        return Err(Error::Domain(format!(
            "need 0 < beta_min < beta_max, got {beta_min}, {beta_max}"
        )));
    }
    if n < 2 {
        return Err(Error::Domain(format!("ladder needs n >= 2, got {n}")));
    }
    let ratio = beta_min / beta_max;
    let mut betas: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                beta_max
            } else if i == n - 1 {
                beta_min
            } else {
                beta_max * ratio.powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect();
    betas.reverse();
    Ladder::new(betas)
}
