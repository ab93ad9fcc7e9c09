use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::DensityOfStates;
use crate::pt::SampleSeries;

/// Upper limit on level bins before falling back to Freedman-Diaconis.
const MAX_LEVEL_BINS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// One bin per multiple of the smallest observed energy gap.
    Levels,
    FreedmanDiaconis,
}

/// Weighted histogram of extensive energies at one inverse temperature.
/// Bin `k` covers `[edges[k], edges[k+1])` and is represented by
/// `centers[k]` in moments and reweighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyHistogram {
    pub beta: f64,
    pub binning: Binning,
    pub edges: Vec<f64>,
    /// Representative energy of each bin.
    pub centers: Vec<f64>,
    pub counts: Vec<f64>,
}

fn level_width(sorted: &[f64]) -> Option<f64> {
    let scale = sorted.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-9 * scale;
    let mut distinct = sorted.to_vec();
    distinct.dedup_by(|a, b| (*a - *b).abs() <= tol);
    if distinct.len() < 2 {
        return Some(1.0);
    }
    let width = distinct
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let span = distinct[distinct.len() - 1] - distinct[0];
    if span / width > MAX_LEVEL_BINS as f64 {
        return None;
    }
    let on_grid = distinct.iter().all(|&e| {
        let k = (e - distinct[0]) / width;
        (k - k.round()).abs() * width <= 1e-6 * scale
    });
    on_grid.then_some(width)
}

impl EnergyHistogram {
    /// Histograms raw energies, choosing level bins when every value sits
    /// on a common grid and Freedman-Diaconis bins otherwise.
    pub fn from_samples(energies: &[f64], beta: f64) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        let mut sorted = energies.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let (binning, start, width, n_bins) = match level_width(&sorted) {
            Some(w) => {
                let n = ((hi - lo) / w).round() as usize + 1;
                (Binning::Levels, lo - w / 2.0, w, n)
            }
            None => {
                let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
                let iqr = q(0.75) - q(0.25);
                let mut w = 2.0 * iqr / (sorted.len() as f64).cbrt();
                if !(w > 0.0) {
                    w = (hi - lo).max(1e-12) / 64.0;
                }
                let n = (((hi - lo) / w).floor() as usize + 1).max(1);
                (Binning::FreedmanDiaconis, lo, w, n)
            }
        };
        let edges: Vec<f64> = (0..=n_bins).map(|k| start + k as f64 * width).collect();
        let mut counts = vec![0.0; n_bins];
        for &e in &sorted {
            let k = (((e - start) / width).floor() as usize).min(n_bins - 1);
            counts[k] += 1.0;
        }
        let centers = edges.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        Ok(EnergyHistogram {
            beta,
            binning,
            edges,
            centers,
            counts,
        })
    }

    /// Exact Boltzmann histogram: one bin per level, weights sum to 1.
    pub fn from_dos(dos: &DensityOfStates, beta: f64) -> Self {
        let centers: Vec<f64> = dos.levels().iter().map(|l| l.energy).collect();
        let n = centers.len();
        let (first, last) = if n > 1 {
            ((centers[1] - centers[0]) / 2.0, (centers[n - 1] - centers[n - 2]) / 2.0)
        } else {
            (0.5, 0.5)
        };
        let mut edges = vec![centers[0] - first];
        edges.extend(centers.windows(2).map(|w| (w[0] + w[1]) / 2.0));
        edges.push(centers[n - 1] + last);
        EnergyHistogram {
            beta,
            binning: Binning::Levels,
            edges,
            centers,
            counts: dos.probabilities(beta),
        }
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Reweights to `beta + delta_beta` by `exp(-delta_beta E)` per bin,
    /// keeping the total weight.
    pub fn reweight(&self, delta_beta: f64) -> Result<Self> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::Domain("cannot reweight an empty histogram".into()));
        }
        let lw: Vec<f64> = self
            .counts
            .iter()
            .zip(&self.centers)
            .map(|(&c, &e)| if c > 0.0 { c.ln() - delta_beta * e } else { f64::NEG_INFINITY })
            .collect();
        let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + lw.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        Ok(EnergyHistogram {
            beta: self.beta + delta_beta,
            binning: self.binning,
            edges: self.edges.clone(),
            centers: self.centers.clone(),
            counts: lw.iter().map(|&x| total * (x - log_norm).exp()).collect(),
        })
    }

    pub fn mean(&self) -> f64 {
        let t = self.total();
        self.centers.iter().zip(&self.counts).map(|(e, c)| e * c).sum::<f64>() / t
    }

    fn central(&self, k: i32) -> f64 {
        let m = self.mean();
        let t = self.total();
        self.centers
            .iter()
            .zip(&self.counts)
            .map(|(e, c)| c * (e - m).powi(k))
            .sum::<f64>()
            / t
    }

    pub fn std_dev(&self) -> f64 {
        self.central(2).sqrt()
    }

    pub fn skewness(&self) -> f64 {
        let v = self.central(2);
        if v <= 0.0 {
            0.0
        } else {
            self.central(3) / v.powf(1.5)
        }
    }

    /// `bin_lo,bin_hi,count` rows with a provenance comment line.
    pub fn to_csv(&self, config_hash: &str) -> Result<String> {
        let mut buf = format!(
            "# betascale {} config_hash={config_hash} beta={}\n",
            crate::TOOL_VERSION,
            self.beta
        )
        .into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["bin_lo", "bin_hi", "count"])?;
            for (k, c) in self.counts.iter().enumerate() {
                w.serialize((self.edges[k], self.edges[k + 1], c))?;
            }
            w.flush().map_err(|e| Error::io("<histogram>", e))?;
        }
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Residual-energy histogram of one rung with its mean and spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualHistogram {
    pub beta: f64,
    pub mean_residual: f64,
    pub std_residual: f64,
    pub histogram: EnergyHistogram,
}

/// Histograms of `E - e0` for every rung.
pub fn residual_distribution(series: &SampleSeries, e0: f64) -> Result<Vec<ResidualHistogram>> {
    series
        .energies
        .iter()
        .zip(&series.betas)
        .map(|(es, &beta)| {
            let res: Vec<f64> = es.iter().map(|e| e - e0).collect();
            let histogram = EnergyHistogram::from_samples(&res, beta)?;
            Ok(ResidualHistogram {
                beta,
                mean_residual: crate::stats::mean(&res),
                std_residual: crate::stats::variance(&res).sqrt(),
                histogram,
            })
        })
        .collect()
}
