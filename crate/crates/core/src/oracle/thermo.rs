use serde::{Deserialize, Serialize};

use super::dos::DensityOfStates;
use crate::error::{Error, Result};

/// Relative tolerance used when comparing an energy with a target.
pub(crate) fn at_or_below(e: f64, target: f64) -> bool {
    e <= target + 1e-9 * target.abs().max(1.0)
}

/// Exact canonical averages at one inverse temperature. `mean_e` and
/// `c_beta` are intensive; `sigma_h` is the extensive energy spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactThermo {
    pub beta: f64,
    pub log_z: f64,
    pub mean_e: f64,
    pub c_beta: f64,
    pub sigma_h: f64,
    pub p_le_target: f64,
}

/// Mean and central moments of the extensive energy `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralMoments {
    pub mean: f64,
    pub var: f64,
    pub third: f64,
}

impl DensityOfStates {
    /// `(ln p_n, ln Z)` with `p_n = g_n e^{-beta E_n} / Z`.
    pub fn log_probabilities(&self, beta: f64) -> (Vec<f64>, f64) {
        let lw: Vec<f64> = self
            .levels()
            .iter()
            .map(|l| (l.degeneracy as f64).ln() - beta * l.energy)
            .collect();
        let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + lw.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        (lw.into_iter().map(|x| x - log_z).collect(), log_z)
    }

    pub fn probabilities(&self, beta: f64) -> Vec<f64> {
        self.log_probabilities(beta).0.into_iter().map(f64::exp).collect()
    }

    pub fn central_moments(&self, beta: f64) -> CentralMoments {
        let p = self.probabilities(beta);
        let mean: f64 = p.iter().zip(self.levels()).map(|(p, l)| p * l.energy).sum();
        let (mut var, mut third) = (0.0, 0.0);
        for (p, l) in p.iter().zip(self.levels()) {
            let d = l.energy - mean;
            var += p * d * d;
            third += p * d * d * d;
        }
        CentralMoments { mean, var, third }
    }

    /// `P(E <= target)` at `beta`.
    pub fn probability_at_or_below(&self, beta: f64, target_e: f64) -> f64 {
        let (lp, _) = self.log_probabilities(beta);
        lp.iter()
            .zip(self.levels())
            .filter(|(_, l)| at_or_below(l.energy, target_e))
            .map(|(lp, _)| lp.exp())
            .sum::<f64>()
            .min(1.0)
    }
}

pub fn thermo_from_dos(dos: &DensityOfStates, beta: f64, target_e: f64) -> Result<ExactThermo> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be finite and >= 0, got {beta}")));
    }
    let n = dos.n_spins() as f64;
    let (_, log_z) = dos.log_probabilities(beta);
    let m = dos.central_moments(beta);
    // c = -N var(e) = -var(H)/N
    let c_beta = -m.var / n;
    Ok(ExactThermo {
        beta,
        log_z,
        mean_e: m.mean / n,
        c_beta,
        sigma_h: m.var.sqrt(),
        p_le_target: dos.probability_at_or_below(beta, target_e),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiPoint {
    /// Intensive level energy.
    pub e: f64,
    /// Entropy density `ln(g)/N`.
    pub s: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiProfile {
    pub beta: f64,
    pub points: Vec<PsiPoint>,
    /// Maximizer of `psi = s(e) - beta e`; ties go to the lowest energy.
    pub e_star: f64,
}

pub fn entropy_and_psi(dos: &DensityOfStates, beta: f64) -> Result<PsiProfile> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("beta must be >= 0, got {beta}")));
    }
    let n = dos.n_spins().max(1) as f64;
    let points: Vec<PsiPoint> = dos
        .levels()
        .iter()
        .map(|l| {
            let e = l.energy / n;
            let s = (l.degeneracy as f64).ln() / n;
            PsiPoint { e, s, psi: s - beta * e }
        })
        .collect();
    // levels are sorted ascending, so strict > keeps the lowest maximizer
    let mut best = points[0];
    for p in &points[1..] {
        if p.psi > best.psi {
            best = *p;
        }
    }
    Ok(PsiProfile {
        beta,
        e_star: best.e,
        points,
    })
}

const BISECTION_RTOL: f64 = 1e-6;

/// Smallest `beta` with `P_beta(E <= target_e) >= q`, by bisection.
/// `P(E <= target)` is nondecreasing in beta, so the root is unique.
pub fn beta_star_exact(dos: &DensityOfStates, target_e: f64, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q must lie in (0, 1), got {q}")));
    }
    if !at_or_below(dos.ground_energy(), target_e) {
        return Err(Error::Domain(format!(
            "target {target_e} lies below the ground energy {}",
            dos.ground_energy()
        )));
    }
    let p = |b: f64| dos.probability_at_or_below(b, target_e);
    if p(0.0) >= q {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while p(hi) < q {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Domain(format!("no beta reaches q = {q}")));
        }
    }
    while hi - lo > BISECTION_RTOL * hi * 1e-3 {
        let mid = 0.5 * (lo + hi);
        if p(mid) >= q {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
