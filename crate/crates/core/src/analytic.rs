//! Closed-form reference models: independent spins in a field, the Grover
//! search spectrum, and instantaneous Gibbs weights along an anneal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest system size for the Grover formulas (keeps `2^N` exact in f64).
pub const MAX_GROVER_N: usize = 60;

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

fn check_p0(p0: f64) -> Result<()> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::Domain(format!("p0 must lie in (0,1), got {p0}")));
    }
    Ok(())
}

/// Both models have `p0 = 2^-N` at `beta = 0`, the smallest reachable value.
fn check_above_uniform(n: usize, p0: f64) -> Result<()> {
    if p0.ln() < -(n as f64) * std::f64::consts::LN_2 {
        return Err(Error::Domain(format!("p0 = {p0} is below 2^-{n}, which needs beta < 0")));
    }
    Ok(())
}

fn check_grover_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_GROVER_N {
        return Err(Error::Refused(format!("grover formulas need 1 <= N <= {MAX_GROVER_N}, got {n}")));
    }
    Ok(())
}

/// `ln(2^N - 1)`.
fn ln_states_above(n: usize) -> f64 {
    n as f64 * std::f64::consts::LN_2 + (-(0.5f64).powi(n as i32)).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndepSpinsThermo {
    pub mu_per_n: f64,
    pub sigma_per_sqrt_n: f64,
    pub p0: f64,
    pub log_p0: f64,
}

/// `N` spins with `H = -(1/2) sum s_i`, so `Z = [2 cosh(beta/2)]^N`.
pub fn indep_spins_thermo(n: usize, beta: f64) -> Result<IndepSpinsThermo> {
    check_beta(beta)?;
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    let log_p0 = -(n as f64) * softplus(-beta);
    Ok(IndepSpinsThermo {
        mu_per_n: -(beta / 2.0).tanh() / 2.0,
        sigma_per_sqrt_n: 0.5 / (beta / 2.0).cosh(),
        p0: log_p0.exp(),
        log_p0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaOfP0 {
    pub beta_exact: f64,
    pub beta_expansion: f64,
}

/// Inverse temperature at which independent spins reach ground-state
/// probability `p0`, exactly and to the first corrections in `1/N`.
pub fn indep_spins_beta_of_p0(n: usize, p0: f64) -> Result<BetaOfP0> {
    check_p0(p0)?;
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    check_above_uniform(n, p0)?;
    let nf = n as f64;
    let lp = p0.ln();
    Ok(BetaOfP0 {
        beta_exact: -(-lp / nf).exp_m1().ln(),
        beta_expansion: nf.ln() - (-lp).ln() + lp / (2.0 * nf),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroverThermo {
    pub log_z: f64,
    pub mu: f64,
    pub sigma: f64,
    pub p0: f64,
    pub log_p0: f64,
}

/// One state at energy `-N`, the other `2^N - 1` at `-N + 1`.
pub fn grover_thermo(n: usize, beta: f64) -> Result<GroverThermo> {
    check_beta(beta)?;
    check_grover_n(n)?;
    let x = ln_states_above(n) - beta;
    let log_p0 = -softplus(x);
    let p0 = log_p0.exp();
    let q = (-softplus(-x)).exp(); // 1 - p0
    Ok(GroverThermo {
        log_z: beta * n as f64 + softplus(x),
        mu: -(n as f64) + 1.0 - p0,
        sigma: (p0 * q).sqrt(),
        p0,
        log_p0,
    })
}

pub fn grover_beta_of_p0(n: usize, p0: f64) -> Result<BetaOfP0> {
    check_p0(p0)?;
    check_grover_n(n)?;
    check_above_uniform(n, p0)?;
    let odds = (1.0 / p0 - 1.0).ln();
    Ok(BetaOfP0 {
        beta_exact: ln_states_above(n) - odds,
        beta_expansion: n as f64 * std::f64::consts::LN_2 - odds - (0.5f64).powi(n as i32),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnealModel {
    Qubits,
    Grover,
}

/// Gibbs weight of the final ground state at one point of the anneal.
/// `gap` is the single-qubit level splitting or the Grover gap;
/// `overlap` is the ground-state overlap `Lambda(s)` or `cos theta(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealPoint {
    pub s: f64,
    pub gap: f64,
    pub overlap: f64,
    pub sin_theta: Option<f64>,
    pub p_gs: f64,
    pub log_p_gs: f64,
}

fn check_s(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("s must lie in [0,1], got {s}")));
    }
    Ok(())
}

/// Single-qubit splitting `lambda`, overlap `Lambda` and their derivatives
/// for `H(s) = -(1-s) X/2 - s Z/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitSpectrum {
    pub lambda: f64,
    pub dlambda: f64,
    pub overlap: f64,
    pub doverlap: f64,
}

pub fn qubit_spectrum(s: f64) -> QubitSpectrum {
    let lambda = ((1.0 - s).powi(2) + s * s).sqrt();
    let dlambda = (2.0 * s - 1.0) / lambda;
    QubitSpectrum {
        lambda,
        dlambda,
        overlap: 0.5 * (1.0 + s / lambda),
        doverlap: (lambda - s * dlambda) / (2.0 * lambda * lambda),
    }
}

/// `p(s) = [Lambda tanh(beta lambda/2) + 1/(1 + e^{beta lambda})]^N`.
pub fn qubit_anneal_gibbs_weight(n: usize, beta: f64, s_grid: &[f64]) -> Result<Vec<AnnealPoint>> {
    check_beta(beta)?;
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    s_grid
        .iter()
        .map(|&s| {
            check_s(s)?;
            let q = qubit_spectrum(s);
            let x = beta * q.lambda;
            let single = q.overlap * (x / 2.0).tanh() + (-softplus(x)).exp();
            let log_p_gs = n as f64 * single.ln();
            Ok(AnnealPoint {
                s,
                gap: q.lambda,
                overlap: q.overlap,
                sin_theta: None,
                p_gs: log_p_gs.exp(),
                log_p_gs,
            })
        })
        .collect()
}

/// Grover gap and mixing angle in a cancellation-free form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroverSpectrum {
    pub delta: f64,
    pub cos_theta: f64,
    pub sin_theta: f64,
}

pub fn grover_spectrum(n: usize, s: f64) -> GroverSpectrum {
    let eps = (0.5f64).powi(n as i32);
    let delta = ((1.0 - 2.0 * s).powi(2) + 4.0 * s * (1.0 - s) * eps).sqrt();
    GroverSpectrum {
        delta,
        cos_theta: ((2.0 * s - 1.0) + 2.0 * (1.0 - s) * eps) / delta,
        sin_theta: 2.0 * (1.0 - s) * eps.sqrt() * (1.0 - eps).sqrt() / delta,
    }
}

pub fn grover_anneal_gibbs_weight(n: usize, beta: f64, s_grid: &[f64]) -> Result<Vec<AnnealPoint>> {
    check_beta(beta)?;
    check_grover_n(n)?;
    let others = 2f64.powi(n as i32) - 2.0;
    s_grid
        .iter()
        .map(|&s| {
            check_s(s)?;
            let g = grover_spectrum(n, s);
            let e = (-beta * g.delta).exp();
            let num = 0.5 * (1.0 + g.cos_theta) + 0.5 * (1.0 - g.cos_theta) * e;
            let den = 1.0 + e + others * (-0.5 * beta * (1.0 + g.delta)).exp();
            let p_gs = num / den;
            Ok(AnnealPoint {
                s,
                gap: g.delta,
                overlap: g.cos_theta,
                sin_theta: Some(g.sin_theta),
                p_gs,
                log_p_gs: p_gs.ln(),
            })
        })
        .collect()
}

/// Leading small-beta slope `dp/ds` of the N-qubit weight.
pub fn qubit_small_beta_slope(n: usize, beta: f64) -> f64 {
    n as f64 * (0.5f64).powi(n as i32 - 1) * beta / 4.0
}

/// Leading small-beta slope `dp/ds` of the Grover weight.
pub fn grover_small_beta_slope(n: usize, beta: f64) -> f64 {
    let eps = (0.5f64).powi(n as i32);
    beta * (1.0 - eps) * eps
}

/// Uniform grid `k/(points+1)`, `k = 1..=points`, strictly inside `(0,1)`.
pub fn interior_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|k| k as f64 / (points + 1) as f64).collect()
}

/// `s,gap,overlap,p_gs` rows for plotting.
pub fn anneal_csv(points: &[AnnealPoint], config_hash: &str) -> Result<String> {
    let mut buf = format!("# betascale {} config_hash={config_hash}\n", crate::TOOL_VERSION).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["s", "gap", "overlap", "p_gs"])?;
        for p in points {
            w.serialize((p.s, p.gap, p.overlap, p.p_gs))?;
        }
        w.flush().map_err(|e| Error::io("<anneal csv>", e))?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn indep_spins_values() {
        let t = indep_spins_thermo(7, 0.0).unwrap();
        assert_eq!(t.mu_per_n, 0.0);
        assert_eq!(t.sigma_per_sqrt_n, 0.5);
        assert!(close(t.p0, 2f64.powi(-7), 1e-14));
        let t = indep_spins_thermo(1, 2.0).unwrap();
        assert!((t.mu_per_n + 0.380797).abs() < 1e-6);
        assert!((t.sigma_per_sqrt_n - 0.324027).abs() < 1e-6);
    }

    #[test]
    fn indep_spins_inversion() {
        for &(n, p0) in &[(1, 0.7), (10, 0.1), (100, 0.1), (1000, 0.9)] {
            let b = indep_spins_beta_of_p0(n, p0).unwrap();
            let back = indep_spins_thermo(n, b.beta_exact).unwrap().p0;
            assert!(close(back, p0, 1e-10), "{n} {p0} {back}");
        }
        let b = indep_spins_beta_of_p0(100, 0.1).unwrap();
        assert!(close(b.beta_expansion, b.beta_exact, 0.02));
        let bs: Vec<f64> = [100, 1000, 10000]
            .iter()
            .map(|&n| indep_spins_beta_of_p0(n, 0.1).unwrap().beta_exact)
            .collect();
        for w in bs.windows(2) {
            assert!((w[1] - w[0] - 10f64.ln()).abs() < 0.02);
        }
        assert!(indep_spins_beta_of_p0(10, 1.0).is_err());
        assert!(indep_spins_beta_of_p0(10, 0.0).is_err());
        // below the infinite-temperature value 2^-N no beta >= 0 exists
        assert!(indep_spins_beta_of_p0(1, 0.3).is_err());
        assert!(grover_beta_of_p0(4, 0.05).is_err());
    }

    #[test]
    fn grover_values() {
        let t = grover_thermo(5, 0.0).unwrap();
        assert!(close(t.mu, -4.0 - 1.0 / 32.0, 1e-14));
        assert!(close(t.p0, 1.0 / 32.0, 1e-14));
        // sigma peaks at 1/2 where e^beta = 2^N - 1
        let bm = 1023f64.ln();
        let t = grover_thermo(10, bm).unwrap();
        assert!((t.sigma - 0.5).abs() < 1e-12);
        assert!(grover_thermo(10, bm + 0.1).unwrap().sigma < 0.5);
        assert!(grover_thermo(10, bm - 0.1).unwrap().sigma < 0.5);
        // brute-force partition sum
        let (n, beta) = (10usize, 5.0);
        let z: f64 = (0..1u32 << n)
            .map(|k| {
                let e = if k == 0 { -(n as f64) } else { -(n as f64) + 1.0 };
                (-beta * e).exp()
            })
            .sum();
        let t = grover_thermo(n, beta).unwrap();
        assert!(close(t.p0, (beta * n as f64).exp() / z, 1e-12));
        assert!(close(t.log_z, z.ln(), 1e-12));
        assert!(matches!(grover_thermo(61, 1.0), Err(Error::Refused(_))));
    }

    #[test]
    fn grover_inversion() {
        let b = grover_beta_of_p0(4, 0.5).unwrap();
        assert!(close(b.beta_exact, 15f64.ln(), 1e-15));
        for &(n, p0) in &[(4, 0.5), (20, 0.1), (40, 0.001)] {
            let b = grover_beta_of_p0(n, p0).unwrap();
            assert!(close(grover_thermo(n, b.beta_exact).unwrap().p0, p0, 1e-10));
        }
        let target = -(1.0f64 / 0.1 - 1.0).ln();
        let gaps: Vec<f64> = [10, 20, 40]
            .iter()
            .map(|&n| (grover_beta_of_p0(n, 0.1).unwrap().beta_exact - n as f64 * std::f64::consts::LN_2 - target).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 1e-11);
    }

    #[test]
    fn qubit_endpoint_and_identity() {
        for &beta in &[0.1, 1.0, 10.0] {
            for &n in &[1, 10, 100] {
                let p = qubit_anneal_gibbs_weight(n, beta, &[1.0]).unwrap()[0];
                assert_eq!(p.overlap, 1.0);
                assert_eq!(p.gap, 1.0);
                assert!(close(p.p_gs, indep_spins_thermo(n, beta).unwrap().p0, 1e-10));
            }
        }
        for k in 1..=9 {
            let q = qubit_spectrum(k as f64 / 10.0);
            let id = 2.0 * q.doverlap * q.lambda + (2.0 * q.overlap - 1.0) * q.dlambda;
            assert!((id - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn qubit_derivatives_match_finite_differences() {
        let h = 1e-6;
        for k in 1..=9 {
            let s = k as f64 / 10.0;
            let q = qubit_spectrum(s);
            let (a, b) = (qubit_spectrum(s - h), qubit_spectrum(s + h));
            assert!((q.dlambda - (b.lambda - a.lambda) / (2.0 * h)).abs() < 1e-8);
            assert!((q.doverlap - (b.overlap - a.overlap) / (2.0 * h)).abs() < 1e-8);
        }
    }

    #[test]
    fn grover_endpoint_and_trig() {
        for &beta in &[0.1, 1.0, 10.0] {
            for &n in &[4, 8, 12] {
                let p = grover_anneal_gibbs_weight(n, beta, &[1.0]).unwrap()[0];
                assert_eq!(p.overlap, 1.0);
                assert!(close(p.p_gs, grover_thermo(n, beta).unwrap().p0, 1e-10));
            }
        }
        for n in [4, 12, 40] {
            for s in interior_grid(99) {
                let g = grover_spectrum(n, s);
                assert!((g.cos_theta.powi(2) + g.sin_theta.powi(2) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grover_minimum_gap() {
        for n in [4, 10, 20] {
            let g = grover_spectrum(n, 0.5);
            assert!(close(g.delta, 2f64.powf(-(n as f64) / 2.0), 1e-14));
            let fine: Vec<f64> = (0..=10_000).map(|k| k as f64 / 10_000.0).collect();
            let min = fine.iter().map(|&s| grover_spectrum(n, s).delta).fold(f64::INFINITY, f64::min);
            assert!(close(min, g.delta, 1e-12));
        }
    }

    #[test]
    fn weights_increase_along_anneal() {
        let grid = interior_grid(99);
        for &beta in &[0.1, 1.0, 10.0] {
            for &n in &[1, 10, 100] {
                let p = qubit_anneal_gibbs_weight(n, beta, &grid).unwrap();
                assert!(p.windows(2).all(|w| w[1].p_gs > w[0].p_gs), "qubits {n} {beta}");
            }
            for &n in &[4, 8, 12] {
                let p = grover_anneal_gibbs_weight(n, beta, &grid).unwrap();
                assert!(p.windows(2).all(|w| w[1].p_gs > w[0].p_gs), "grover {n} {beta}");
            }
        }
    }

    #[test]
    fn small_beta_slopes() {
        let beta = 1e-3;
        let h = 1e-5;
        for s in [0.2, 0.5, 0.8] {
            for n in [1, 4] {
                let p = qubit_anneal_gibbs_weight(n, beta, &[s - h, s + h]).unwrap();
                let fd = (p[1].p_gs - p[0].p_gs) / (2.0 * h);
                let lead = qubit_small_beta_slope(n, beta);
                assert!((fd - lead).abs() < 10.0 * beta * lead, "{s} {n} {fd} {lead}");
            }
            for n in [4, 8] {
                let p = grover_anneal_gibbs_weight(n, beta, &[s - h, s + h]).unwrap();
                let fd = (p[1].p_gs - p[0].p_gs) / (2.0 * h);
                let lead = grover_small_beta_slope(n, beta);
                assert!((fd - lead).abs() < 10.0 * beta * lead, "{s} {n} {fd} {lead}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(qubit_anneal_gibbs_weight(1, 1.0, &[1.5]).is_err());
        assert!(qubit_anneal_gibbs_weight(1, -1.0, &[0.5]).is_err());
        assert!(grover_anneal_gibbs_weight(0, 1.0, &[0.5]).is_err());
    }
}
