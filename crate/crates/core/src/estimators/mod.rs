//! Observables from sampled energies or an exact density of states.

mod histogram;
mod thermalization;

pub use histogram::{residual_distribution, Binning, EnergyHistogram, ResidualHistogram};
pub use thermalization::{
    block_thermalization_test, series_thermalization_test, BlockEstimate, BlockTest, SeriesBlockTest,
    DEFAULT_MAX_FAILING_FRACTION, MIN_BLOCK_TEST_SAMPLES,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::thermo::at_or_below;
use crate::oracle::{thermo_from_dos, DensityOfStates};
use crate::pt::{Ladder, SampleSeries};
use crate::stats;

pub const MIN_ESTIMATE_SAMPLES: usize = 100;
pub const MIN_DIAGNOSTIC_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalEstimates {
    pub beta: f64,
    pub n_samples: usize,
    pub mean_e: f64,
    pub mean_e_stderr: f64,
    pub c_beta: f64,
    pub c_beta_stderr: f64,
    pub sigma_h: f64,
    pub p_le_target: Option<f64>,
    pub p_le_target_stderr: Option<f64>,
    /// `eps` in `<H> = (1 - eps) E0`, reported when `E0 < 0` is known.
    pub residual_fraction: Option<f64>,
}

fn c_of(es: &[f64], n: f64) -> f64 {
    -n * stats::variance(es)
}

fn residual_fraction(mean_e: f64, n: f64, e0: Option<f64>) -> Option<f64> {
    e0.filter(|&e0| e0 < 0.0).map(|e0| 1.0 - mean_e * n / e0)
}

/// Estimates from one rung's extensive energies, with blocking errors.
pub fn estimates_from_samples(
    energies: &[f64],
    beta: f64,
    n_spins: usize,
    target_e: Option<f64>,
    e0: Option<f64>,
) -> Result<ThermalEstimates> {
    if energies.len() < MIN_ESTIMATE_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_ESTIMATE_SAMPLES,
            got: energies.len(),
        });
    }
    let n = n_spins as f64;
    let es: Vec<f64> = energies.iter().map(|e| e / n).collect();
    let mean_e = stats::mean(&es);
    let c_beta = c_of(&es, n);
    let (p, p_err) = match target_e {
        Some(t) => {
            let hits: Vec<f64> = energies
                .iter()
                .map(|&e| if at_or_below(e, t) { 1.0 } else { 0.0 })
                .collect();
            (Some(stats::mean(&hits)), Some(stats::blocking_stderr(&hits)?))
        }
        None => (None, None),
    };
    Ok(ThermalEstimates {
        beta,
        n_samples: energies.len(),
        mean_e,
        mean_e_stderr: stats::blocking_stderr(&es)?,
        c_beta,
        c_beta_stderr: stats::blocking_stderr_of(&es, stats::N_BLOCKS, |b| c_of(b, n))?,
        sigma_h: (-n * c_beta).max(0.0).sqrt(),
        p_le_target: p,
        p_le_target_stderr: p_err,
        residual_fraction: residual_fraction(mean_e, n, e0),
    })
}

/// Exact estimates (zero errors) from a density of states.
pub fn estimates_from_dos(
    dos: &DensityOfStates,
    beta: f64,
    target_e: Option<f64>,
    e0: Option<f64>,
) -> Result<ThermalEstimates> {
    let t = thermo_from_dos(dos, beta, target_e.unwrap_or(f64::NEG_INFINITY))?;
    let n = dos.n_spins() as f64;
    Ok(ThermalEstimates {
        beta,
        n_samples: 0,
        mean_e: t.mean_e,
        mean_e_stderr: 0.0,
        c_beta: t.c_beta,
        c_beta_stderr: 0.0,
        sigma_h: t.sigma_h,
        p_le_target: target_e.map(|_| t.p_le_target),
        p_le_target_stderr: target_e.map(|_| 0.0),
        residual_fraction: residual_fraction(t.mean_e, n, e0),
    })
}

/// Skewness of the standardized intensive energy and the `dc/dbeta` it
/// implies through `dc/dbeta = sqrt(N) <eta^3> (-c)^{3/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDeviation {
    pub eta3: f64,
    pub dc_dbeta: f64,
}

fn deviation_from_moments(n: f64, var_h: f64, third_h: f64) -> Result<GaussianDeviation> {
    if !(var_h > 0.0) {
        return Err(Error::UndefinedDiagnostic(
            "energy variance is zero; eta is undefined".into(),
        ));
    }
    let c = -var_h / n;
    let eta3 = third_h / var_h.powf(1.5);
    Ok(GaussianDeviation {
        eta3,
        dc_dbeta: n.sqrt() * eta3 * (-c).powf(1.5),
    })
}

pub fn third_moment_diagnostic(energies: &[f64], n_spins: usize) -> Result<GaussianDeviation> {
    if energies.len() < MIN_DIAGNOSTIC_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_DIAGNOSTIC_SAMPLES,
            got: energies.len(),
        });
    }
    deviation_from_moments(
        n_spins as f64,
        stats::variance(energies),
        stats::third_central_moment(energies),
    )
}

/// Exact version of [`third_moment_diagnostic`] from a density of states.
pub fn third_moment_from_dos(dos: &DensityOfStates, beta: f64) -> Result<GaussianDeviation> {
    let m = dos.central_moments(beta);
    deviation_from_moments(dos.n_spins() as f64, m.var, m.third)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RungBetaStar {
    pub beta_star: f64,
    pub rung: usize,
    /// Spacing to the next rung below (the first rung's own beta for rung 0).
    pub uncertainty: f64,
}

/// First rung (in ascending beta) whose probability reaches `q`.
pub fn beta_star_from_probabilities(
    ladder: &Ladder,
    probabilities: &[f64],
    q: f64,
) -> Result<Option<RungBetaStar>> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q must lie in (0,1), got {q}")));
    }
    if probabilities.len() != ladder.len() {
        return Err(Error::Domain("one probability per rung required".into()));
    }
    Ok(probabilities.iter().position(|&p| p >= q).map(|i| RungBetaStar {
        beta_star: ladder.betas()[i],
        rung: i,
        uncertainty: ladder.spacing_below(i),
    }))
}

/// Rung-resolved beta* from sampled energies; `None` when no rung reaches `q`.
pub fn beta_star_from_ladder(series: &SampleSeries, target_e: f64, q: f64) -> Result<Option<RungBetaStar>> {
    if series.n_samples() == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let ladder = series.ladder()?;
    let ps: Vec<f64> = series
        .energies
        .iter()
        .map(|es| es.iter().filter(|&&e| at_or_below(e, target_e)).count() as f64 / es.len() as f64)
        .collect();
    beta_star_from_probabilities(&ladder, &ps, q)
}

/// JSON array over rungs, wrapped with provenance fields.
pub fn estimates_json(estimates: &[ThermalEstimates], config_hash: &str) -> Result<String> {
    Ok(serde_json::to_string_pretty(&serde_json::json!({
        "tool_version": crate::TOOL_VERSION,
        "config_hash": config_hash,
        "rungs": estimates,
    }))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{ClassTag, Instance, Term};
    use crate::oracle::enumerate_dos;

    fn single_spin() -> DensityOfStates {
        let inst = Instance::new(1, vec![Term::field(0, 0.5).unwrap()], ClassTag::Custom, 0).unwrap();
        enumerate_dos(&inst).unwrap()
    }

    #[test]
    fn constant_samples() {
        let est = estimates_from_samples(&[-4.0; 200], 1.0, 4, Some(-4.0), Some(-4.0)).unwrap();
        assert_eq!(est.c_beta, 0.0);
        assert_eq!(est.sigma_h, 0.0);
        assert_eq!(est.p_le_target, Some(1.0));
        assert_eq!(est.residual_fraction, Some(0.0));
    }

    #[test]
    fn counting_probability() {
        let base = [-10.0, -10.0, -10.0, -8.0, -8.0, -8.0, -8.0, -8.0, -8.0, -8.0];
        let samples: Vec<f64> = base.iter().cycle().take(200).copied().collect();
        let est = estimates_from_samples(&samples, 1.0, 10, Some(-10.0), None).unwrap();
        assert!((est.p_le_target.unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            estimates_from_samples(&[0.0; 99], 1.0, 1, None, None),
            Err(Error::InsufficientSamples { needed: 100, got: 99 })
        ));
    }

    #[test]
    fn sigma_identity() {
        let samples: Vec<f64> = (0..400).map(|i| ((i * 7) % 13) as f64 - 30.0).collect();
        let est = estimates_from_samples(&samples, 1.0, 8, None, None).unwrap();
        assert!((est.sigma_h * est.sigma_h + 8.0 * est.c_beta).abs() < 1e-10);
        assert!((est.sigma_h - stats::variance(&samples).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dos_estimates_match_oracle() {
        let dos = single_spin();
        let est = estimates_from_dos(&dos, 1.0, Some(-0.5), Some(-0.5)).unwrap();
        let t = thermo_from_dos(&dos, 1.0, -0.5).unwrap();
        assert_eq!(est.mean_e, t.mean_e);
        assert_eq!(est.c_beta, t.c_beta);
        assert_eq!(est.p_le_target, Some(t.p_le_target));
    }

    #[test]
    fn symmetric_two_point_has_no_skew() {
        let xs: Vec<f64> = (0..2000).map(|i| if i % 2 == 0 { -3.0 } else { 1.0 }).collect();
        let d = third_moment_diagnostic(&xs, 4).unwrap();
        assert_eq!(d.eta3, 0.0);
        assert!(matches!(
            third_moment_diagnostic(&[1.0; 1000], 4),
            Err(Error::UndefinedDiagnostic(_))
        ));
    }

    #[test]
    fn single_spin_derivative_matches_finite_difference() {
        let dos = single_spin();
        let h = 1e-4;
        let c = |b: f64| thermo_from_dos(&dos, b, 0.0).unwrap().c_beta;
        let fd = (c(1.0 + h) - c(1.0 - h)) / (2.0 * h);
        let d = third_moment_from_dos(&dos, 1.0).unwrap();
        assert!((d.dc_dbeta - fd).abs() < 1e-6);
    }

    #[test]
    fn rung_beta_star() {
        let ladder = Ladder::new(vec![0.5, 1.0, 2.0, 4.0]).unwrap();
        let ps = [0.2, 0.3, 0.6, 0.9];
        let b = beta_star_from_probabilities(&ladder, &ps, 0.5).unwrap().unwrap();
        assert_eq!((b.beta_star, b.rung, b.uncertainty), (2.0, 2, 1.0));
        let b = beta_star_from_probabilities(&ladder, &ps, 0.1).unwrap().unwrap();
        assert_eq!(b.rung, 0);
        assert!(beta_star_from_probabilities(&ladder, &ps, 0.95).unwrap().is_none());
        assert!(beta_star_from_probabilities(&ladder, &ps, 1.0).is_err());
    }
}
