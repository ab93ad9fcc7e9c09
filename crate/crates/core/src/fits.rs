//! Logarithmic and power-law scaling fits with 95% confidence intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::t_critical;

/// Thermal crossover exponent of the 2d spin glass.
pub const THETA: f64 = 0.5;
/// Correlation-length exponent of the 2d spin glass and its uncertainty.
pub const NU: f64 = 3.53;
pub const NU_ERR: f64 = 0.07;
/// Specific-heat exponent in `c_T ~ T^{alpha_c}`.
pub const ALPHA_C: f64 = 2.0 * NU;
/// Exponent of the power law `beta ~ N^{1/(2 nu)}`.
pub const CROSSOVER_EXPONENT: f64 = 1.0 / (2.0 * NU);

const CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub n: f64,
    pub y: f64,
    pub y_err: Option<f64>,
}

impl FitPoint {
    pub fn new(n: f64, y: f64, y_err: Option<f64>) -> Self {
        FitPoint { n, y, y_err }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = a + b ln N`
    LogLaw,
    /// `y = c N^alpha`, fitted as `ln y = ln c + alpha ln N`
    PowerLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
}

impl FitParam {
    pub fn ci_contains(&self, x: f64) -> bool {
        self.ci95.0 <= x && x <= self.ci95.1
    }

    pub fn ci_excludes_zero(&self) -> bool {
        !self.ci_contains(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: FitModel,
    /// `[a, b]` for the log law, `[ln_c, alpha]` for the power law.
    pub params: Vec<FitParam>,
    /// Residual sum of squares on the original `(N, y)` scale.
    pub rss: f64,
    pub n_points: usize,
    pub weighted: bool,
    pub flags: Vec<String>,
}

impl ScalingFit {
    pub fn intercept(&self) -> &FitParam {
        &self.params[0]
    }

    pub fn slope(&self) -> &FitParam {
        &self.params[1]
    }

    pub fn predict(&self, n: f64) -> f64 {
        let (p0, p1) = (self.params[0].value, self.params[1].value);
        match self.model {
            FitModel::LogLaw => p0 + p1 * n.ln(),
            FitModel::PowerLaw => (p0 + p1 * n.ln()).exp(),
        }
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Result of a straight-line weighted least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub se_intercept: f64,
    pub se_slope: f64,
    pub dof: usize,
}

/// Weighted least squares of `y` on `x`; covariance scaled by the
/// residual variance so errors reflect the observed scatter.
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {n}")));
    }
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| w * (x - xm) * (x - xm)).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((x, y), w)| w * (x - xm) * (y - ym)).sum();
    let spread = x.iter().fold(0.0f64, |m, &v| m.max((v - xm).abs()));
    if !(sxx > 1e-24 * sw * spread.max(1.0).powi(2)) || !sxx.is_finite() {
        return Err(Error::Fit("design matrix is rank deficient".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let dof = n - 2;
    let s2 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / dof as f64;
    Ok(LineFit {
        intercept,
        slope,
        se_intercept: (s2 * (1.0 / sw + xm * xm / sxx)).sqrt(),
        se_slope: (s2 / sxx).sqrt(),
        dof,
    })
}

fn validate(points: &[FitPoint]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", points.len())));
    }
    let mut ns: Vec<f64> = points.iter().map(|p| p.n).collect();
    ns.sort_by(f64::total_cmp);
    if ns.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Fit("sizes must be distinct".into()));
    }
    if points.iter().any(|p| !(p.n > 0.0) || !p.y.is_finite()) {
        return Err(Error::Fit("sizes must be positive and values finite".into()));
    }
    Ok(())
}

/// Weights `1/err^2` when every point carries a positive error.
fn weights(errs: impl Iterator<Item = Option<f64>> + Clone) -> (Vec<f64>, bool) {
    if errs.clone().all(|e| matches!(e, Some(v) if v > 0.0)) {
        (errs.map(|e| e.unwrap().powi(-2)).collect(), true)
    } else {
        (errs.map(|_| 1.0).collect(), false)
    }
}

fn params(line: &LineFit, names: [&str; 2]) -> Result<Vec<FitParam>> {
    let t = t_critical(CONFIDENCE, line.dof as f64)?;
    Ok([(line.intercept, line.se_intercept), (line.slope, line.se_slope)]
        .iter()
        .zip(names)
        .map(|(&(v, se), name)| FitParam {
            name: name.to_string(),
            value: v,
            stderr: se,
            ci95: (v - t * se, v + t * se),
        })
        .collect())
}

fn finish(model: FitModel, points: &[FitPoint], params: Vec<FitParam>, weighted: bool) -> ScalingFit {
    let mut fit = ScalingFit {
        model,
        params,
        rss: 0.0,
        n_points: points.len(),
        weighted,
        flags: Vec::new(),
    };
    fit.rss = points.iter().map(|p| (p.y - fit.predict(p.n)).powi(2)).sum();
    if fit.slope().ci_excludes_zero() {
        fit.flags.push(if fit.slope().value > 0.0 { "slope_positive" } else { "slope_negative" }.into());
    }
    if model == FitModel::PowerLaw && fit.slope().ci_contains(CROSSOVER_EXPONENT) {
        fit.flags.push("crossover_consistent".into());
    }
    fit
}

pub fn fit_log_law(points: &[FitPoint]) -> Result<ScalingFit> {
    validate(points)?;
    let x: Vec<f64> = points.iter().map(|p| p.n.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.y).collect();
    let (w, weighted) = weights(points.iter().map(|p| p.y_err));
    let line = weighted_line_fit(&x, &y, &w)?;
    Ok(finish(FitModel::LogLaw, points, params(&line, ["a", "b"])?, weighted))
}

pub fn fit_power_law(points: &[FitPoint]) -> Result<ScalingFit> {
    validate(points)?;
    if points.iter().any(|p| p.y <= 0.0) {
        return Err(Error::Domain("power-law fit needs positive values".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.n.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.y.ln()).collect();
    // error of ln y is err/y
    let (w, weighted) = weights(points.iter().map(|p| p.y_err.map(|e| e / p.y)));
    let line = weighted_line_fit(&x, &y, &w)?;
    Ok(finish(FitModel::PowerLaw, points, params(&line, ["ln_c", "alpha"])?, weighted))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    LogLaw,
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub rss_log: f64,
    pub rss_power: f64,
    /// `rss_power / rss_log`.
    pub ratio: f64,
    pub preferred: Preference,
    /// Set when the ratio lies in `[1/2, 2]`.
    pub indistinguishable: bool,
}

pub fn compare_models(log_fit: &ScalingFit, power_fit: &ScalingFit) -> Result<ModelComparison> {
    if log_fit.model != FitModel::LogLaw || power_fit.model != FitModel::PowerLaw {
        return Err(Error::Fit("expected a log-law fit and a power-law fit".into()));
    }
    if log_fit.n_points != power_fit.n_points {
        return Err(Error::Fit("fits use different point sets".into()));
    }
    let (a, b) = (log_fit.rss, power_fit.rss);
    let ratio = if a == b { 1.0 } else { b / a.max(f64::MIN_POSITIVE) };
    Ok(ModelComparison {
        rss_log: a,
        rss_power: b,
        ratio,
        preferred: if b < a { Preference::PowerLaw } else { Preference::LogLaw },
        indistinguishable: (0.5..=2.0).contains(&ratio),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub n: f64,
    pub mean_residual: f64,
    pub sigma: f64,
}

/// Power-law fits of the mean residual energy and of the energy spread
/// against `N`; optionally drops the smallest size.
pub fn residual_scaling(points: &[ResidualPoint], exclude_smallest: bool) -> Result<(ScalingFit, ScalingFit)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.n.total_cmp(&b.n));
    if exclude_smallest && !pts.is_empty() {
        pts.remove(0);
    }
    let mean: Vec<FitPoint> = pts.iter().map(|p| FitPoint::new(p.n, p.mean_residual, None)).collect();
    let sigma: Vec<FitPoint> = pts.iter().map(|p| FitPoint::new(p.n, p.sigma, None)).collect();
    Ok((fit_power_law(&mean)?, fit_power_law(&sigma)?))
}
