//! Side-by-side comparison of exact and approximate sigma-point propagation.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{
    kalman_update, richardson_sigma_point, FilterConfig, FilterKind, StateEstimate,
};
use crate::models::{propagate_mean, state_transition_matrix, DynamicsModel, MeasurementModel};
use crate::unscented::{generate_sigma_points, ut_covariance, ut_mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApproxMethod {
    Spukf,
    Espukf,
}

impl ApproxMethod {
    pub fn filter(self) -> FilterKind {
        match self {
            ApproxMethod::Spukf => FilterKind::Spukf,
            ApproxMethod::Espukf => FilterKind::Espukf,
        }
    }
}

impl fmt::Display for ApproxMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.filter(), f)
    }
}

impl FromStr for ApproxMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<FilterKind>()? {
            FilterKind::Spukf => Ok(ApproxMethod::Spukf),
            FilterKind::Espukf => Ok(ApproxMethod::Espukf),
            other => Err(Error::InvalidParameter(format!(
                "'{other}' is not an approximate propagation method"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FidelityReport {
    /// `Yi − Ỹi` per sigma point.
    pub per_point_errors: Vec<DVector<f64>>,
    /// `Σ Wi ei`.
    pub mean_error: DVector<f64>,
    /// Frobenius norm of the predicted-covariance difference (no `Q`).
    pub cov_error_norm: f64,
    /// `max ‖ΔYi‖`.
    pub delta_y_scale: f64,
    pub exact_mean: DVector<f64>,
    pub approx_mean: DVector<f64>,
    pub weights: Vec<f64>,
}

impl FidelityReport {
    pub fn max_point_error(&self) -> f64 {
        self.per_point_errors
            .iter()
            .map(|e| e.norm())
            .fold(0.0, f64::max)
    }
}

/// Propagates one sigma set both exactly and with `method`.
pub fn compare_sigma_propagation<D: DynamicsModel + ?Sized>(
    dynamics: &D,
    est: &StateEstimate,
    dt: f64,
    cfg: &FilterConfig,
    method: ApproxMethod,
) -> Result<FidelityReport> {
    cfg.validate(dynamics.state_dim())?;
    let set = generate_sigma_points(&est.mean, &est.cov, cfg.kappa)?;

    let exact: Vec<DVector<f64>> = set
        .points
        .iter()
        .map(|y| propagate_mean(dynamics, y, est.t, dt, cfg.substeps))
        .collect::<Result<_>>()?;

    let y0 = exact[0].clone();
    let phi0 = state_transition_matrix(dynamics, &est.mean, est.t, dt, cfg.jacobian_mode)?;
    let approx: Vec<DVector<f64>> = match method {
        ApproxMethod::Spukf => set.offsets.iter().map(|d| &y0 + &phi0 * d).collect(),
        ApproxMethod::Espukf => {
            let mut out = Vec::with_capacity(set.len());
            for d in &set.offsets {
                let mid = &est.mean + d * 0.5;
                let phi_mid =
                    state_transition_matrix(dynamics, &mid, est.t, dt, cfg.jacobian_mode)?;
                out.push(richardson_sigma_point(&y0, &phi0, &phi_mid, d));
            }
            out
        }
    };

    let per_point_errors: Vec<DVector<f64>> =
        exact.iter().zip(&approx).map(|(a, b)| a - b).collect();
    let mean_error = ut_mean(&per_point_errors, &set.weights)?;
    let exact_mean = ut_mean(&exact, &set.weights)?;
    let approx_mean = ut_mean(&approx, &set.weights)?;
    let cov_error_norm = (ut_covariance(&exact, &set.weights, &exact_mean)?
        - ut_covariance(&approx, &set.weights, &approx_mean)?)
    .norm();
    let delta_y_scale = set.offsets.iter().map(|d| d.norm()).fold(0.0, f64::max);

    Ok(FidelityReport {
        per_point_errors,
        mean_error,
        cov_error_norm,
        delta_y_scale,
        exact_mean,
        approx_mean,
        weights: set.weights,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderProbe {
    /// `(scale, max ‖ei‖)`; the covariance is multiplied by `scale²`.
    pub samples: Vec<(f64, f64)>,
    /// Least-squares slope of `ln error` against `ln scale`.
    pub slope: f64,
}

/// Errors at or below this multiple of the propagated state size are roundoff.
const EXACT_FLOOR: f64 = 1e-12;

/// Fits the observed order of the sigma-point approximation error.
pub fn order_probe<D: DynamicsModel + ?Sized>(
    dynamics: &D,
    est: &StateEstimate,
    dt: f64,
    cfg: &FilterConfig,
    method: ApproxMethod,
    scales: &[f64],
) -> Result<OrderProbe> {
    if scales.is_empty() {
        return Err(Error::InvalidParameter("no scales supplied".into()));
    }
    if scales.iter().any(|s| !(*s > 0.0)) || scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "scales must be positive and strictly descending".into(),
        ));
    }

    let mut samples = Vec::with_capacity(scales.len());
    let mut fit = Vec::new();
    for &s in scales {
        let scaled = StateEstimate::new(est.t, est.mean.clone(), &est.cov * (s * s));
        let report = compare_sigma_propagation(dynamics, &scaled, dt, cfg, method)?;
        let err = report.max_point_error();
        samples.push((s, err));
        let floor = EXACT_FLOOR * (report.exact_mean.norm() + report.delta_y_scale);
        if err > floor {
            fit.push((s.ln(), err.ln()));
        }
    }
    if fit.len() < 2 {
        return Err(Error::ExactRegime);
    }
    Ok(OrderProbe {
        samples,
        slope: log_log_slope(&fit),
    })
}

fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Posterior-mean gap between the UKF and an approximate filter after one step.
#[derive(Debug, Clone)]
pub struct PosteriorGap {
    pub mean_error: DVector<f64>,
    pub posterior_gap: DVector<f64>,
}

impl PosteriorGap {
    /// `‖gap − ē‖ / ‖ē‖`.
    pub fn residual_ratio(&self) -> f64 {
        (&self.posterior_gap - &self.mean_error).norm() / self.mean_error.norm()
    }
}

pub fn posterior_gap<D, M>(
    dynamics: &D,
    meas: &M,
    est: &StateEstimate,
    z: &DVector<f64>,
    dt: f64,
    cfg: &FilterConfig,
    method: ApproxMethod,
) -> Result<PosteriorGap>
where
    D: DynamicsModel + ?Sized,
    M: MeasurementModel + ?Sized,
{
    let report = compare_sigma_propagation(dynamics, est, dt, cfg, method)?;
    let exact = kalman_update(&FilterKind::Ukf.predict(dynamics, meas, est, dt, cfg)?, z)?;
    let approx = kalman_update(&method.filter().predict(dynamics, meas, est, dt, cfg)?, z)?;
    Ok(PosteriorGap {
        mean_error: report.mean_error,
        posterior_gap: exact.mean - approx.mean,
    })
}

/// Relative Frobenius distance, guarded against a zero reference.
pub fn relative_difference(a: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    (a - reference).norm() / reference.norm().max(f64::MIN_POSITIVE)
}
