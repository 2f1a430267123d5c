//! EKF, UKF, simplex UKF, single-propagation UKF and its extrapolated variant.
//!
//! Every filter splits a step into a prediction producing
//! [`PredictedMoments`] and the shared [`kalman_update`], so accuracy
//! differences come from the prediction strategy alone.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    measurement_jacobian, propagate_mean, state_transition_matrix, DynamicsModel, JacobianMode,
    MeasurementModel,
};
use crate::numerics::symmetrize;
use crate::unscented::{
    generate_sigma_points, generate_simplex_sigma_points, ut_covariance, ut_cross_covariance,
    ut_mean, SigmaPointSet,
};

#[derive(Debug, Clone, PartialEq)]
pub struct StateEstimate {
    pub t: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl StateEstimate {
    pub fn new(t: f64, mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { t, mean, cov }
    }

    /// Covariance symmetric within `1e-9` relative with a nonnegative diagonal.
    pub fn is_well_formed(&self) -> bool {
        let p = &self.cov;
        let n = self.mean.len();
        if p.nrows() != n || p.ncols() != n || p.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let scale = p.amax().max(f64::MIN_POSITIVE);
        (0..n).all(|i| p[(i, i)] >= 0.0)
            && (0..n).all(|i| (0..i).all(|j| (p[(i, j)] - p[(j, i)]).abs() <= 1e-9 * scale))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub kappa: f64,
    /// RK4 steps per filter interval.
    pub substeps: usize,
    pub simplex_w0: f64,
    pub jacobian_mode: JacobianMode,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            kappa: 0.0,
            substeps: 2,
            simplex_w0: 0.5,
            jacobian_mode: JacobianMode::Analytic,
        }
    }
}

impl FilterConfig {
    /// Defaults with `n + κ = 3`.
    pub fn for_state_dim(n: usize) -> Self {
        Self {
            kappa: 3.0 - n as f64,
            ..Self::default()
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.substeps == 0 {
            return Err(Error::InvalidParameter("substeps must be at least 1".into()));
        }
        if !(n as f64 + self.kappa > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "n + kappa must be positive (n = {n}, kappa = {})",
                self.kappa
            )));
        }
        if !(0.0..1.0).contains(&self.simplex_w0) {
            return Err(Error::InvalidParameter(format!(
                "simplex w0 must lie in [0, 1), got {}",
                self.simplex_w0
            )));
        }
        Ok(())
    }
}

/// Prior moments at the measurement time, ready for [`kalman_update`].
#[derive(Debug, Clone)]
pub struct PredictedMoments {
    pub t: f64,
    pub state_mean: DVector<f64>,
    pub state_cov: DMatrix<f64>,
    pub meas_mean: DVector<f64>,
    /// Includes `R`.
    pub innovation_cov: DMatrix<f64>,
    pub cross_cov: DMatrix<f64>,
    /// Propagated sigma points (absent for the EKF).
    pub sigma_points: Option<SigmaPointSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Ekf,
    Ukf,
    Ssukf,
    Spukf,
    Espukf,
}

impl FilterKind {
    pub const ALL: [FilterKind; 5] = [
        FilterKind::Ekf,
        FilterKind::Ukf,
        FilterKind::Ssukf,
        FilterKind::Spukf,
        FilterKind::Espukf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Ekf => "ekf",
            FilterKind::Ukf => "ukf",
            FilterKind::Ssukf => "ssukf",
            FilterKind::Spukf => "spukf",
            FilterKind::Espukf => "espukf",
        }
    }

    pub fn predict<D, M>(
        self,
        dynamics: &D,
        meas: &M,
        est: &StateEstimate,
        dt: f64,
        cfg: &FilterConfig,
    ) -> Result<PredictedMoments>
    where
        D: DynamicsModel + ?Sized,
        M: MeasurementModel + ?Sized,
    {
        match self {
            FilterKind::Ekf => ekf_predict(dynamics, meas, est, dt, cfg),
            FilterKind::Ukf => ukf_predict(dynamics, meas, est, dt, cfg),
            FilterKind::Ssukf => ssukf_predict(dynamics, meas, est, dt, cfg),
            FilterKind::Spukf => spukf_predict(dynamics, meas, est, dt, cfg),
            FilterKind::Espukf => espukf_predict(dynamics, meas, est, dt, cfg),
        }
    }

    /// Predict to `est.t + dt`, then update with `z`.
    pub fn step<D, M>(
        self,
        dynamics: &D,
        meas: &M,
        est: &StateEstimate,
        z: &DVector<f64>,
        dt: f64,
        cfg: &FilterConfig,
    ) -> Result<StateEstimate>
    where
        D: DynamicsModel + ?Sized,
        M: MeasurementModel + ?Sized,
    {
        let pred = self.predict(dynamics, meas, est, dt, cfg)?;
        kalman_update(&pred, z)
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ekf" => Ok(FilterKind::Ekf),
            "ukf" => Ok(FilterKind::Ukf),
            "ssukf" => Ok(FilterKind::Ssukf),
            "spukf" => Ok(FilterKind::Spukf),
            "espukf" => Ok(FilterKind::Espukf),
            other => Err(Error::InvalidParameter(format!("unknown filter '{other}'"))),
        }
    }
}

fn check_inputs<D, M>(dynamics: &D, meas: &M, est: &StateEstimate, cfg: &FilterConfig) -> Result<()>
where
    D: DynamicsModel + ?Sized,
    M: MeasurementModel + ?Sized,
{
    let n = dynamics.state_dim();
    if est.mean.len() != n || est.cov.nrows() != n || est.cov.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "estimate",
            expected: n,
            found: est.mean.len(),
        });
    }
    let q = dynamics.process_noise();
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "process noise",
            expected: n,
            found: q.nrows(),
        });
    }
    let m = meas.meas_dim();
    let r = meas.noise_cov();
    if r.nrows() != m || r.ncols() != m {
        return Err(Error::DimensionMismatch {
            what: "measurement noise",
            expected: m,
            found: r.nrows(),
        });
    }
    cfg.validate(n)
}

#[derive(Clone, Copy)]
enum Redraw {
    Standard(f64),
    Simplex(f64),
}

/// Moments of a propagated set with `Q` and `R` added.
///
/// The measurement points are redrawn from `(Ŷ⁻, P⁻)` so that the additive
/// process noise reaches `S` and `P_YZ`.
fn moments_from_points<M: MeasurementModel + ?Sized>(
    set: SigmaPointSet,
    q: &DMatrix<f64>,
    meas: &M,
    t: f64,
    redraw: Redraw,
) -> Result<PredictedMoments> {
    let state_mean = ut_mean(&set.points, &set.weights)?;
    let mut state_cov = ut_covariance(&set.points, &set.weights, &state_mean)? + q;
    symmetrize(&mut state_cov);

    let prior = match redraw {
        Redraw::Standard(kappa) => generate_sigma_points(&state_mean, &state_cov, kappa)?,
        Redraw::Simplex(w0) => generate_simplex_sigma_points(&state_mean, &state_cov, w0)?,
    };
    let z: Vec<DVector<f64>> = prior.points.iter().map(|y| meas.measure(y)).collect();
    let meas_mean = ut_mean(&z, &prior.weights)?;
    let mut innovation_cov = ut_covariance(&z, &prior.weights, &meas_mean)? + meas.noise_cov();
    symmetrize(&mut innovation_cov);
    let prior_mean = ut_mean(&prior.points, &prior.weights)?;
    let cross_cov = ut_cross_covariance(&prior.points, &z, &prior_mean, &meas_mean, &prior.weights)?;

    Ok(PredictedMoments {
        t,
        state_mean,
        state_cov,
        meas_mean,
        innovation_cov,
        cross_cov,
        sigma_points: Some(set),
    })
}

fn propagate_all<D: DynamicsModel + ?Sized>(
    dynamics: &D,
    set: &SigmaPointSet,
    t: f64,
    dt: f64,
    substeps: usize,
) -> Result<Vec<DVector<f64>>> {
    set.points
        .iter()
        .map(|y| propagate_mean(dynamics, y, t, dt, substeps))
        .collect()
}

/// Linearized prediction: `P⁻ = Φ P Φᵀ + Q`, `H` taken at the predicted mean.
pub fn ekf_predict<D, M>(
    dynamics: &D,
    meas: &M,
    est: &StateEstimate,
    dt: f64,
    cfg: &FilterConfig,
) -> Result<PredictedMoments>
where
    D: DynamicsModel + ?Sized,
    M: MeasurementModel + ?Sized,
{
    check_inputs(dynamics, meas, est, cfg)?;
    let state_mean = propagate_mean(dynamics, &est.mean, est.t, dt, cfg.substeps)?;
    let phi = state_transition_matrix(dynamics, &est.mean, est.t, dt, cfg.jacobian_mode)?;
    let mut state_cov = &phi * &est.cov * phi.transpose() + dynamics.process_noise();
    symmetrize(&mut state_cov);

    let h = measurement_jacobian(meas, &state_mean, cfg.jacobian_mode)?;
    let meas_mean = meas.measure(&state_mean);
    let cross_cov = &state_cov * h.transpose();
    let mut innovation_cov = &h * &cross_cov + meas.noise_cov();
    symmetrize(&mut innovation_cov);

    Ok(PredictedMoments {
        t: est.t + dt,
        state_mean,
        state_cov,
        meas_mean,
        innovation_cov,
        cross_cov,
        sigma_points: None,
    })
}

/// Full unscented prediction: every one of the `2n + 1` points is integrated.
pub fn ukf_predict<D, M>(
    dynamics: &D,
    meas: &M,
    est: &StateEstimate,
    dt: f64,
    cfg: &FilterConfig,
) -> Result<PredictedMoments>
where
    D: DynamicsModel + ?Sized,
    M: MeasurementModel + ?Sized,
{
    check_inputs(dynamics, meas, est, cfg)?;
    let set = generate_sigma_points(&est.mean, &est.cov, cfg.kappa)?;
    let points = propagate_all(dynamics, &set, est.t, dt, cfg.substeps)?;
    moments_from_points(
        set.with_points(points),
        dynamics.process_noise(),
        meas,
        est.t + dt,
        Redraw::Standard(cfg.kappa),
    )
}

/// Unscented prediction over the `n + 2` point spherical simplex.
pub fn ssukf_predict<D, M>(
    dynamics: &D,
    meas: &M,
    est: &StateEstimate,
    dt: f64,
    cfg: &FilterConfig,
) -> Result<PredictedMoments>
where
    D: DynamicsModel + ?Sized,
    M: MeasurementModel + ?Sized,
{
    check_inputs(dynamics, meas, est, cfg)?;
    let set = generate_simplex_sigma_points(&est.mean, &est.cov, cfg.simplex_w0)?;
    let points = propagate_all(dynamics, &set, est.t, dt, cfg.substeps)?;
    moments_from_points(
        set.with_points(points),
        dynamics.process_noise(),
        meas,
        est.t + dt,
        Redraw::Simplex(cfg.simplex_w0),
    )
}

/// Integrates only the mean; sigma points follow as `Y0 + Φ ΔYi`.
pub fn spukf_predict<D, M>(
    dynamics: &D,
    meas: &M,
    est: &StateEstimate,
    dt: f64,
    cfg: &FilterConfig,
) -> Result<PredictedMoments>
where
    D: DynamicsModel + ?Sized,
    M: MeasurementModel + ?Sized,
{
    check_inputs(dynamics, meas, est, cfg)?;
    let set = generate_sigma_points(&est.mean, &est.cov, cfg.kappa)?;
    let y0 = propagate_mean(dynamics, &est.mean, est.t, dt, cfg.substeps)?;
    let phi = state_transition_matrix(dynamics, &est.mean, est.t, dt, cfg.jacobian_mode)?;
    let points = set.offsets.iter().map(|d| &y0 + &phi * d).collect();
    moments_from_points(
        set.with_points(points),
        dynamics.process_noise(),
        meas,
        est.t + dt,
        Redraw::Standard(cfg.kappa),
    )
}

/// `2 N2(ΔY/2) − N1(ΔY)`, evaluated literally.
pub fn richardson_sigma_point(
    y0: &DVector<f64>,
    phi0: &DMatrix<f64>,
    phi_mid: &DMatrix<f64>,
    offset: &DVector<f64>,
) -> DVector<f64> {
    let full = phi0 * offset;
    let half = &full * 0.5;
    let mid_half = phi_mid * offset * 0.5;
    let n1 = y0 + &full;
    let n2 = y0 + half + mid_half;
    n2 * 2.0 - n1
}

/// As [`spukf_predict`], with each point extrapolated through the
/// transition matrix at its half-offset state.
pub fn espukf_predict<D, M>(
    dynamics: &D,
    meas: &M,
    est: &StateEstimate,
    dt: f64,
    cfg: &FilterConfig,
) -> Result<PredictedMoments>
where
    D: DynamicsModel + ?Sized,
    M: MeasurementModel + ?Sized,
{
    check_inputs(dynamics, meas, est, cfg)?;
    let set = generate_sigma_points(&est.mean, &est.cov, cfg.kappa)?;
    let y0 = propagate_mean(dynamics, &est.mean, est.t, dt, cfg.substeps)?;
    let phi0 = state_transition_matrix(dynamics, &est.mean, est.t, dt, cfg.jacobian_mode)?;
    let mut points = Vec::with_capacity(set.len());
    points.push(y0.clone());
    for d in &set.offsets[1..] {
        let mid = &est.mean + d * 0.5;
        let phi_mid = state_transition_matrix(dynamics, &mid, est.t, dt, cfg.jacobian_mode)?;
        points.push(richardson_sigma_point(&y0, &phi0, &phi_mid, d));
    }
    moments_from_points(
        set.with_points(points),
        dynamics.process_noise(),
        meas,
        est.t + dt,
        Redraw::Standard(cfg.kappa),
    )
}

/// Shared measurement update. `S` already carries `R`.
pub fn kalman_update(pred: &PredictedMoments, z: &DVector<f64>) -> Result<StateEstimate> {
    let m = pred.meas_mean.len();
    if z.len() != m {
        return Err(Error::DimensionMismatch {
            what: "measurement",
            expected: m,
            found: z.len(),
        });
    }
    let s = &pred.innovation_cov;
    let chol = s.clone().cholesky().ok_or(Error::SingularInnovation)?;
    // S Kᵀ = P_YZᵀ
    let k = chol.solve(&pred.cross_cov.transpose()).transpose();
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularInnovation);
    }
    let innovation = z - &pred.meas_mean;
    let mean = &pred.state_mean + &k * innovation;
    let mut cov = &pred.state_cov - &k * s * k.transpose();
    symmetrize(&mut cov);
    Ok(StateEstimate {
        t: pred.t,
        mean,
        cov,
    })
}
