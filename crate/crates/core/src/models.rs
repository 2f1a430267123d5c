//! Process and measurement model abstractions.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{default_fd_steps, fd_jacobian, matrix_exp, rk4_propagate};

/// Continuous-time process model `ẏ = f(t, y)` with additive discrete noise `Q`.
pub trait DynamicsModel: Send + Sync {
    fn state_dim(&self) -> usize;

    fn derivative(&self, t: f64, y: &DVector<f64>) -> DVector<f64>;

    /// Analytic Jacobian of `f`; `None` selects the finite-difference fallback.
    fn jacobian(&self, _t: f64, _y: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    /// Per-step process noise covariance.
    fn process_noise(&self) -> &DMatrix<f64>;
}

/// Discrete measurement model `z = h(y) + w`, `w ~ N(0, R)`.
pub trait MeasurementModel: Send + Sync {
    fn meas_dim(&self) -> usize;

    fn measure(&self, y: &DVector<f64>) -> DVector<f64>;

    fn jacobian(&self, _y: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    fn noise_cov(&self) -> &DMatrix<f64>;
}

impl<T: DynamicsModel + ?Sized> DynamicsModel for &T {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn derivative(&self, t: f64, y: &DVector<f64>) -> DVector<f64> {
        (**self).derivative(t, y)
    }
    fn jacobian(&self, t: f64, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        (**self).jacobian(t, y)
    }
    fn process_noise(&self) -> &DMatrix<f64> {
        (**self).process_noise()
    }
}

impl<T: MeasurementModel + ?Sized> MeasurementModel for &T {
    fn meas_dim(&self) -> usize {
        (**self).meas_dim()
    }
    fn measure(&self, y: &DVector<f64>) -> DVector<f64> {
        (**self).measure(y)
    }
    fn jacobian(&self, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        (**self).jacobian(y)
    }
    fn noise_cov(&self) -> &DMatrix<f64> {
        (**self).noise_cov()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    /// Use the model's analytic Jacobian when it provides one.
    #[default]
    Analytic,
    FiniteDifference,
}

fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

pub fn dynamics_jacobian<D: DynamicsModel + ?Sized>(
    model: &D,
    t: f64,
    y: &DVector<f64>,
    mode: JacobianMode,
) -> Result<DMatrix<f64>> {
    let n = model.state_dim();
    check_dim("state", n, y.len())?;
    let analytic = match mode {
        JacobianMode::Analytic => model.jacobian(t, y),
        JacobianMode::FiniteDifference => None,
    };
    let jac = match analytic {
        Some(j) => j,
        None => fd_jacobian(|x| model.derivative(t, x), y, &default_fd_steps(y))?,
    };
    check_dim("dynamics Jacobian rows", n, jac.nrows())?;
    check_dim("dynamics Jacobian cols", n, jac.ncols())?;
    Ok(jac)
}

pub fn measurement_jacobian<M: MeasurementModel + ?Sized>(
    model: &M,
    y: &DVector<f64>,
    mode: JacobianMode,
) -> Result<DMatrix<f64>> {
    let analytic = match mode {
        JacobianMode::Analytic => model.jacobian(y),
        JacobianMode::FiniteDifference => None,
    };
    let jac = match analytic {
        Some(j) => j,
        None => fd_jacobian(|x| model.measure(x), y, &default_fd_steps(y))?,
    };
    check_dim("measurement Jacobian rows", model.meas_dim(), jac.nrows())?;
    check_dim("measurement Jacobian cols", y.len(), jac.ncols())?;
    Ok(jac)
}

/// Noise-free RK4 propagation of a single state.
pub fn propagate_mean<D: DynamicsModel + ?Sized>(
    model: &D,
    y: &DVector<f64>,
    t: f64,
    dt: f64,
    substeps: usize,
) -> Result<DVector<f64>> {
    check_dim("state", model.state_dim(), y.len())?;
    rk4_propagate(|s, x| model.derivative(s, x), y, t, dt, substeps)
}

/// `Φ = exp(J(t, y) dt)`.
pub fn state_transition_matrix<D: DynamicsModel + ?Sized>(
    model: &D,
    y: &DVector<f64>,
    t: f64,
    dt: f64,
    mode: JacobianMode,
) -> Result<DMatrix<f64>> {
    let jac = dynamics_jacobian(model, t, y, mode)?;
    matrix_exp(&jac, dt)
}

type DerivFn = dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync;
type DynJacFn = dyn Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync;
type MeasFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type MeasJacFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// Dynamics built from closures.
pub struct FnDynamics {
    dim: usize,
    deriv: Box<DerivFn>,
    jac: Option<Box<DynJacFn>>,
    q: DMatrix<f64>,
}

impl FnDynamics {
    pub fn new<F>(dim: usize, deriv: F, q: DMatrix<f64>) -> Self
    where
        F: Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            deriv: Box::new(deriv),
            jac: None,
            q,
        }
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jac = Some(Box::new(jac));
        self
    }
}

impl DynamicsModel for FnDynamics {
    fn state_dim(&self) -> usize {
        self.dim
    }
    fn derivative(&self, t: f64, y: &DVector<f64>) -> DVector<f64> {
        (self.deriv)(t, y)
    }
    fn jacobian(&self, t: f64, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.jac.as_ref().map(|j| j(t, y))
    }
    fn process_noise(&self) -> &DMatrix<f64> {
        &self.q
    }
}

/// Measurement model built from closures.
pub struct FnMeasurement {
    dim: usize,
    h: Box<MeasFn>,
    jac: Option<Box<MeasJacFn>>,
    r: DMatrix<f64>,
}

impl FnMeasurement {
    pub fn new<F>(dim: usize, h: F, r: DMatrix<f64>) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            h: Box::new(h),
            jac: None,
            r,
        }
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jac = Some(Box::new(jac));
        self
    }
}

impl MeasurementModel for FnMeasurement {
    fn meas_dim(&self) -> usize {
        self.dim
    }
    fn measure(&self, y: &DVector<f64>) -> DVector<f64> {
        (self.h)(y)
    }
    fn jacobian(&self, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.jac.as_ref().map(|j| j(y))
    }
    fn noise_cov(&self) -> &DMatrix<f64> {
        &self.r
    }
}

/// `ẏ = A y`.
#[derive(Debug, Clone)]
pub struct LinearDynamics {
    pub a: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl DynamicsModel for LinearDynamics {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    fn derivative(&self, _t: f64, y: &DVector<f64>) -> DVector<f64> {
        &self.a * y
    }
    fn jacobian(&self, _t: f64, _y: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.a.clone())
    }
    fn process_noise(&self) -> &DMatrix<f64> {
        &self.q
    }
}

/// `z = C y + w`.
#[derive(Debug, Clone)]
pub struct LinearMeasurement {
    pub c: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl MeasurementModel for LinearMeasurement {
    fn meas_dim(&self) -> usize {
        self.c.nrows()
    }
    fn measure(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.c * y
    }
    fn jacobian(&self, _y: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.c.clone())
    }
    fn noise_cov(&self) -> &DMatrix<f64> {
        &self.r
    }
}

/// Wraps a dynamics model and counts derivative and Jacobian evaluations.
pub struct CountingDynamics<D> {
    inner: D,
    derivatives: AtomicUsize,
    jacobians: AtomicUsize,
}

impl<D: DynamicsModel> CountingDynamics<D> {
    pub fn new(inner: D) -> Self {
        Self {
            inner,
            derivatives: AtomicUsize::new(0),
            jacobians: AtomicUsize::new(0),
        }
    }

    pub fn derivative_calls(&self) -> usize {
        self.derivatives.load(Ordering::Relaxed)
    }

    pub fn jacobian_calls(&self) -> usize {
        self.jacobians.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.derivatives.store(0, Ordering::Relaxed);
        self.jacobians.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &D {
        &self.inner
    }
}

impl<D: DynamicsModel> DynamicsModel for CountingDynamics<D> {
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }
    fn derivative(&self, t: f64, y: &DVector<f64>) -> DVector<f64> {
        self.derivatives.fetch_add(1, Ordering::Relaxed);
        self.inner.derivative(t, y)
    }
    fn jacobian(&self, t: f64, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.jacobians.fetch_add(1, Ordering::Relaxed);
        self.inner.jacobian(t, y)
    }
    fn process_noise(&self) -> &DMatrix<f64> {
        self.inner.process_noise()
    }
}
