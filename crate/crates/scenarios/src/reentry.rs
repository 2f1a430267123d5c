//! Vertically falling body tracked by a ground radar.
//!
//! State: altitude `x1` (ft), downward speed `x2` (ft/s) and ballistic
//! coefficient `x3`. The radar sits `M` ft downrange at altitude `H`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use spukf_core::numerics::{cholesky_factor, rk4_propagate};
use spukf_core::{DynamicsModel, FilterConfig, MeasurementModel, StateEstimate};

use crate::error::{Error, Result};
use crate::scenario::{Epoch, Scenario, ScenarioData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReentryConfig {
    /// Density decay rate, 1/ft.
    pub lambda_coeff: f64,
    /// Radar altitude `H`, ft.
    pub radar_altitude: f64,
    /// Radar horizontal offset `M`, ft.
    pub radar_offset: f64,
    pub true_initial_state: [f64; 3],
    pub init_estimate: [f64; 3],
    /// Diagonal of the initial covariance.
    pub init_cov: [f64; 3],
    /// Diagonal of the per-step process noise covariance.
    pub process_q: [f64; 3],
    /// Range noise variance, ft².
    pub meas_variance: f64,
    /// Filter interval, s.
    pub dt: f64,
    /// Run length, s.
    pub duration: f64,
    /// RK4 substeps per interval for the truth trajectory.
    pub truth_substeps: usize,
    pub steady_state_start: f64,
    pub steady_state_end: f64,
    pub filter: FilterConfig,
}

impl Default for ReentryConfig {
    fn default() -> Self {
        Self {
            lambda_coeff: 5e-5,
            radar_altitude: 1e5,
            radar_offset: 1e5,
            true_initial_state: [3e5, 2e4, 1e-3],
            init_estimate: [3e5, 2e4, 3e-5],
            init_cov: [1e6, 4e6, 1e-4],
            process_q: [1e-30; 3],
            meas_variance: 1e4,
            dt: 0.5,
            duration: 1000.0,
            truth_substeps: 10,
            steady_state_start: 200.0,
            steady_state_end: 1000.0,
            filter: FilterConfig {
                kappa: 0.0,
                substeps: 2,
                ..FilterConfig::default()
            },
        }
    }
}

impl ReentryConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_coeff", self.lambda_coeff),
            ("radar_altitude", self.radar_altitude),
            ("radar_offset", self.radar_offset),
            ("dt", self.dt),
            ("duration", self.duration),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.meas_variance >= 0.0) {
            return Err(Error::Config("meas_variance must be nonnegative".into()));
        }
        if self.init_cov.iter().chain(&self.process_q).any(|v| !(*v >= 0.0)) {
            return Err(Error::Config("covariance diagonals must be nonnegative".into()));
        }
        if self.truth_substeps == 0 {
            return Err(Error::Config("truth_substeps must be at least 1".into()));
        }
        self.filter.validate(3).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// `(−x2, −e^{−λ x1} x2² x3, 0)`.
pub fn reentry_dynamics(x: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let drag = (-lambda * x[0]).exp() * x[1] * x[1] * x[2];
    DVector::from_vec(vec![-x[1], -drag, 0.0])
}

pub fn reentry_jacobian(x: &DVector<f64>, lambda: f64) -> DMatrix<f64> {
    let e = (-lambda * x[0]).exp();
    DMatrix::from_row_slice(
        3,
        3,
        &[
            0.0,
            -1.0,
            0.0,
            lambda * e * x[1] * x[1] * x[2],
            -2.0 * e * x[1] * x[2],
            -e * x[1] * x[1],
            0.0,
            0.0,
            0.0,
        ],
    )
}

/// `√(M² + (x1 − H)²)`.
pub fn radar_range(x: &DVector<f64>, cfg: &ReentryConfig) -> f64 {
    cfg.radar_offset.hypot(x[0] - cfg.radar_altitude)
}

#[derive(Debug, Clone)]
pub struct ReentryDynamics {
    pub lambda: f64,
    pub q: DMatrix<f64>,
}

impl DynamicsModel for ReentryDynamics {
    fn state_dim(&self) -> usize {
        3
    }
    fn derivative(&self, _t: f64, y: &DVector<f64>) -> DVector<f64> {
        reentry_dynamics(y, self.lambda)
    }
    fn jacobian(&self, _t: f64, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(reentry_jacobian(y, self.lambda))
    }
    fn process_noise(&self) -> &DMatrix<f64> {
        &self.q
    }
}

#[derive(Debug, Clone)]
pub struct RadarRange {
    pub cfg: ReentryConfig,
    r: DMatrix<f64>,
}

impl RadarRange {
    pub fn new(cfg: &ReentryConfig) -> Self {
        Self {
            cfg: cfg.clone(),
            r: DMatrix::from_element(1, 1, cfg.meas_variance),
        }
    }
}

impl MeasurementModel for RadarRange {
    fn meas_dim(&self) -> usize {
        1
    }
    fn measure(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, radar_range(y, &self.cfg))
    }
    fn jacobian(&self, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        let r = radar_range(y, &self.cfg);
        Some(DMatrix::from_row_slice(
            1,
            3,
            &[(y[0] - self.cfg.radar_altitude) / r, 0.0, 0.0],
        ))
    }
    fn noise_cov(&self) -> &DMatrix<f64> {
        &self.r
    }
}

/// Truth states at `k · dt` for `k = 0..=steps` and the ranges at `k ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReentryTruth {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub ranges: Vec<f64>,
}

pub fn simulate_reentry_truth(cfg: &ReentryConfig, seed: u64, steps: usize) -> Result<ReentryTruth> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q_sqrt = cholesky_factor(&DMatrix::from_diagonal(&DVector::from_column_slice(&cfg.process_q)), 1.0)?;
    let sigma = cfg.meas_variance.sqrt();
    let lambda = cfg.lambda_coeff;

    let mut x = DVector::from_column_slice(&cfg.true_initial_state);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut ranges = Vec::with_capacity(steps);
    times.push(0.0);
    states.push(x.clone());
    for k in 1..=steps {
        let t0 = (k - 1) as f64 * cfg.dt;
        x = rk4_propagate(|_, y| reentry_dynamics(y, lambda), &x, t0, cfg.dt, cfg.truth_substeps)?;
        let w = DVector::<f64>::from_fn(3, |_, _| StandardNormal.sample(&mut rng));
        x += &q_sqrt * w;
        let v: f64 = StandardNormal.sample(&mut rng);
        ranges.push(radar_range(&x, cfg) + sigma * v);
        times.push(k as f64 * cfg.dt);
        states.push(x.clone());
    }
    Ok(ReentryTruth {
        times,
        states,
        ranges,
    })
}

pub struct ReentryScenario {
    pub cfg: ReentryConfig,
    dynamics: ReentryDynamics,
    radar: Arc<RadarRange>,
}

impl ReentryScenario {
    pub fn new(cfg: ReentryConfig) -> Result<Self> {
        cfg.validate()?;
        let dynamics = ReentryDynamics {
            lambda: cfg.lambda_coeff,
            q: DMatrix::from_diagonal(&DVector::from_column_slice(&cfg.process_q)),
        };
        let radar = Arc::new(RadarRange::new(&cfg));
        Ok(Self {
            cfg,
            dynamics,
            radar,
        })
    }

    pub fn initial_estimate(&self) -> StateEstimate {
        StateEstimate::new(
            0.0,
            DVector::from_column_slice(&self.cfg.init_estimate),
            DMatrix::from_diagonal(&DVector::from_column_slice(&self.cfg.init_cov)),
        )
    }
}

impl Scenario for ReentryScenario {
    fn name(&self) -> &str {
        "reentry"
    }

    fn dynamics(&self) -> &dyn DynamicsModel {
        &self.dynamics
    }

    fn filter_config(&self) -> FilterConfig {
        self.cfg.filter
    }

    fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn default_steps(&self) -> usize {
        self.cfg.steps()
    }

    fn simulate(&self, seed: u64, steps: usize) -> Result<ScenarioData> {
        let truth = simulate_reentry_truth(&self.cfg, seed, steps)?;
        let radar: Arc<dyn MeasurementModel> = self.radar.clone();
        let epochs = (1..=steps)
            .map(|k| Epoch {
                t: truth.times[k],
                z: DVector::from_element(1, truth.ranges[k - 1]),
                model: radar.clone(),
                truth: truth.states[k].clone(),
            })
            .collect();
        Ok(ScenarioData {
            initial: self.initial_estimate(),
            initial_truth: truth.states[0].clone(),
            epochs,
        })
    }

    fn headline_error(&self, err: &DVector<f64>) -> f64 {
        err[0].abs()
    }

    fn steady_state_window(&self) -> (f64, f64) {
        (self.cfg.steady_state_start, self.cfg.steady_state_end)
    }

    fn component_names(&self) -> Vec<String> {
        vec!["altitude".into(), "velocity".into(), "ballistic".into()]
    }
}
