use std::sync::Arc;

use nalgebra::DVector;
use spukf_core::{DynamicsModel, FilterConfig, MeasurementModel, StateEstimate};

use crate::error::Result;

/// One filter interval: the measurement at `t` and the truth it came from.
#[derive(Clone)]
pub struct Epoch {
    pub t: f64,
    pub z: DVector<f64>,
    pub model: Arc<dyn MeasurementModel>,
    pub truth: DVector<f64>,
}

/// A simulated run shared by every filter under test.
#[derive(Clone)]
pub struct ScenarioData {
    pub initial: StateEstimate,
    pub initial_truth: DVector<f64>,
    pub epochs: Vec<Epoch>,
}

pub trait Scenario: Send + Sync {
    fn name(&self) -> &str;

    fn dynamics(&self) -> &dyn DynamicsModel;

    fn filter_config(&self) -> FilterConfig;

    /// Filter interval in seconds.
    fn dt(&self) -> f64;

    fn default_steps(&self) -> usize;

    /// Deterministic in `seed`.
    fn simulate(&self, seed: u64, steps: usize) -> Result<ScenarioData>;

    /// Scalar error reported in summaries (altitude or 3D position).
    fn headline_error(&self, err: &DVector<f64>) -> f64;

    /// `[start, end]` in seconds over which the headline error is averaged.
    fn steady_state_window(&self) -> (f64, f64);

    /// Names of the error components written to per-run CSV files.
    fn component_names(&self) -> Vec<String>;
}
