//! Order-of-accuracy probes on the benchmark models.

use nalgebra::{DMatrix, DVector};
use spukf_core::diagnostics::{order_probe, ApproxMethod, OrderProbe};
use spukf_core::StateEstimate;
use spukf_scenarios::gnss::{GnssConfig, GnssScenario, SPEED_OF_LIGHT};
use spukf_scenarios::reentry::{simulate_reentry_truth, ReentryConfig, ReentryScenario};
use spukf_scenarios::Scenario;

use crate::campaign::ScenarioId;
use crate::error::Result;

/// Covariance scales `s`, with `P` multiplied by `s²`.
pub fn default_scales() -> Vec<f64> {
    (0..4).map(|k| 0.1 * 0.5f64.powi(k)).collect()
}

/// Re-entry base point: the noise-free trajectory at the end of the run
/// with the initial covariance.
pub fn reentry_probe_base(cfg: &ReentryConfig) -> Result<StateEstimate> {
    let clean = ReentryConfig {
        process_q: [0.0; 3],
        meas_variance: 0.0,
        ..cfg.clone()
    };
    let truth = simulate_reentry_truth(&clean, 0, clean.steps())?;
    let k = truth.states.len() - 1;
    Ok(StateEstimate::new(
        truth.times[k],
        truth.states[k].clone(),
        DMatrix::from_diagonal(&DVector::from_column_slice(&cfg.init_cov)),
    ))
}

/// LEO base point: the initial orbit with the filter's starting covariance.
pub fn gnss_probe_base(cfg: &GnssConfig) -> StateEstimate {
    let [sp, sv, sc] = cfg.init_sigma;
    let sc = sc / SPEED_OF_LIGHT;
    let d = [sp, sp, sp, sv, sv, sv, sc, sc].map(|s| s * s);
    StateEstimate::new(
        0.0,
        cfg.leo_initial_state().to_vector(),
        DMatrix::from_diagonal(&DVector::from_column_slice(&d)),
    )
}

pub fn probe_order(id: ScenarioId, method: ApproxMethod, scales: &[f64]) -> Result<OrderProbe> {
    match id {
        ScenarioId::Reentry => {
            let cfg = ReentryConfig::default();
            let base = reentry_probe_base(&cfg)?;
            let sc = ReentryScenario::new(cfg)?;
            Ok(order_probe(sc.dynamics(), &base, sc.dt(), &sc.filter_config(), method, scales)?)
        }
        ScenarioId::LeoGnss => {
            let cfg = GnssConfig::default();
            let base = gnss_probe_base(&cfg);
            let sc = GnssScenario::new(cfg)?;
            Ok(order_probe(sc.dynamics(), &base, sc.dt(), &sc.filter_config(), method, scales)?)
        }
    }
}
