//! Single-filter runs over a simulated scenario.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use spukf_core::filters::kalman_update;
use spukf_core::numerics::{check_symmetric, cholesky_factor};
use spukf_core::{FilterKind, StateEstimate};
use spukf_scenarios::{Scenario, ScenarioData};

use crate::clock::Clock;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Leading steps left out of timing statistics.
    pub warmup_steps: usize,
    /// Error-vector norm beyond which a run is declared diverged.
    pub divergence_threshold: f64,
    /// Check posterior covariance symmetry and PSD after every step.
    pub check_invariants: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            warmup_steps: 10,
            divergence_threshold: 1e9,
            check_invariants: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub filter: FilterKind,
    pub seed: u64,
    pub times: Vec<f64>,
    /// `truth − estimate` after each update.
    pub errors: Vec<DVector<f64>>,
    /// Scenario headline error per step.
    pub headline: Vec<f64>,
    /// Wall-clock predict + update per step; empty when untimed.
    pub step_ns: Vec<u64>,
    /// Mean headline error over the steady-state window.
    pub mean_error: f64,
    pub diverged: bool,
    pub failure: Option<String>,
    /// Steps whose posterior covariance was asymmetric or not PSD.
    pub invariant_violations: usize,
    pub warmup_steps: usize,
    pub final_estimate: Option<StateEstimate>,
}

impl RunResult {
    fn timed(&self) -> &[u64] {
        let skip = self.warmup_steps.min(self.step_ns.len().saturating_sub(1));
        &self.step_ns[skip..]
    }

    /// Mean per-step time after warmup, ns.
    pub fn mean_step_ns(&self) -> f64 {
        let s = self.timed();
        if s.is_empty() {
            return f64::NAN;
        }
        s.iter().map(|&v| v as f64).sum::<f64>() / s.len() as f64
    }

    pub fn median_step_ns(&self) -> f64 {
        median(self.timed().iter().map(|&v| v as f64).collect())
    }
}

pub(crate) fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn covariance_ok(est: &StateEstimate) -> bool {
    check_symmetric(&est.cov, 1e-9).is_ok() && cholesky_factor(&est.cov, 1.0).is_ok()
}

/// Steps `filter` through `data`. Only predict + update sit inside the
/// timed region.
pub fn run_filter(
    scenario: &dyn Scenario,
    data: &ScenarioData,
    filter: FilterKind,
    seed: u64,
    clock: Option<&dyn Clock>,
    opts: &RunOptions,
) -> RunResult {
    let cfg = scenario.filter_config();
    let dynamics = scenario.dynamics();
    let (win_start, win_end) = scenario.steady_state_window();
    let n = data.epochs.len();

    let mut res = RunResult {
        filter,
        seed,
        times: Vec::with_capacity(n),
        errors: Vec::with_capacity(n),
        headline: Vec::with_capacity(n),
        step_ns: Vec::with_capacity(if clock.is_some() { n } else { 0 }),
        mean_error: f64::NAN,
        diverged: false,
        failure: None,
        invariant_violations: 0,
        warmup_steps: opts.warmup_steps,
        final_estimate: None,
    };

    let mut est = data.initial.clone();
    for epoch in &data.epochs {
        let dt = epoch.t - est.t;
        let start = clock.map(|c| c.now_ns());
        let next = filter
            .predict(dynamics, epoch.model.as_ref(), &est, dt, &cfg)
            .and_then(|pred| kalman_update(&pred, &epoch.z));
        if let (Some(c), Some(t0)) = (clock, start) {
            res.step_ns.push(c.now_ns() - t0);
        }

        est = match next {
            Ok(e) => e,
            Err(e) => {
                res.diverged = true;
                res.failure = Some(format!("t = {}: {e}", epoch.t));
                break;
            }
        };
        if opts.check_invariants && !covariance_ok(&est) {
            res.invariant_violations += 1;
        }

        let err = &epoch.truth - &est.mean;
        let norm = err.norm();
        res.times.push(epoch.t);
        res.headline.push(scenario.headline_error(&err));
        res.errors.push(err);
        if !(norm <= opts.divergence_threshold) {
            res.diverged = true;
            res.failure = Some(format!("t = {}: error norm {norm:e}", epoch.t));
            break;
        }
    }

    let window: Vec<f64> = res
        .times
        .iter()
        .zip(&res.headline)
        .filter(|(t, _)| **t >= win_start && **t <= win_end)
        .map(|(_, e)| *e)
        .collect();
    if !window.is_empty() {
        res.mean_error = window.iter().sum::<f64>() / window.len() as f64;
    }
    res.final_estimate = Some(est);
    res
}

/// Simulates `seed` and runs one filter over it.
pub fn run_scenario(
    scenario: &dyn Scenario,
    filter: FilterKind,
    seed: u64,
    steps: usize,
    clock: Option<&dyn Clock>,
    opts: &RunOptions,
) -> Result<RunResult> {
    let data = scenario.simulate(seed, steps)?;
    Ok(run_filter(scenario, &data, filter, seed, clock, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{MockClock, MonotonicClock};
    use spukf_scenarios::reentry::{ReentryConfig, ReentryScenario};

    fn reentry() -> ReentryScenario {
        ReentryScenario::new(ReentryConfig::default()).unwrap()
    }

    #[test]
    fn repeat_runs_give_identical_errors() {
        let sc = reentry();
        let clock = MonotonicClock::new();
        let opts = RunOptions::default();
        let a = run_scenario(&sc, FilterKind::Ukf, 3, 200, Some(&clock), &opts).unwrap();
        let b = run_scenario(&sc, FilterKind::Ukf, 3, 200, None, &opts).unwrap();
        assert_eq!(a.errors, b.errors);
        assert_eq!(a.errors.len(), 200);
        assert_eq!(a.step_ns.len(), 200);
        assert!(b.step_ns.is_empty());
        assert!(!a.diverged);
        assert_eq!(a.invariant_violations, 0);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(vec![]).is_nan());
    }

    #[test]
    fn warmup_excluded_from_timing() {
        let mut r = run_scenario(&reentry(), FilterKind::Ekf, 1, 20, Some(&MockClock::new()), &RunOptions::default())
            .unwrap();
        r.step_ns = (0..20).map(|k| if k < 10 { 1000 } else { 10 }).collect();
        assert_eq!(r.mean_step_ns(), 10.0);
        assert_eq!(r.median_step_ns(), 10.0);
    }
}
