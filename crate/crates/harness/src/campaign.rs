//! Monte Carlo campaigns: many seeds, several filters, shared truth.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spukf_core::FilterKind;
use spukf_scenarios::export::read_json_config;
use spukf_scenarios::gnss::GnssScenario;
use spukf_scenarios::reentry::ReentryScenario;
use spukf_scenarios::{Scenario, ScenarioData};

use crate::clock::MonotonicClock;
use crate::error::{Error, Result};
use crate::run::{median, run_filter, RunOptions, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioId {
    Reentry,
    LeoGnss,
}

impl ScenarioId {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Reentry => "reentry",
            ScenarioId::LeoGnss => "leo-gnss",
        }
    }

    /// Builds the scenario, reading its JSON config when a path is given.
    pub fn build(self, config: Option<&Path>) -> Result<Box<dyn Scenario>> {
        Ok(match self {
            ScenarioId::Reentry => {
                let cfg = match config {
                    Some(p) => read_json_config(p)?,
                    None => Default::default(),
                };
                Box::new(ReentryScenario::new(cfg)?)
            }
            ScenarioId::LeoGnss => {
                let cfg = match config {
                    Some(p) => read_json_config(p)?,
                    None => Default::default(),
                };
                Box::new(GnssScenario::new(cfg)?)
            }
        })
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reentry" | "re-entry" => Ok(ScenarioId::Reentry),
            "leo-gnss" | "gnss" => Ok(ScenarioId::LeoGnss),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub filters: Vec<FilterKind>,
    pub seeds: Vec<u64>,
    /// Defaults to the scenario's own run length.
    pub steps: Option<usize>,
    /// Run every (seed, filter) pair on one thread so timings do not
    /// contend.
    pub sequential_timing: bool,
    pub options: RunOptions,
}

impl CampaignConfig {
    pub fn new(filters: Vec<FilterKind>, seeds: Vec<u64>) -> Self {
        Self {
            filters,
            seeds,
            steps: None,
            sequential_timing: false,
            options: RunOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut s = self.seeds.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if self.filters.is_empty() {
            return Err(Error::Config("at least one filter is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub filter: FilterKind,
    /// Mean over converged seeds of the steady-state headline error.
    pub mean_err: f64,
    /// Sample standard deviation of the same.
    pub std_err: f64,
    pub mean_step_ns: f64,
    pub median_step_ns: f64,
    /// Per-step time reduction against the UKF, percent.
    pub reduction_pct: Option<f64>,
    pub runs: usize,
    pub diverged: usize,
    pub invariant_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub filter: FilterKind,
    pub mean_step_ns: f64,
    pub median_step_ns: f64,
    pub reduction_pct_mean: f64,
    pub reduction_pct_median: f64,
}

/// Failure to simulate a seed; the remaining seeds still run.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedFailure {
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub scenario: String,
    pub runs: Vec<RunResult>,
    pub summary: Vec<SummaryRow>,
    pub seed_failures: Vec<SeedFailure>,
}

impl Campaign {
    pub fn any_diverged(&self) -> bool {
        self.runs.iter().any(|r| r.diverged) || !self.seed_failures.is_empty()
    }

    pub fn row(&self, filter: FilterKind) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.filter == filter)
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(filters: &[FilterKind], runs: &[RunResult]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = filters
        .iter()
        .map(|&f| {
            let mine: Vec<&RunResult> = runs.iter().filter(|r| r.filter == f).collect();
            let errs: Vec<f64> = mine
                .iter()
                .filter(|r| !r.diverged && r.mean_error.is_finite())
                .map(|r| r.mean_error)
                .collect();
            let (mean_err, std_err) = mean_std(&errs);
            let means: Vec<f64> = mine.iter().map(|r| r.mean_step_ns()).filter(|v| v.is_finite()).collect();
            let medians: Vec<f64> = mine.iter().map(|r| r.median_step_ns()).filter(|v| v.is_finite()).collect();
            SummaryRow {
                filter: f,
                mean_err,
                std_err,
                mean_step_ns: mean_std(&means).0,
                median_step_ns: median(medians),
                reduction_pct: None,
                runs: mine.len(),
                diverged: mine.iter().filter(|r| r.diverged).count(),
                invariant_violations: mine.iter().map(|r| r.invariant_violations).sum(),
            }
        })
        .collect();
    if let Some(base) = rows.iter().find(|r| r.filter == FilterKind::Ukf).map(|r| r.mean_step_ns) {
        if base.is_finite() && base > 0.0 {
            for r in &mut rows {
                if r.mean_step_ns.is_finite() {
                    r.reduction_pct = Some(100.0 * (1.0 - r.mean_step_ns / base));
                }
            }
        }
    }
    rows
}

/// Per-filter reduction against the UKF, from both means and medians.
pub fn timing_report(summary: &[SummaryRow]) -> Result<Vec<TimingRow>> {
    let base = summary
        .iter()
        .find(|r| r.filter == FilterKind::Ukf)
        .ok_or(Error::MissingBaseline)?;
    let pct = |v: f64, b: f64| 100.0 * (1.0 - v / b);
    Ok(summary
        .iter()
        .map(|r| TimingRow {
            filter: r.filter,
            mean_step_ns: r.mean_step_ns,
            median_step_ns: r.median_step_ns,
            reduction_pct_mean: pct(r.mean_step_ns, base.mean_step_ns),
            reduction_pct_median: pct(r.median_step_ns, base.median_step_ns),
        })
        .collect())
}

pub fn monte_carlo(scenario: &dyn Scenario, cfg: &CampaignConfig) -> Result<Campaign> {
    cfg.validate()?;
    let steps = cfg.steps.unwrap_or_else(|| scenario.default_steps());
    let clock = MonotonicClock::new();

    let simulate = |&seed: &u64| (seed, scenario.simulate(seed, steps));
    let sims: Vec<(u64, spukf_scenarios::Result<ScenarioData>)> = if cfg.sequential_timing {
        cfg.seeds.iter().map(simulate).collect()
    } else {
        cfg.seeds.par_iter().map(simulate).collect()
    };

    let mut seed_failures = Vec::new();
    let mut data = Vec::new();
    for (seed, sim) in sims {
        match sim {
            Ok(d) => data.push((seed, d)),
            Err(e) => seed_failures.push(SeedFailure {
                seed,
                message: e.to_string(),
            }),
        }
    }

    let pairs: Vec<(usize, FilterKind)> = (0..data.len())
        .flat_map(|i| cfg.filters.iter().map(move |&f| (i, f)))
        .collect();
    let run = |&(i, f): &(usize, FilterKind)| {
        let (seed, d) = &data[i];
        run_filter(scenario, d, f, *seed, Some(&clock), &cfg.options)
    };
    let runs: Vec<RunResult> = if cfg.sequential_timing {
        pairs.iter().map(run).collect()
    } else {
        pairs.par_iter().map(run).collect()
    };

    let summary = summarize(&cfg.filters, &runs);
    Ok(Campaign {
        scenario: scenario.name().to_string(),
        runs,
        summary,
        seed_failures,
    })
}
