//! Monte Carlo accuracy and timing harness for the sigma-point filters.

pub mod campaign;
pub mod clock;
pub mod error;
pub mod grid;
pub mod output;
pub mod probe;
pub mod run;

pub use campaign::{monte_carlo, CampaignConfig, ScenarioId, SummaryRow};
pub use error::{Error, Result};
pub use run::{run_filter, run_scenario, RunOptions, RunResult};
