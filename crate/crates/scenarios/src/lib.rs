//! Benchmark problems for the sigma-point filters: radar tracking of a
//! ballistic re-entry vehicle and GNSS positioning of a low Earth orbiter.

pub mod error;
pub mod export;
pub mod gnss;
pub mod gravity;
pub mod reentry;
pub mod scenario;

pub use error::{Error, Result};
pub use scenario::{Epoch, Scenario, ScenarioData};
