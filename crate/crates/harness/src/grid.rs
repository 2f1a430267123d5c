//! Cost-model grids over `(n, j, h)`.

use serde::{Deserialize, Serialize};
use spukf_core::complexity::{cost_bound, reduction_percent, state_dim_limit, CostAlgo, CostModelParams};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub algo: CostAlgo,
    pub n: u32,
    pub j: u32,
    pub h: u32,
    pub cost_bound: f64,
    pub reduction_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub algo: CostAlgo,
    pub j: u32,
    pub h: u32,
    /// Largest state dimension with a positive saving; absent when none exists.
    pub state_dim_limit: Option<f64>,
}

pub fn complexity_grid(n_max: u32, js: &[u32], hs: &[u32]) -> Result<(Vec<GridRow>, Vec<LimitRow>)> {
    let mut rows = Vec::new();
    let mut limits = Vec::new();
    for &j in js {
        for &h in hs {
            for n in 1..=n_max {
                let p = CostModelParams::new(n, j, h)?;
                for algo in CostAlgo::ALL {
                    rows.push(GridRow {
                        algo,
                        n,
                        j,
                        h,
                        cost_bound: cost_bound(algo, p),
                        reduction_percent: reduction_percent(algo, p),
                    });
                }
            }
            for algo in [CostAlgo::Spukf, CostAlgo::Espukf] {
                limits.push(LimitRow {
                    algo,
                    j,
                    h,
                    state_dim_limit: state_dim_limit(algo, j, h).ok(),
                });
            }
        }
    }
    Ok((rows, limits))
}
