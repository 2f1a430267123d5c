//! Analytic propagation-cost model.
//!
//! Costs are upper bounds in units of the slowest basic scalar operation.
//! `n` is the state dimension, `j` the cost of one evaluation of the
//! dynamics function and `h` the number of RK4 substeps per interval.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CostModelParams {
    pub n: u32,
    pub j: u32,
    pub h: u32,
}

impl CostModelParams {
    pub fn new(n: u32, j: u32, h: u32) -> Result<Self> {
        if n == 0 || j == 0 || h == 0 {
            return Err(Error::InvalidParameter(format!(
                "cost model parameters must be at least 1 (n = {n}, j = {j}, h = {h})"
            )));
        }
        Ok(Self { n, j, h })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostAlgo {
    Ukf,
    Spukf,
    Espukf,
}

impl CostAlgo {
    pub const ALL: [CostAlgo; 3] = [CostAlgo::Ukf, CostAlgo::Spukf, CostAlgo::Espukf];

    pub fn name(self) -> &'static str {
        match self {
            CostAlgo::Ukf => "ukf",
            CostAlgo::Spukf => "spukf",
            CostAlgo::Espukf => "espukf",
        }
    }
}

impl fmt::Display for CostAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ukf" => Ok(CostAlgo::Ukf),
            "spukf" => Ok(CostAlgo::Spukf),
            "espukf" => Ok(CostAlgo::Espukf),
            other => Err(Error::InvalidParameter(format!("unknown cost model '{other}'"))),
        }
    }
}

fn as_f64(p: CostModelParams) -> (f64, f64, f64) {
    (p.n as f64, p.j as f64, p.h as f64)
}

/// Upper bound on one propagation step.
pub fn cost_bound(algo: CostAlgo, p: CostModelParams) -> f64 {
    let (n, j, h) = as_f64(p);
    match algo {
        CostAlgo::Ukf => 26.0 * h * n * n + (8.0 * h * j + 23.0 * h) * n + 4.0 * h * j + 5.0 * h,
        CostAlgo::Spukf => {
            5.0 * n.powi(3)
                + 4.0 * n * n
                + (13.0 * h + j + 3.0) * n
                + 4.0 * h * j
                + 5.0 * h
        }
        CostAlgo::Espukf => {
            6.0 * n.powi(4)
                + 11.0 * n.powi(3)
                + (2.0 * j + 18.0) * n * n
                + (13.0 * h + 3.0 * j + 4.0) * n
                + 4.0 * h * j
                + 5.0 * h
        }
    }
}

/// `t_UKF − t_algo`, written out as the reduced polynomial.
fn saving(algo: CostAlgo, n: f64, j: f64, h: f64) -> f64 {
    match algo {
        CostAlgo::Ukf => 0.0,
        CostAlgo::Spukf => {
            (26.0 * h - 4.0) * n * n + (8.0 * h * j + 10.0 * h - j - 3.0) * n - 5.0 * n.powi(3)
        }
        CostAlgo::Espukf => {
            (26.0 * h - 2.0 * j - 18.0) * n * n + (8.0 * h * j + 10.0 * h - 3.0 * j - 4.0) * n
                - 6.0 * n.powi(4)
                - 11.0 * n.powi(3)
        }
    }
}

/// Predicted percentage reduction against the UKF bound; negative when slower.
pub fn reduction_percent(algo: CostAlgo, p: CostModelParams) -> f64 {
    let (n, j, h) = as_f64(p);
    saving(algo, n, j, h) / cost_bound(CostAlgo::Ukf, p) * 100.0
}

const LIMIT_BRACKET_MAX: f64 = 1e6;

/// Positive state dimension at which the predicted reduction falls to zero.
pub fn state_dim_limit(algo: CostAlgo, j: u32, h: u32) -> Result<f64> {
    if j == 0 || h == 0 {
        return Err(Error::InvalidParameter("j and h must be at least 1".into()));
    }
    let (jf, hf) = (j as f64, h as f64);
    // The saving has a factor of n; the remaining polynomial keeps the sign.
    let q = |n: f64| match algo {
        CostAlgo::Ukf => f64::NAN,
        _ => saving(algo, n, jf, hf) / n,
    };
    let q_at = |n: f64| if n == 0.0 { q(f64::MIN_POSITIVE.sqrt()) } else { q(n) };

    let mut lo = 0.0;
    let mut hi = 1.0;
    let start = q_at(lo);
    if !start.is_finite() {
        return Err(Error::NoPositiveRoot { j, h });
    }
    while q_at(hi).signum() == start.signum() {
        lo = hi;
        hi *= 2.0;
        if hi > LIMIT_BRACKET_MAX {
            return Err(Error::NoPositiveRoot { j, h });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q_at(mid).signum() == start.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u32, j: u32, h: u32) -> CostModelParams {
        CostModelParams::new(n, j, h).unwrap()
    }

    #[test]
    fn unit_bounds() {
        assert_eq!(cost_bound(CostAlgo::Ukf, p(1, 1, 1)), 66.0);
        assert_eq!(cost_bound(CostAlgo::Spukf, p(1, 1, 1)), 35.0);
        assert_eq!(cost_bound(CostAlgo::Espukf, p(1, 1, 1)), 66.0);
    }

    #[test]
    fn unit_reductions() {
        assert!((reduction_percent(CostAlgo::Spukf, p(1, 1, 1)) - 3100.0 / 66.0).abs() < 1e-12);
        assert_eq!(reduction_percent(CostAlgo::Espukf, p(1, 1, 1)), 0.0);
        assert_eq!(reduction_percent(CostAlgo::Ukf, p(3, 2, 2)), 0.0);
    }

    #[test]
    fn spukf_limit_matches_quadratic_formula() {
        let oracle = (22.0 + (22.0f64 * 22.0 + 4.0 * 5.0 * 14.0).sqrt()) / 10.0;
        let lim = state_dim_limit(CostAlgo::Spukf, 1, 1).unwrap();
        assert!((lim - oracle).abs() < 1e-9);
    }

    #[test]
    fn reduction_changes_sign_at_limit() {
        for algo in [CostAlgo::Spukf, CostAlgo::Espukf] {
            for (j, h) in [(1, 1), (10, 2), (100, 10)] {
                let lim = state_dim_limit(algo, j, h).unwrap();
                let below = lim.floor() as u32;
                // An integer root sits exactly at zero reduction.
                if below >= 1 && lim.fract() > 1e-9 {
                    assert!(reduction_percent(algo, p(below, j, h)) > 0.0);
                }
                assert!(reduction_percent(algo, p(lim.ceil() as u32 + 1, j, h)) < 0.0);
            }
        }
    }

    #[test]
    fn large_problems_exceed_ninety_percent() {
        assert!(reduction_percent(CostAlgo::Spukf, p(10, 1000, 10)) > 90.0);
        assert!(reduction_percent(CostAlgo::Spukf, p(1, 1, 1)) < 50.0);
    }

    #[test]
    fn unit_espukf_limit_is_one() {
        // 6 + 11 - 6n^3 - 11n^2 + 6n vanishes at n = 1.
        let lim = state_dim_limit(CostAlgo::Espukf, 1, 1).unwrap();
        assert!((lim - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_zero_params() {
        assert!(CostModelParams::new(0, 1, 1).is_err());
        assert!(state_dim_limit(CostAlgo::Spukf, 0, 1).is_err());
        assert!(matches!(
            state_dim_limit(CostAlgo::Ukf, 1, 1),
            Err(Error::NoPositiveRoot { .. })
        ));
    }
}
