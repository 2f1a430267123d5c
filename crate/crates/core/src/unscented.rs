//! Unscented transform: sigma-point sets and weighted moments.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{cholesky_factor, symmetrize};

/// Weighted deterministic samples of a Gaussian.
///
/// `offsets[i] = points[i] - points[0]` is stored at generation time so
/// that the single-propagation filters can reuse it without cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPointSet {
    pub points: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
    pub offsets: Vec<DVector<f64>>,
    /// Spread parameter; `None` for simplex sets.
    pub kappa: Option<f64>,
}

impl SigmaPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    /// Same weights and offsets, new (transformed) points.
    pub fn with_points(&self, points: Vec<DVector<f64>>) -> Self {
        Self {
            points,
            weights: self.weights.clone(),
            offsets: self.offsets.clone(),
            kappa: self.kappa,
        }
    }

    pub fn mean(&self) -> Result<DVector<f64>> {
        ut_mean(&self.points, &self.weights)
    }

    pub fn covariance(&self, mean: &DVector<f64>) -> Result<DMatrix<f64>> {
        ut_covariance(&self.points, &self.weights, mean)
    }
}

/// Standard `2n + 1` point set with `W0 = κ/(n+κ)`, `Wi = 1/(2(n+κ))`.
pub fn generate_sigma_points(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    kappa: f64,
) -> Result<SigmaPointSet> {
    let n = mean.len();
    check_cov_dim(n, cov)?;
    let lambda = n as f64 + kappa;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "n + kappa must be positive, got {lambda}"
        )));
    }
    if kappa < 0.0 {
        log::warn!("negative centre weight (kappa = {kappa}); covariance may lose definiteness");
    }
    let l = cholesky_factor(cov, lambda)?;

    let count = 2 * n + 1;
    let mut points = Vec::with_capacity(count);
    let mut offsets = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);

    points.push(mean.clone());
    offsets.push(DVector::zeros(n));
    weights.push(kappa / lambda);
    let wi = 0.5 / lambda;
    for sign in [1.0, -1.0] {
        for i in 0..n {
            let d: DVector<f64> = l.column(i) * sign;
            points.push(mean + &d);
            offsets.push(d);
            weights.push(wi);
        }
    }
    Ok(SigmaPointSet {
        points,
        weights,
        offsets,
        kappa: Some(kappa),
    })
}

/// Unit spherical-simplex points in `n` dimensions (columns), `n + 2` of them.
pub fn unit_simplex(n: usize, w0: f64) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&w0) {
        return Err(Error::InvalidParameter(format!(
            "simplex w0 must lie in [0, 1), got {w0}"
        )));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 2));
    }
    let w1 = (1.0 - w0) / (n as f64 + 1.0);
    let mut x = DMatrix::<f64>::zeros(n, n + 2);
    let a = 1.0 / (2.0 * w1).sqrt();
    x[(0, 1)] = -a;
    x[(0, 2)] = a;
    for j in 2..=n {
        let jf = j as f64;
        let s = 1.0 / (jf * (jf + 1.0) * w1).sqrt();
        let row = j - 1;
        for i in 1..=j {
            x[(row, i)] = -s;
        }
        x[(row, j + 1)] = jf * s;
    }
    Ok(x)
}

/// Spherical-simplex set: `n + 2` points, `Wi = (1 - w0)/(n + 1)` for `i ≥ 1`.
pub fn generate_simplex_sigma_points(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    w0: f64,
) -> Result<SigmaPointSet> {
    let n = mean.len();
    check_cov_dim(n, cov)?;
    let unit = unit_simplex(n, w0)?;
    let l = cholesky_factor(cov, 1.0)?;
    let scaled = &l * &unit;

    let w1 = (1.0 - w0) / (n as f64 + 1.0);
    let mut points = Vec::with_capacity(n + 2);
    let mut offsets = Vec::with_capacity(n + 2);
    let mut weights = Vec::with_capacity(n + 2);
    for i in 0..n + 2 {
        let d: DVector<f64> = scaled.column(i).into_owned();
        points.push(mean + &d);
        offsets.push(d);
        weights.push(if i == 0 { w0 } else { w1 });
    }
    Ok(SigmaPointSet {
        points,
        weights,
        offsets,
        kappa: None,
    })
}

fn check_cov_dim(n: usize, cov: &DMatrix<f64>) -> Result<()> {
    if cov.nrows() != n || cov.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "covariance",
            expected: n,
            found: if cov.nrows() != n { cov.nrows() } else { cov.ncols() },
        });
    }
    Ok(())
}

fn check_aligned(points: usize, weights: usize) -> Result<()> {
    if points == 0 || points != weights {
        return Err(Error::DimensionMismatch {
            what: "sigma weights",
            expected: points,
            found: weights,
        });
    }
    Ok(())
}

/// `Σ Wi Yi`.
pub fn ut_mean(points: &[DVector<f64>], weights: &[f64]) -> Result<DVector<f64>> {
    check_aligned(points.len(), weights.len())?;
    let n = points[0].len();
    let mut m = DVector::zeros(n);
    for (p, &w) in points.iter().zip(weights) {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                what: "sigma point",
                expected: n,
                found: p.len(),
            });
        }
        m.axpy(w, p, 1.0);
    }
    Ok(m)
}

/// `Σ Wi (Yi - m)(Yi - m)ᵀ`, symmetrized.
pub fn ut_covariance(
    points: &[DVector<f64>],
    weights: &[f64],
    mean: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let mut c = ut_cross_covariance(points, points, mean, mean, weights)?;
    symmetrize(&mut c);
    Ok(c)
}

/// `Σ Wi (Yi - ŷ)(Zi - ẑ)ᵀ`.
pub fn ut_cross_covariance(
    state_points: &[DVector<f64>],
    meas_points: &[DVector<f64>],
    state_mean: &DVector<f64>,
    meas_mean: &DVector<f64>,
    weights: &[f64],
) -> Result<DMatrix<f64>> {
    check_aligned(state_points.len(), weights.len())?;
    check_aligned(meas_points.len(), weights.len())?;
    let n = state_mean.len();
    let m = meas_mean.len();
    let mut c = DMatrix::zeros(n, m);
    for ((y, z), &w) in state_points.iter().zip(meas_points).zip(weights) {
        if y.len() != n || z.len() != m {
            return Err(Error::DimensionMismatch {
                what: "sigma point",
                expected: if y.len() != n { n } else { m },
                found: if y.len() != n { y.len() } else { z.len() },
            });
        }
        let dy = y - state_mean;
        let dz = z - meas_mean;
        c.ger(w, &dy, &dz, 1.0);
    }
    Ok(c)
}

/// Stacks `(mean; 0)` and `[[P, C], [Cᵀ, Q]]`.
pub fn augment_state(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    q: &DMatrix<f64>,
    cross: Option<&DMatrix<f64>>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = mean.len();
    check_cov_dim(n, cov)?;
    let k = q.nrows();
    if q.ncols() != k {
        return Err(Error::NotSquare {
            rows: q.nrows(),
            cols: q.ncols(),
        });
    }
    if let Some(c) = cross {
        if c.nrows() != n || c.ncols() != k {
            return Err(Error::DimensionMismatch {
                what: "cross covariance",
                expected: n * k,
                found: c.nrows() * c.ncols(),
            });
        }
    }
    let mut m = DVector::zeros(n + k);
    m.rows_mut(0, n).copy_from(mean);
    let mut p = DMatrix::zeros(n + k, n + k);
    p.view_mut((0, 0), (n, n)).copy_from(cov);
    p.view_mut((n, n), (k, k)).copy_from(q);
    if let Some(c) = cross {
        p.view_mut((0, n), (n, k)).copy_from(c);
        p.view_mut((n, 0), (k, n)).copy_from(&c.transpose());
    }
    Ok((m, p))
}
