//! Dense linear algebra and integration primitives.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots below `-PIVOT_TOLERANCE * max_diag` are treated as indefinite.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Relative tolerance on `|p_ij - p_ji|` accepted by [`cholesky_factor`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Relative central-difference step used by [`default_fd_steps`].
pub const FD_RELATIVE_STEP: f64 = 1e-6;

fn require_square(a: &DMatrix<f64>) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Checks symmetry relative to the largest entry magnitude.
pub fn check_symmetric(p: &DMatrix<f64>, rel_tol: f64) -> Result<()> {
    let n = require_square(p)?;
    let scale = p.amax();
    for i in 0..n {
        for j in (i + 1)..n {
            if (p[(i, j)] - p[(j, i)]).abs() > rel_tol * scale {
                return Err(Error::Asymmetric { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Lower-triangular `L` with `L Lᵀ = scale · p`.
///
/// Semi-definite input is tolerated: a pivot that collapses to zero (relative
/// to its own diagonal entry) produces a zero column. A pivot below
/// `-1e-12 · max diag` is reported as [`Error::NotPositiveDefinite`].
pub fn cholesky_factor(p: &DMatrix<f64>, scale: f64) -> Result<DMatrix<f64>> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cholesky scale must be positive, got {scale}"
        )));
    }
    check_symmetric(p, SYMMETRY_TOLERANCE)?;
    let n = p.nrows();
    let max_diag = (0..n).map(|i| p[(i, i)].abs()).fold(0.0, f64::max) * scale;
    let mut l = DMatrix::<f64>::zeros(n, n);

    for j in 0..n {
        let ajj = scale * p[(j, j)];
        let mut d = ajj;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -PIVOT_TOLERANCE * max_diag {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        // Rounding residue of a dependent column.
        if d <= 64.0 * f64::EPSILON * ajj.abs() {
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = scale * p[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.539398330063230e-1,
    9.504178996162932e-1,
    2.097847961257068,
    5.371920351148152,
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Padé numerator/denominator pieces `(U, V)` for degrees 3 to 9.
fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let a2 = a * a;
    let mut u = DMatrix::<f64>::identity(n, n) * b[1];
    let mut v = DMatrix::<f64>::identity(n, n) * b[0];
    let mut pow = DMatrix::<f64>::identity(n, n);
    let m = (b.len() - 1) / 2;
    for k in 1..=m {
        pow = &pow * &a2;
        u += &pow * b[2 * k + 1];
        v += &pow * b[2 * k];
    }
    (a * u, v)
}

fn pade13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let b = &B13;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    (u, v)
}

/// Power-of-two diagonal `d` with `D⁻¹ a D` of smaller off-diagonal norm.
/// A row or column with zero off-diagonal part lets its partner be scaled
/// down to unit size freely.
fn balance(a: &mut DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut d = vec![1.0; n];
    for _ in 0..64 {
        let mut changed = false;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&j| j != i).map(|j| a[(j, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            let f = if c == 0.0 && r == 0.0 {
                continue;
            } else if r == 0.0 {
                if c <= 1.0 {
                    continue;
                }
                2f64.powi(-(c.log2().ceil() as i32))
            } else if c == 0.0 {
                if r <= 1.0 {
                    continue;
                }
                2f64.powi(r.log2().ceil() as i32)
            } else {
                let f = 2f64.powi(((r / c).log2() / 2.0).round() as i32);
                if c * f + r / f >= 0.95 * (c + r) {
                    continue;
                }
                f
            };
            if f == 1.0 {
                continue;
            }
            for j in 0..n {
                if j != i {
                    a[(j, i)] *= f;
                    a[(i, j)] /= f;
                }
            }
            d[i] *= f;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    d
}

/// `e^{a t}` by balancing, then scaling and squaring with a Padé approximant.
pub fn matrix_exp(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let n = require_square(a)?;
    if t == 0.0 || n == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    let mut at = a * t;
    let raw_norm = one_norm(&at);
    if !raw_norm.is_finite() {
        return Err(Error::InvalidParameter(
            "matrix exponential of a non-finite matrix".into(),
        ));
    }
    let mut balanced = at.clone();
    let d = balance(&mut balanced);
    let norm = one_norm(&balanced);
    let d = if norm < raw_norm {
        at = balanced;
        Some(d)
    } else {
        None
    };
    let norm = norm.min(raw_norm);

    let (u, v, squarings) = if norm <= THETA[0] {
        let (u, v) = pade_low(&at, &B3);
        (u, v, 0)
    } else if norm <= THETA[1] {
        let (u, v) = pade_low(&at, &B5);
        (u, v, 0)
    } else if norm <= THETA[2] {
        let (u, v) = pade_low(&at, &B7);
        (u, v, 0)
    } else if norm <= THETA[3] {
        let (u, v) = pade_low(&at, &B9);
        (u, v, 0)
    } else {
        let s = (norm / THETA[4]).log2().ceil().max(0.0) as i32;
        let scaled = &at * 2f64.powi(-s);
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::InvalidParameter("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if let Some(d) = d {
        for ((i, j), v) in (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).zip(r.iter_mut()) {
            *v *= d[i] / d[j];
        }
    }
    Ok(r)
}

/// Classical RK4 over `[t0, t0 + dt]` split into `substeps` equal steps.
pub fn rk4_propagate<F>(
    mut deriv: F,
    y0: &DVector<f64>,
    t0: f64,
    dt: f64,
    substeps: usize,
) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> DVector<f64>,
{
    if substeps == 0 {
        return Err(Error::InvalidParameter("substeps must be at least 1".into()));
    }
    let n = y0.len();
    let s = dt / substeps as f64;
    let mut y = y0.clone();
    let mut tmp = DVector::<f64>::zeros(n);

    let mut eval = |t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let k = deriv(t, y);
        if k.len() != n {
            return Err(Error::DimensionMismatch {
                what: "derivative output",
                expected: n,
                found: k.len(),
            });
        }
        if k.iter().any(|x| !x.is_finite()) {
            return Err(Error::IntegrationFailure { time: t });
        }
        Ok(k)
    };

    for step in 0..substeps {
        let t = t0 + step as f64 * s;
        let k1 = eval(t, &y)?;
        tmp.copy_from(&y);
        tmp.axpy(0.5 * s, &k1, 1.0);
        let k2 = eval(t + 0.5 * s, &tmp)?;
        tmp.copy_from(&y);
        tmp.axpy(0.5 * s, &k2, 1.0);
        let k3 = eval(t + 0.5 * s, &tmp)?;
        tmp.copy_from(&y);
        tmp.axpy(s, &k3, 1.0);
        let k4 = eval(t + s, &tmp)?;

        y.axpy(s / 6.0, &k1, 1.0);
        y.axpy(s / 3.0, &k2, 1.0);
        y.axpy(s / 3.0, &k3, 1.0);
        y.axpy(s / 6.0, &k4, 1.0);
    }
    Ok(y)
}

/// Per-component steps `1e-6 (1 + |y_c|)`.
pub fn default_fd_steps(y: &DVector<f64>) -> DVector<f64> {
    y.map(|v| FD_RELATIVE_STEP * (1.0 + v.abs()))
}

/// Central-difference Jacobian of `func` at `y`.
pub fn fd_jacobian<F>(mut func: F, y: &DVector<f64>, steps: &DVector<f64>) -> Result<DMatrix<f64>>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let n = y.len();
    if steps.len() != n {
        return Err(Error::DimensionMismatch {
            what: "finite-difference steps",
            expected: n,
            found: steps.len(),
        });
    }
    if let Some(bad) = steps.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be positive, got {bad}"
        )));
    }

    let mut jac: Option<DMatrix<f64>> = None;
    let mut yp = y.clone();
    for c in 0..n {
        let h = steps[c];
        yp[c] = y[c] + h;
        let fp = func(&yp);
        yp[c] = y[c] - h;
        let fm = func(&yp);
        yp[c] = y[c];
        if fp.iter().chain(fm.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEvaluation { component: c });
        }
        let m = fp.len();
        let jac = jac.get_or_insert_with(|| DMatrix::zeros(m, n));
        if fm.len() != m || jac.nrows() != m {
            return Err(Error::DimensionMismatch {
                what: "function output",
                expected: jac.nrows(),
                found: fp.len().max(fm.len()),
            });
        }
        let col = (fp - fm) / (2.0 * h);
        jac.set_column(c, &col);
    }
    Ok(jac.unwrap_or_else(|| DMatrix::zeros(0, 0)))
}

/// `(p + pᵀ) / 2`, in place.
pub fn symmetrize(p: &mut DMatrix<f64>) {
    let n = p.nrows().min(p.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (p[(i, j)] + p[(j, i)]);
            p[(i, j)] = m;
            p[(j, i)] = m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;
    use nalgebra::dvector;

    fn rel_frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn cholesky_identity_scaled() {
        let l = cholesky_factor(&DMatrix::identity(3, 3), 3.0).unwrap();
        assert_relative_eq!(l, DMatrix::identity(3, 3) * 3f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn cholesky_diagonal() {
        let l = cholesky_factor(&dmatrix![4.0, 0.0; 0.0, 9.0], 1.0).unwrap();
        assert_eq!(l, dmatrix![2.0, 0.0; 0.0, 3.0]);
    }

    #[test]
    fn cholesky_recomposes_2x2() {
        let p = dmatrix![2.0, 1.0; 1.0, 2.0];
        let l = cholesky_factor(&p, 1.0).unwrap();
        assert!(rel_frob(&(&l * l.transpose()), &p) < 1e-12);
        assert_eq!(l[(0, 1)], 0.0);
    }

    #[test]
    fn cholesky_rejects_asymmetric_and_indefinite() {
        let asym = dmatrix![2.0, 1.0; 0.0, 2.0];
        assert!(matches!(
            cholesky_factor(&asym, 1.0),
            Err(Error::Asymmetric { .. })
        ));
        let indef = dmatrix![1.0, 0.0; 0.0, -1.0];
        assert!(matches!(
            cholesky_factor(&indef, 1.0),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
        assert!(cholesky_factor(&DMatrix::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn cholesky_semidefinite_gives_zero_column() {
        let p = dmatrix![1.0, 1.0; 1.0, 1.0];
        let l = cholesky_factor(&p, 1.0).unwrap();
        assert_eq!(l[(1, 1)], 0.0);
        assert!(rel_frob(&(&l * l.transpose()), &p) < 1e-15);
    }

    #[test]
    fn cholesky_mixed_scales() {
        // Clock variances in s² next to positions in m².
        let p = DMatrix::from_diagonal(&dvector![1e2, 1e2, 1e-14, 1e-14]);
        let l = cholesky_factor(&p, 1.0).unwrap();
        assert_relative_eq!(l[(2, 2)], 1e-7, max_relative = 1e-12);
    }

    #[test]
    fn expm_zero_and_t_zero() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(matrix_exp(&z, 2.5).unwrap(), DMatrix::identity(3, 3));
        let a = dmatrix![1.0, 2.0; 3.0, 4.0];
        assert_eq!(matrix_exp(&a, 0.0).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn expm_diagonal() {
        let e = matrix_exp(&dmatrix![1.0, 0.0; 0.0, 2.0], 1.0).unwrap();
        assert_relative_eq!(e[(0, 0)], 1f64.exp(), max_relative = 1e-12);
        assert_relative_eq!(e[(1, 1)], 2f64.exp(), max_relative = 1e-12);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn expm_badly_scaled_triangular() {
        let (a, b, d) = (-0.3, 1e6, 0.2);
        let e = matrix_exp(&dmatrix![a, b; 0.0, d], 1.0).unwrap();
        let off = b * (a.exp() - d.exp()) / (a - d);
        assert_relative_eq!(e[(0, 0)], a.exp(), max_relative = 1e-13);
        assert_relative_eq!(e[(1, 1)], d.exp(), max_relative = 1e-13);
        assert_relative_eq!(e[(0, 1)], off, max_relative = 1e-13);
        assert_eq!(e[(1, 0)], 0.0);

        // Re-entry-like structure: x3 has no dynamics of its own.
        let c = -1.02e4;
        let n = dmatrix![0.0, -1.0, 0.0; 0.0, 0.0, c; 0.0, 0.0, 0.0];
        let exact = DMatrix::identity(3, 3) + &n * 0.5 + &n * &n * 0.125;
        let e = matrix_exp(&n, 0.5).unwrap();
        assert!(rel_frob(&e, &exact) < 1e-14);
    }

    #[test]
    fn expm_nilpotent() {
        let e = matrix_exp(&dmatrix![0.0, 1.0; 0.0, 0.0], 1.0).unwrap();
        assert!((e - dmatrix![1.0, 1.0; 0.0, 1.0]).amax() < 1e-14);
    }

    #[test]
    fn expm_rotation_large_norm() {
        // Exercises the scaled degree-13 branch.
        let th = 40.0;
        let e = matrix_exp(&dmatrix![0.0, -1.0; 1.0, 0.0], th).unwrap();
        let exact = dmatrix![th.cos(), -th.sin(); th.sin(), th.cos()];
        assert!((e - exact).amax() < 1e-12);
    }

    #[test]
    fn expm_rejects_non_square() {
        assert!(matches!(
            matrix_exp(&DMatrix::zeros(2, 3), 1.0),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn rk4_constant() {
        let y = rk4_propagate(|_, y| DVector::zeros(y.len()), &dvector![5.0], 0.0, 1.0, 3).unwrap();
        assert_eq!(y, dvector![5.0]);
    }

    #[test]
    fn rk4_exponential() {
        let y = rk4_propagate(|_, y| y.clone(), &dvector![1.0], 0.0, 0.1, 1).unwrap();
        // Degree-4 Taylor polynomial of e^0.1.
        let x: f64 = 0.1;
        let taylor = 1.0 + x + x * x / 2.0 + x.powi(3) / 6.0 + x.powi(4) / 24.0;
        assert_relative_eq!(y[0], taylor, max_relative = 1e-15);
        // One step carries the x^5/120 local truncation error.
        let err = x.exp() - y[0];
        assert!(err > 0.0 && err < 1.01 * x.powi(5) / 120.0 * x.exp());
    }

    #[test]
    fn rk4_rotation_norm() {
        let y = rk4_propagate(
            |_, y| dvector![y[1], -y[0]],
            &dvector![1.0, 0.0],
            0.0,
            0.01,
            1,
        )
        .unwrap();
        assert!((y.norm_squared() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rk4_reports_failure_time() {
        let err = rk4_propagate(
            |t, y| if t > 0.45 { dvector![f64::NAN] } else { y.clone() },
            &dvector![1.0],
            0.0,
            1.0,
            4,
        )
        .unwrap_err();
        assert_eq!(err, Error::IntegrationFailure { time: 0.5 });
        assert!(rk4_propagate(|_, y| y.clone(), &dvector![1.0], 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn fd_linear_map() {
        let a = dmatrix![1.0, -2.0, 0.5; 3.0, 0.0, 4.0];
        let y = dvector![0.3, -1.0, 2.0];
        let j = fd_jacobian(|x| &a * x, &y, &default_fd_steps(&y)).unwrap();
        assert!((j - a).amax() < 1e-8);
    }

    #[test]
    fn fd_square() {
        let y = dvector![3.0];
        let j = fd_jacobian(|x| x.map(|v| v * v), &y, &default_fd_steps(&y)).unwrap();
        assert!((j[(0, 0)] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn fd_reentry_dynamics() {
        let lam = 5e-5;
        let f = |x: &DVector<f64>| {
            dvector![
                -x[1],
                -(-lam * x[0]).exp() * x[1] * x[1] * x[2],
                0.0
            ]
        };
        let y = dvector![300000.0, 20000.0, 1e-3];
        let e = (-lam * y[0]).exp();
        let analytic = dmatrix![
            0.0, -1.0, 0.0;
            lam * e * y[1] * y[1] * y[2], -2.0 * e * y[1] * y[2], -e * y[1] * y[1];
            0.0, 0.0, 0.0
        ];
        let j = fd_jacobian(f, &y, &default_fd_steps(&y)).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let scale = analytic[(r, c)].abs().max(1e-300);
                if analytic[(r, c)] == 0.0 {
                    assert!(j[(r, c)].abs() < 1e-12);
                } else {
                    assert!((j[(r, c)] - analytic[(r, c)]).abs() / scale < 1e-5);
                }
            }
        }
    }

    #[test]
    fn fd_rejects_bad_inputs() {
        let y = dvector![1.0, 2.0];
        assert!(matches!(
            fd_jacobian(|x| x.clone(), &y, &dvector![1e-6, 0.0]),
            Err(Error::InvalidParameter(_))
        ));
        let err = fd_jacobian(
            |x| if x[1] > 2.0 { dvector![f64::INFINITY] } else { dvector![x[0]] },
            &y,
            &dvector![1e-6, 1e-6],
        )
        .unwrap_err();
        assert_eq!(err, Error::NonFiniteEvaluation { component: 1 });
    }
}
