//! Zonal (J2–J4) gravity field: potential, acceleration and gradient.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MU_EARTH: f64 = 3.986004418e14;
pub const R_EARTH: f64 = 6378137.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GravityField {
    /// m³/s².
    pub mu: f64,
    /// Reference radius, m.
    pub re: f64,
    pub j2: f64,
    pub j3: f64,
    pub j4: f64,
}

impl Default for GravityField {
    fn default() -> Self {
        Self::earth()
    }
}

impl GravityField {
    pub fn earth() -> Self {
        Self {
            mu: MU_EARTH,
            re: R_EARTH,
            j2: 1.08263e-3,
            j3: -2.532e-6,
            j4: -1.61e-6,
        }
    }

    pub fn two_body() -> Self {
        Self {
            j2: 0.0,
            j3: 0.0,
            j4: 0.0,
            ..Self::earth()
        }
    }

    fn zonals(&self) -> [(i32, f64); 3] {
        [(2, self.j2), (3, self.j3), (4, self.j4)]
    }
}

/// `(P_n, P_n', P_n'')` at `s` for `n = 2, 3, 4`.
fn legendre(n: i32, s: f64) -> (f64, f64, f64) {
    let s2 = s * s;
    match n {
        2 => (1.5 * s2 - 0.5, 3.0 * s, 3.0),
        3 => (0.5 * (5.0 * s2 * s - 3.0 * s), 0.5 * (15.0 * s2 - 3.0), 15.0 * s),
        4 => (
            (35.0 * s2 * s2 - 30.0 * s2 + 3.0) / 8.0,
            0.5 * (35.0 * s2 * s - 15.0 * s),
            0.5 * (105.0 * s2 - 15.0),
        ),
        _ => unreachable!("only J2..J4 are modelled"),
    }
}

fn radius(r: &Vector3<f64>) -> Result<f64> {
    let rn = r.norm();
    if !(rn > 0.0) {
        return Err(Error::ZeroRadius);
    }
    Ok(rn)
}

/// Gravitational potential `μ/r − μ Σ Jn Reⁿ Pn(z/r) / r^{n+1}`.
pub fn potential(r: &Vector3<f64>, field: &GravityField) -> Result<f64> {
    let rn = radius(r)?;
    let s = r.z / rn;
    let mut v = field.mu / rn;
    for (n, jn) in field.zonals() {
        let (p, _, _) = legendre(n, s);
        v -= field.mu * jn * field.re.powi(n) * p / rn.powi(n + 1);
    }
    Ok(v)
}

/// Acceleration, the gradient of [`potential`].
pub fn zonal_gravity_accel(r: &Vector3<f64>, field: &GravityField) -> Result<Vector3<f64>> {
    let rn = radius(r)?;
    let s = r.z / rn;
    let mut a = -field.mu / rn.powi(3) * r;
    for (n, jn) in field.zonals() {
        if jn == 0.0 {
            continue;
        }
        let (p, dp, _) = legendre(n, s);
        let k = -field.mu * jn * field.re.powi(n);
        let big_a = -((n + 1) as f64 * p + s * dp);
        a += k * big_a / rn.powi(n + 3) * r;
        a.z += k * dp / rn.powi(n + 2);
    }
    Ok(a)
}

/// `∂a/∂r`, symmetric.
pub fn gravity_gradient(r: &Vector3<f64>, field: &GravityField) -> Result<Matrix3<f64>> {
    let rn = radius(r)?;
    let s = r.z / rn;
    let rr = r * r.transpose();
    let mut g = field.mu * (3.0 * rr / rn.powi(5) - Matrix3::identity() / rn.powi(3));
    // ∂s/∂x_j
    let ds = Vector3::new(0.0, 0.0, 1.0 / rn) - r.z / rn.powi(3) * r;
    for (n, jn) in field.zonals() {
        if jn == 0.0 {
            continue;
        }
        let nf = n as f64;
        let (p, dp, ddp) = legendre(n, s);
        let k = -field.mu * jn * field.re.powi(n);
        let big_a = -((nf + 1.0) * p + s * dp);
        let da = -((nf + 2.0) * dp + s * ddp);
        let rpow3 = rn.powi(n + 3);

        let mut h = -(nf + 3.0) * big_a / rn.powi(n + 5) * rr
            + (da / rpow3) * r * ds.transpose()
            + Matrix3::identity() * (big_a / rpow3);
        let row = -(nf + 2.0) * dp / rn.powi(n + 4) * r.transpose()
            + (ddp / rn.powi(n + 2)) * ds.transpose();
        h.set_row(2, &(h.row(2) + row));
        g += k * h;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn numeric_gradient(r: &Vector3<f64>, field: &GravityField) -> Vector3<f64> {
        let h = 10.0;
        Vector3::from_fn(|i, _| {
            let mut p = *r;
            let mut m = *r;
            p[i] += h;
            m[i] -= h;
            (potential(&p, field).unwrap() - potential(&m, field).unwrap()) / (2.0 * h)
        })
    }

    #[test]
    fn two_body_magnitude() {
        let r = Vector3::new(7e6, 0.0, 0.0);
        let a = zonal_gravity_accel(&r, &GravityField::two_body()).unwrap();
        assert_relative_eq!(a.norm(), MU_EARTH / 49e12, max_relative = 1e-15);
        assert!((a.norm() - 8.134703).abs() < 1e-6);
        assert!(a.x < 0.0 && a.y == 0.0 && a.z == 0.0);
    }

    #[test]
    fn equatorial_zonal_terms() {
        let rn = 7e6;
        let r = Vector3::new(rn, 0.0, 0.0);
        let f = GravityField::earth();
        let j2_only = GravityField { j3: 0.0, j4: 0.0, ..f };
        let a2 = zonal_gravity_accel(&r, &j2_only).unwrap();
        assert_eq!(a2.z, 0.0);
        let expect_x = -f.mu / (rn * rn) * (1.0 + 1.5 * f.j2 * (f.re / rn).powi(2));
        assert_relative_eq!(a2.x, expect_x, max_relative = 1e-14);

        let j3_only = GravityField { j2: 0.0, j4: 0.0, ..f };
        let a3 = zonal_gravity_accel(&r, &j3_only).unwrap();
        // ∂/∂z of −μ J3 R³ P3(z/r)/r⁴ at z = 0 is −μ J3 R³ P3'(0)/r⁵ = 1.5 μ J3 R³/r⁵.
        assert_relative_eq!(a3.z, 1.5 * f.mu * f.j3 * f.re.powi(3) / rn.powi(5), max_relative = 1e-14);
    }

    #[test]
    fn acceleration_is_gradient_of_potential() {
        let f = GravityField::earth();
        for r in [
            Vector3::new(4.1e6, -3.3e6, 4.4e6),
            Vector3::new(-1e6, 2e6, -6.5e6),
            Vector3::new(2.0e7, 1.2e7, 9.0e6),
        ] {
            let a = zonal_gravity_accel(&r, &f).unwrap();
            let num = numeric_gradient(&r, &f);
            assert!((a - num).norm() <= 1e-8 * a.norm());
        }
    }

    #[test]
    fn gradient_matches_differenced_acceleration() {
        let f = GravityField::earth();
        let r = Vector3::new(4.1e6, -3.3e6, 4.4e6);
        let g = gravity_gradient(&r, &f).unwrap();
        let h = 1.0;
        let mut num = Matrix3::zeros();
        for j in 0..3 {
            let mut p = r;
            let mut m = r;
            p[j] += h;
            m[j] -= h;
            let col = (zonal_gravity_accel(&p, &f).unwrap() - zonal_gravity_accel(&m, &f).unwrap())
                / (2.0 * h);
            num.set_column(j, &col);
        }
        assert!((g - num).norm() <= 1e-7 * g.norm());
        assert!((g - g.transpose()).norm() <= 1e-12 * g.norm());
    }

    #[test]
    fn axial_symmetry() {
        let f = GravityField::earth();
        let r = Vector3::new(5e6, 1e6, 3e6);
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), 0.7);
        let a = zonal_gravity_accel(&r, &f).unwrap();
        let ar = zonal_gravity_accel(&(rot * r), &f).unwrap();
        assert!((rot * a - ar).norm() <= 1e-14 * a.norm());
    }

    #[test]
    fn zero_radius_rejected() {
        assert!(matches!(
            zonal_gravity_accel(&Vector3::zeros(), &GravityField::earth()),
            Err(Error::ZeroRadius)
        ));
    }
}
