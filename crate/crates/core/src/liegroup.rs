//! SU(2) and SO(3) charts, the adjoint map and the double-cover lift.
//!
//! The adjoint map uses the column convention `U sigma_j U^dag = sum_i R_ij sigma_i`,
//! so `R(UV) = R(U) R(V)` and a Bloch vector transforms as `t' = R t` under
//! `rho -> U rho U^dag`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{unitarity_defect, Axis, Mat2, UNITARY_TOL};

/// Tolerance for `Rotation3::new`.
pub const ROTATION_TOL: f64 = 1e-10;
/// Looser tolerance accepted by the lift.
pub const LIFT_TOL: f64 = 1e-8;

/// `(theta, phi, chi)` chart of `[[cos t e^{i phi}, sin t e^{i chi}], [-sin t e^{-i chi}, cos t e^{-i phi}]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationChart {
    pub theta: f64,
    pub phi: f64,
    pub chi: f64,
}

fn wrap_tau(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl RotationChart {
    pub fn new(theta: f64, phi: f64, chi: f64) -> Self {
        RotationChart { theta, phi, chi }
    }

    pub fn identity() -> Self {
        RotationChart::new(0.0, 0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.phi.is_finite() && self.chi.is_finite()
    }

    /// Chart of the same SU(2) element with `theta` in `[0, pi/2]` and both
    /// phases in `[0, 2pi)`.
    pub fn normalized(&self) -> Self {
        chart_from_su2(&su2_from_chart(self))
    }
}

/// A proper rotation of R^3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        check_rotation(&m, ROTATION_TOL)?;
        Ok(Rotation3(m))
    }

    pub fn identity() -> Self {
        Rotation3(Matrix3::identity())
    }

    pub(crate) fn from_unchecked(m: Matrix3<f64>) -> Self {
        Rotation3(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn lift(&self) -> Result<Mat2> {
        lift_so3_to_su2(&self.0)
    }
}

/// Max entry of `|m^T m - I|` and the determinant.
pub fn rotation_defects(m: &Matrix3<f64>) -> (f64, f64) {
    let orth = (m.transpose() * m - Matrix3::identity()).abs().max();
    (orth, m.determinant())
}

fn check_rotation(m: &Matrix3<f64>, tol: f64) -> Result<()> {
    let (orth, det) = rotation_defects(m);
    if !(orth <= tol && (det - 1.0).abs() <= tol) {
        return Err(Error::NotRotation {
            orthogonality: orth,
            det,
        });
    }
    Ok(())
}

pub fn su2_from_chart(c: &RotationChart) -> Mat2 {
    let (st, ct) = c.theta.sin_cos();
    let a = Complex64::from_polar(ct, c.phi);
    let b = Complex64::from_polar(st, c.chi);
    Mat2::new(a, b, -b.conj(), a.conj())
}

/// Closed-form rotation of a chart, evaluated directly from the trigonometric
/// expression rather than through the adjoint map.
pub fn so3_from_chart(c: &RotationChart) -> Rotation3 {
    let (t, p, x) = (c.theta, c.phi, c.chi);
    let (c2, s2) = (t.cos().powi(2), t.sin().powi(2));
    let (s2t, c2t) = (2.0 * t).sin_cos();
    let m = Matrix3::new(
        c2 * (2.0 * p).cos() - s2 * (2.0 * x).cos(),
        c2 * (2.0 * p).sin() + s2 * (2.0 * x).sin(),
        -s2t * (p + x).cos(),
        s2 * (2.0 * x).sin() - c2 * (2.0 * p).sin(),
        c2 * (2.0 * p).cos() + s2 * (2.0 * x).cos(),
        s2t * (p + x).sin(),
        s2t * (x - p).cos(),
        -s2t * (x - p).sin(),
        c2t,
    );
    Rotation3(m)
}

/// `R_ij = 1/2 Tr[sigma_i U sigma_j U^dag]`.
pub fn adjoint_rotation(u: &Mat2) -> Result<Rotation3> {
    let defect = unitarity_defect(u);
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let ud = u.adjoint();
    let paulis = Axis::ALL.map(Axis::matrix);
    let mut m = Matrix3::zeros();
    for (j, sj) in paulis.iter().enumerate() {
        let conj = u * sj * ud;
        for (i, si) in paulis.iter().enumerate() {
            m[(i, j)] = 0.5 * (si * conj).trace().re;
        }
    }
    Ok(Rotation3(m))
}

/// Unit quaternion `(w, x, y, z)` of a proper rotation (Shepperd's method).
fn quaternion_of(m: &Matrix3<f64>) -> [f64; 4] {
    let tr = m.trace();
    let d = [m[(0, 0)], m[(1, 1)], m[(2, 2)]];
    let q = if tr >= d[0] && tr >= d[1] && tr >= d[2] {
        let w = 0.5 * (1.0 + tr).max(0.0).sqrt();
        let f = 0.25 / w;
        [
            w,
            (m[(2, 1)] - m[(1, 2)]) * f,
            (m[(0, 2)] - m[(2, 0)]) * f,
            (m[(1, 0)] - m[(0, 1)]) * f,
        ]
    } else if d[0] >= d[1] && d[0] >= d[2] {
        let x = 0.5 * (1.0 + d[0] - d[1] - d[2]).max(0.0).sqrt();
        let f = 0.25 / x;
        [
            (m[(2, 1)] - m[(1, 2)]) * f,
            x,
            (m[(0, 1)] + m[(1, 0)]) * f,
            (m[(0, 2)] + m[(2, 0)]) * f,
        ]
    } else if d[1] >= d[2] {
        let y = 0.5 * (1.0 - d[0] + d[1] - d[2]).max(0.0).sqrt();
        let f = 0.25 / y;
        [
            (m[(0, 2)] - m[(2, 0)]) * f,
            (m[(0, 1)] + m[(1, 0)]) * f,
            y,
            (m[(1, 2)] + m[(2, 1)]) * f,
        ]
    } else {
        let z = 0.5 * (1.0 - d[0] - d[1] + d[2]).max(0.0).sqrt();
        let f = 0.25 / z;
        [
            (m[(1, 0)] - m[(0, 1)]) * f,
            (m[(0, 2)] + m[(2, 0)]) * f,
            (m[(1, 2)] + m[(2, 1)]) * f,
            z,
        ]
    };
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.map(|v| v / n)
}

/// SU(2) preimage of a rotation, with `Re U_11 >= 0`.
///
/// When `Re U_11` vanishes the first nonzero of the remaining quaternion
/// components is made positive.
pub fn lift_so3_to_su2(o: &Matrix3<f64>) -> Result<Mat2> {
    check_rotation(o, LIFT_TOL)?;
    let mut q = quaternion_of(o);
    let lead = if q[0].abs() > 1e-12 {
        q[0]
    } else {
        q[1..].iter().copied().find(|v| v.abs() > 1e-12).unwrap_or(1.0)
    };
    if lead < 0.0 {
        q = q.map(|v| -v);
    }
    let [w, x, y, z] = q;
    // U = w I - i (x sx + y sy + z sz)
    Ok(Mat2::new(
        Complex64::new(w, -z),
        Complex64::new(-y, -x),
        Complex64::new(y, -x),
        Complex64::new(w, z),
    ))
}

/// Chart of an SU(2) element, in canonical ranges. Coordinates that the chart
/// does not determine (chi at theta = 0, phi at theta = pi/2) are set to zero.
pub fn chart_from_su2(u: &Mat2) -> RotationChart {
    let a = u[(0, 0)];
    let b = u[(0, 1)];
    let theta = b.norm().atan2(a.norm());
    let phi = if a.norm() > 1e-14 { wrap_tau(a.arg()) } else { 0.0 };
    let chi = if b.norm() > 1e-14 { wrap_tau(b.arg()) } else { 0.0 };
    RotationChart {
        theta: theta.clamp(0.0, PI / 2.0),
        phi,
        chi,
    }
}

/// Skew matrix `[w]_x`.
pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Rodrigues exponential of `[w]_x`.
pub fn exp_so3(w: &Vector3<f64>) -> Matrix3<f64> {
    let angle = w.norm();
    let k = hat(w);
    if angle < 1e-8 {
        return Matrix3::identity() + k + k * k * 0.5;
    }
    Matrix3::identity() + k * (angle.sin() / angle) + k * k * ((1.0 - angle.cos()) / (angle * angle))
}

/// `min(|a - b|, |a + b|)` in max-entry norm: distance up to the double-cover sign.
pub fn distance_up_to_sign(a: &Mat2, b: &Mat2) -> f64 {
    let plus = (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let minus = (a + b).iter().map(|z| z.norm()).fold(0.0, f64::max);
    plus.min(minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn close2(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    fn close3(a: &Matrix3<f64>, b: &Matrix3<f64>, tol: f64) -> bool {
        (a - b).abs().max() <= tol
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn chart_examples() {
        assert!(close2(
            &su2_from_chart(&RotationChart::identity()),
            &Mat2::identity(),
            0.0
        ));
        let u2 = su2_from_chart(&RotationChart::new(FRAC_PI_4, PI, 0.0));
        let h = FRAC_1_SQRT_2;
        assert!(close2(&u2, &Mat2::new(c(-h), c(h), c(-h), c(-h)), 1e-15));
        let u = su2_from_chart(&RotationChart::new(FRAC_PI_2, 0.0, 0.0));
        assert!(close2(&u, &Mat2::new(c(0.0), c(1.0), c(-1.0), c(0.0)), 1e-15));
    }

    #[test]
    fn so3_chart_examples() {
        assert!(close3(
            so3_from_chart(&RotationChart::identity()).matrix(),
            &Matrix3::identity(),
            0.0
        ));
        let p2 = so3_from_chart(&RotationChart::new(FRAC_PI_4, PI, 0.0));
        let want = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
        assert!(close3(p2.matrix(), &want, 1e-15));
        // theta = 0: rotation about z by 2 phi
        let phi: f64 = 0.37;
        let rz = so3_from_chart(&RotationChart::new(0.0, phi, 1.1));
        let (s, co) = (2.0 * phi).sin_cos();
        let want = Matrix3::new(co, s, 0.0, -s, co, 0.0, 0.0, 0.0, 1.0);
        assert!(close3(rz.matrix(), &want, 1e-15));
    }

    #[test]
    fn adjoint_examples() {
        let r = adjoint_rotation(&Mat2::identity()).unwrap();
        assert!(close3(r.matrix(), &Matrix3::identity(), 1e-15));
        let r = adjoint_rotation(&(-Mat2::identity())).unwrap();
        assert!(close3(r.matrix(), &Matrix3::identity(), 1e-15));
        let u2 = su2_from_chart(&RotationChart::new(FRAC_PI_4, PI, 0.0));
        let want = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
        assert!(close3(adjoint_rotation(&u2).unwrap().matrix(), &want, 1e-15));
        let mut bad = Mat2::identity();
        bad[(1, 1)] = c(0.5);
        assert!(matches!(adjoint_rotation(&bad), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn lift_examples() {
        assert!(close2(
            &lift_so3_to_su2(&Matrix3::identity()).unwrap(),
            &Mat2::identity(),
            1e-15
        ));
        let anti = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
        let u = lift_so3_to_su2(&anti).unwrap();
        let u2 = su2_from_chart(&RotationChart::new(FRAC_PI_4, PI, 0.0));
        assert!(distance_up_to_sign(&u, &u2) < 1e-15);
        assert!(u[(0, 0)].re >= 0.0);
        // improper
        assert!(matches!(
            lift_so3_to_su2(&Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0))),
            Err(Error::NotRotation { .. })
        ));
        // half-turn about x has Re U11 = 0
        let rx = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0));
        let u = lift_so3_to_su2(&rx).unwrap();
        assert!(close3(adjoint_rotation(&u).unwrap().matrix(), &rx, 1e-15));
    }

    #[test]
    fn exp_is_rotation() {
        let w = Vector3::new(0.3, -1.2, 2.0);
        let r = exp_so3(&w);
        let (orth, det) = rotation_defects(&r);
        assert!(orth < 1e-14 && (det - 1.0).abs() < 1e-14);
        assert!(close3(&exp_so3(&Vector3::zeros()), &Matrix3::identity(), 0.0));
    }

    #[test]
    fn chart_extraction_recovers_element() {
        let c0 = RotationChart::new(0.4, 5.9, 1.3);
        let back = chart_from_su2(&su2_from_chart(&c0));
        assert!((back.theta - 0.4).abs() < 1e-14);
        assert!((back.phi - 5.9).abs() < 1e-14);
        assert!((back.chi - 1.3).abs() < 1e-14);
        let n = RotationChart::new(-0.4, -1.0, 7.0).normalized();
        assert!(n.theta >= 0.0 && n.theta <= FRAC_PI_2);
        assert!((0.0..TAU).contains(&n.phi) && (0.0..TAU).contains(&n.chi));
        assert!(close2(
            &su2_from_chart(&n),
            &su2_from_chart(&RotationChart::new(-0.4, -1.0, 7.0)),
            1e-14
        ));
    }
}
