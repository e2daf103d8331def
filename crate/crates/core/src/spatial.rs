//! Rotation and kinematics primitives.
//!
//! Attitude uses ZYX Euler angles, `R = Rz(psi) * Ry(theta) * Rx(phi)`, mapping
//! body-frame vectors into the inertial frame. Body rates relate to Euler-angle
//! rates through `omega = Gamma(eta) * eta_dot`.

use nalgebra::{Matrix3, Vector3};
use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Pitch magnitude beyond which `Gamma` is treated as singular.
pub const GIMBAL_GUARD: f64 = std::f64::consts::FRAC_PI_2 - 1e-6;

/// Roll, pitch and yaw in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerAngles {
    pub const fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self { phi, theta, psi }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_vec(v: &Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn to_vec(self) -> Vec3 {
        Vec3::new(self.phi, self.theta, self.psi)
    }

    /// Fails when `|theta|` reaches the gimbal-lock guard.
    pub fn check_regular(self) -> Result<()> {
        if !self.theta.is_finite() || self.theta.abs() >= GIMBAL_GUARD {
            return Err(Error::SingularAttitude { theta: self.theta });
        }
        Ok(())
    }
}

/// Cross-product matrix: `skew(a) * b == a.cross(&b)`.
pub fn skew(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Body-to-inertial rotation for ZYX Euler angles.
pub fn rotation_zyx(eta: EulerAngles) -> Mat3 {
    let (sf, cf) = eta.phi.sin_cos();
    let (st, ct) = eta.theta.sin_cos();
    let (sp, cp) = eta.psi.sin_cos();
    Mat3::new(
        cp * ct,
        cp * st * sf - sp * cf,
        cp * st * cf + sp * sf,
        sp * ct,
        sp * st * sf + cp * cf,
        sp * st * cf - cp * sf,
        -st,
        ct * sf,
        ct * cf,
    )
}

/// Euler-rate to body-rate map, `omega = gamma(eta) * eta_dot`.
pub fn gamma(eta: EulerAngles) -> Result<Mat3> {
    eta.check_regular()?;
    Ok(gamma_unchecked(eta))
}

pub(crate) fn gamma_unchecked(eta: EulerAngles) -> Mat3 {
    let (sf, cf) = eta.phi.sin_cos();
    let (st, ct) = eta.theta.sin_cos();
    Mat3::new(1.0, 0.0, -st, 0.0, cf, sf * ct, 0.0, -sf, cf * ct)
}

/// Closed-form inverse of [`gamma`], `eta_dot = gamma_inv(eta) * omega`.
pub fn gamma_inv(eta: EulerAngles) -> Result<Mat3> {
    eta.check_regular()?;
    let (sf, cf) = eta.phi.sin_cos();
    let (st, ct) = eta.theta.sin_cos();
    let tt = st / ct;
    Ok(Mat3::new(
        1.0,
        sf * tt,
        cf * tt,
        0.0,
        cf,
        -sf,
        0.0,
        sf / ct,
        cf / ct,
    ))
}

/// Time derivative of `gamma` along `eta_dot`.
pub fn gamma_dot(eta: EulerAngles, eta_dot: &Vec3) -> Mat3 {
    let (sf, cf) = eta.phi.sin_cos();
    let (st, ct) = eta.theta.sin_cos();
    let (df, dt) = (eta_dot.x, eta_dot.y);
    Mat3::new(
        0.0,
        0.0,
        -ct * dt,
        0.0,
        -sf * df,
        cf * ct * df - sf * st * dt,
        0.0,
        -cf * df,
        -sf * ct * df - cf * st * dt,
    )
}

/// `R_dot = R * skew(omega)`.
pub fn rotation_rate_consistency(eta: EulerAngles, omega: &Vec3) -> Mat3 {
    rotation_zyx(eta) * skew(omega)
}

/// Partial derivatives of `R(eta)^T` with respect to phi, theta and psi.
pub fn rotation_partials(eta: EulerAngles) -> [Mat3; 3] {
    let (sf, cf) = eta.phi.sin_cos();
    let (st, ct) = eta.theta.sin_cos();
    let (sp, cp) = eta.psi.sin_cos();
    let d_phi = Mat3::new(
        0.0,
        cp * st * cf + sp * sf,
        -cp * st * sf + sp * cf,
        0.0,
        sp * st * cf - cp * sf,
        -sp * st * sf - cp * cf,
        0.0,
        ct * cf,
        -ct * sf,
    );
    let d_theta = Mat3::new(
        -cp * st,
        cp * ct * sf,
        cp * ct * cf,
        -sp * st,
        sp * ct * sf,
        sp * ct * cf,
        -ct,
        -st * sf,
        -st * cf,
    );
    let d_psi = Mat3::new(
        -sp * ct,
        -sp * st * sf - cp * cf,
        -sp * st * cf + cp * sf,
        cp * ct,
        cp * st * sf - sp * cf,
        cp * st * cf + sp * sf,
        0.0,
        0.0,
        0.0,
    );
    [d_phi.transpose(), d_theta.transpose(), d_psi.transpose()]
}
