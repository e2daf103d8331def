//! Input-output linearization of the outputs `(p_poi, omega_z)` and the
//! internal dynamics that remain once those outputs are held at zero.

use nalgebra::{Complex, Matrix4, SMatrix, SVector, Vector4};

use crate::error::{Error, Result};
use crate::spatial::{gamma_dot, gamma_inv, EulerAngles, Vec3};
use crate::vehicle::{derive_geometry, Dynamics, RigidState, VehicleParams};

pub type ZeroDynMatrix = SMatrix<f64, 5, 5>;
pub type ZeroDynVector = SVector<f64, 5>;

/// Internal state `(omega_x, omega_y, phi, theta, psi)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZeroDynState {
    pub omega_x: f64,
    pub omega_y: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl ZeroDynState {
    pub const fn new(omega_x: f64, omega_y: f64, phi: f64, theta: f64, psi: f64) -> Self {
        Self {
            omega_x,
            omega_y,
            phi,
            theta,
            psi,
        }
    }

    pub fn to_vector(&self) -> ZeroDynVector {
        ZeroDynVector::new(self.omega_x, self.omega_y, self.phi, self.theta, self.psi)
    }

    pub fn from_vector(z: &ZeroDynVector) -> Self {
        Self::new(z[0], z[1], z[2], z[3], z[4])
    }

    /// Full state on the zero-output manifold.
    pub fn embed(&self) -> RigidState {
        RigidState {
            omega: Vec3::new(self.omega_x, self.omega_y, 0.0),
            eta: EulerAngles::new(self.phi, self.theta, self.psi),
            ..RigidState::zero()
        }
    }
}

/// Initial condition used for the above/below zero-dynamics runs.
pub const DEFAULT_ZERO_DYN_INITIAL: ZeroDynState = ZeroDynState::new(0.0, 0.0, 0.1, 0.1, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// `alpha < 0`: a real eigenvalue in the right half plane.
    UnstableZeroDynamics,
    /// `alpha > 0`: all linearized eigenvalues on the imaginary axis.
    MarginallyStableLinearizedZeroDynamics,
    /// `alpha == 0`: the Jacobian has a pole; marginal by convention, flagged.
    DegenerateAlphaZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub alpha: f64,
    /// Closed-form eigenvalues; empty for the degenerate case.
    pub eigenvalues: Vec<Complex<f64>>,
    /// Eigenvalues of the closed-form Jacobian from a numerical solver.
    pub numerical_eigenvalues: Vec<Complex<f64>>,
    pub classification: Classification,
}

/// Decoupling matrix `M4 M_F` and drift `M4 M5` at a state.
fn decoupling(params: &VehicleParams, state: &RigidState) -> Result<(Matrix4<f64>, Vector4<f64>)> {
    let geo = derive_geometry(params);
    let dynamics = Dynamics::evaluate(params, &geo, state)?;
    let chol = dynamics.b.cholesky().ok_or(Error::Singular("mass matrix"))?;
    let b_inv_mf = chol.solve(&dynamics.m_f);
    let b_inv_bias = chol.solve(&dynamics.bias);
    let select = [0usize, 1, 2, 5];
    let mut decoupling = Matrix4::zeros();
    let mut drift = Vector4::zeros();
    for (row, &k) in select.iter().enumerate() {
        decoupling.set_row(row, &b_inv_mf.row(k));
        drift[row] = b_inv_bias[k];
    }
    Ok((decoupling, drift))
}

/// Input that makes `p_ddot_poi = desired_acc` and `omega_z_dot = desired_yaw_acc`.
pub fn io_linearizing_input(
    params: &VehicleParams,
    state: &RigidState,
    desired_acc: &Vec3,
    desired_yaw_acc: f64,
) -> Result<crate::vehicle::ControlInput> {
    let (decoupling, drift) = decoupling(params, state)?;
    let target = Vector4::new(desired_acc.x, desired_acc.y, desired_acc.z, desired_yaw_acc) + drift;
    let sv = decoupling.singular_values();
    if !(sv.min() > 1e-12 * sv.max()) {
        return Err(Error::Singular("decoupling matrix"));
    }
    let u = decoupling
        .lu()
        .solve(&target)
        .ok_or(Error::Singular("decoupling matrix"))?;
    Ok(crate::vehicle::ControlInput::from_vector(&u))
}

/// `z_dot = f_zd(z)` with the POI pinned and the yaw rate held at zero.
pub fn zero_dynamics_derivative(params: &VehicleParams, z: &ZeroDynState) -> Result<ZeroDynVector> {
    let state = z.embed();
    let u = io_linearizing_input(params, &state, &Vec3::zeros(), 0.0)?;
    let geo = derive_geometry(params);
    let dynamics = Dynamics::evaluate(params, &geo, &state)?;
    let acc = dynamics.accelerations(&u.to_vector())?;
    let eta_dot = dynamics.gamma_inv * state.omega;
    Ok(ZeroDynVector::new(acc[3], acc[4], eta_dot.x, eta_dot.y, eta_dot.z))
}

/// Closed-form Jacobian of the zero dynamics at the origin.
pub fn zero_dynamics_jacobian(params: &VehicleParams) -> Result<(ZeroDynMatrix, StabilityVerdict)> {
    let alpha = derive_geometry(params).alpha;
    if alpha == 0.0 {
        return Err(Error::DegenerateAlpha("zero-dynamics Jacobian has a pole"));
    }
    let k = -params.g / alpha;
    let mut jac = ZeroDynMatrix::zeros();
    jac[(0, 2)] = k;
    jac[(1, 3)] = k;
    jac[(2, 0)] = 1.0;
    jac[(3, 1)] = 1.0;
    let root = Complex::new(k, 0.0).sqrt();
    let eigenvalues = vec![root, root, -root, -root, Complex::new(0.0, 0.0)];
    let numerical_eigenvalues = jac.complex_eigenvalues().iter().copied().collect();
    let classification = if alpha < 0.0 {
        Classification::UnstableZeroDynamics
    } else {
        Classification::MarginallyStableLinearizedZeroDynamics
    };
    Ok((
        jac,
        StabilityVerdict {
            alpha,
            eigenvalues,
            numerical_eigenvalues,
            classification,
        },
    ))
}

/// Stability verdict that also covers `alpha == 0`.
pub fn stability_verdict(params: &VehicleParams) -> StabilityVerdict {
    match zero_dynamics_jacobian(params) {
        Ok((_, verdict)) => verdict,
        Err(_) => StabilityVerdict {
            alpha: 0.0,
            eigenvalues: Vec::new(),
            numerical_eigenvalues: Vec::new(),
            classification: Classification::DegenerateAlphaZero,
        },
    }
}

/// Pitch/roll dynamics with the POI pinned and the yaw angle held at zero, for
/// a symmetric vehicle with payload and POI on the body z-axis.
///
/// Returns `(phi_ddot, theta_ddot, phi_dot, theta_dot)`.
pub fn planar_zero_dynamics(
    params: &VehicleParams,
    phi: f64,
    theta: f64,
    dphi: f64,
    dtheta: f64,
) -> Result<Vector4<f64>> {
    crate::linear::check_assumptions(params)?;
    let rz = derive_geometry(params).alpha;
    if rz == 0.0 {
        return Err(Error::DegenerateAlpha("planar zero dynamics divide by r_hat_z"));
    }
    let cf = phi.cos();
    if cf.abs() < 1e-12 {
        return Err(Error::SingularAttitude { theta: phi });
    }
    let g = params.g;
    let phi_dd = -phi.sin() * (rz * cf * dtheta * dtheta + g * theta.cos()) / rz;
    let theta_dd = -(g * theta.sin() - 2.0 * dphi * dtheta * rz * phi.sin()) / (rz * cf);
    Ok(Vector4::new(phi_dd, theta_dd, dphi, dtheta))
}

/// Euler-angle accelerations implied by a body-rate derivative.
pub fn euler_accelerations(eta: EulerAngles, eta_dot: &Vec3, omega_dot: &Vec3) -> Result<Vec3> {
    let gi = gamma_inv(eta)?;
    Ok(gi * (omega_dot - gamma_dot(eta, eta_dot) * eta_dot))
}

/// Outcome of integrating the zero dynamics over a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroDynRun {
    pub times: Vec<f64>,
    pub states: Vec<ZeroDynState>,
    /// `max_t |z(t)| < 10 |z(0)|` over the horizon.
    pub bounded: bool,
    /// Set when the run stopped early at an attitude singularity.
    pub aborted: Option<Error>,
}

/// Integrates the zero dynamics with the adaptive integrator, sampling at
/// `sample_dt`.
pub fn simulate_zero_dynamics(
    params: &VehicleParams,
    initial: ZeroDynState,
    horizon: f64,
    sample_dt: f64,
) -> ZeroDynRun {
    use crate::integrate::{AdaptiveOptions, Dopri5};
    let z0 = initial.to_vector();
    let bound = 10.0 * z0.norm();
    let mut times = vec![0.0];
    let mut states = vec![initial];
    let mut bounded = true;
    let mut aborted = None;
    let mut solver = Dopri5::new(AdaptiveOptions::default());
    let mut z = z0;
    let mut t = 0.0;
    let steps = (horizon / sample_dt).round() as usize;
    for k in 1..=steps {
        let t_next = k as f64 * sample_dt;
        let rhs = |_t: f64, y: &ZeroDynVector| zero_dynamics_derivative(params, &ZeroDynState::from_vector(y));
        match solver.integrate(rhs, t, &z, t_next) {
            Ok(y) => {
                z = y;
                t = t_next;
            }
            Err(e) => {
                aborted = Some(e);
                bounded = false;
                break;
            }
        }
        if z.norm() >= bound {
            bounded = false;
        }
        times.push(t);
        states.push(ZeroDynState::from_vector(&z));
    }
    ZeroDynRun {
        times,
        states,
        bounded,
        aborted,
    }
}
