//! Physical parameters and the full nonlinear Euler-Lagrange model of a
//! multirotor carrying a rigidly attached payload.
//!
//! Generalized velocities are the inertial POI velocity and the body rates,
//! so the equations of motion read
//!
//! ```text
//! B(eta) [p_ddot; omega_dot] + C(p_dot, omega, eta) [p_dot; omega] + G(eta) = M_F(eta) F_u
//! ```
//!
//! with `F_u = [T, tau_phi, tau_theta, tau_psi]`.

use nalgebra::{Matrix6, SMatrix, SVector, Vector4, Vector6};

use crate::error::{Error, Result};
use crate::spatial::{gamma, gamma_inv, rotation_partials, rotation_zyx, skew, EulerAngles, Mat3, Vec3};

/// Full state in the order `[p_dot_poi, omega, p_poi, eta]`.
pub type StateVector = SVector<f64, 12>;
pub type Matrix6x4 = SMatrix<f64, 6, 4>;

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    /// Vehicle mass without payload, kg.
    pub m_uav: f64,
    /// Payload mass, kg.
    pub m_pl: f64,
    /// Payload center of mass in the body frame, m.
    pub r_pl: Vec3,
    /// Point of interest in the body frame, m.
    pub r_poi: Vec3,
    /// Combined body and payload inertia expressed in the body frame, kg m^2.
    pub h_tot: Mat3,
    pub g: f64,
}

impl VehicleParams {
    /// The large-vehicle reference configuration (22 kg frame, 6 kg payload
    /// and POI both 4 m above the rotor plane).
    pub fn reference() -> Self {
        Self {
            m_uav: 22.0,
            m_pl: 6.0,
            r_pl: Vec3::new(0.0, 0.0, 4.0),
            r_poi: Vec3::new(0.0, 0.0, 4.0),
            h_tot: Mat3::from_diagonal(&Vec3::new(0.25, 0.25, 0.14)),
            g: STANDARD_GRAVITY,
        }
    }

    /// Copy with payload and POI at the same body point on the z-axis, placed
    /// so that the signed POI-to-CoG height equals `alpha`.
    pub fn with_payload_at_poi(&self, alpha: f64) -> Self {
        let z = alpha * self.m_tot() / self.m_uav;
        Self {
            r_pl: Vec3::new(0.0, 0.0, z),
            r_poi: Vec3::new(0.0, 0.0, z),
            ..self.clone()
        }
    }

    /// Copy with payload and POI moved to the given heights on the body z-axis.
    pub fn with_heights(&self, z_pl: f64, z_poi: f64) -> Self {
        Self {
            r_pl: Vec3::new(0.0, 0.0, z_pl),
            r_poi: Vec3::new(0.0, 0.0, z_poi),
            ..self.clone()
        }
    }

    pub fn m_tot(&self) -> f64 {
        self.m_uav + self.m_pl
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.m_uav.is_finite()
            && self.m_pl.is_finite()
            && self.g.is_finite()
            && self.r_pl.iter().all(|v| v.is_finite())
            && self.r_poi.iter().all(|v| v.is_finite())
            && self.h_tot.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("vehicle parameters"));
        }
        if self.m_uav <= 0.0 {
            return Err(invalid("m_uav", "must be positive"));
        }
        if self.m_pl < 0.0 {
            return Err(invalid("m_pl", "must be non-negative"));
        }
        if self.g <= 0.0 {
            return Err(invalid("g", "must be positive"));
        }
        let asym = (self.h_tot - self.h_tot.transpose()).norm();
        if asym > 1e-12 * self.h_tot.norm().max(1.0) {
            return Err(invalid("h_tot", "must be symmetric"));
        }
        if self.h_tot.cholesky().is_none() {
            return Err(invalid("h_tot", "must be positive definite"));
        }
        Ok(())
    }
}

fn invalid(field: &'static str, reason: &str) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidState {
    pub v_poi: Vec3,
    pub omega: Vec3,
    pub p_poi: Vec3,
    pub eta: EulerAngles,
}

impl RigidState {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.v_poi);
        x.fixed_rows_mut::<3>(3).copy_from(&self.omega);
        x.fixed_rows_mut::<3>(6).copy_from(&self.p_poi);
        x.fixed_rows_mut::<3>(9).copy_from(&self.eta.to_vec());
        x
    }

    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            v_poi: x.fixed_rows::<3>(0).into_owned(),
            omega: x.fixed_rows::<3>(3).into_owned(),
            p_poi: x.fixed_rows::<3>(6).into_owned(),
            eta: EulerAngles::from_vec(&x.fixed_rows::<3>(9).into_owned()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub thrust: f64,
    pub tau_phi: f64,
    pub tau_theta: f64,
    pub tau_psi: f64,
}

impl ControlInput {
    pub const fn new(thrust: f64, tau_phi: f64, tau_theta: f64, tau_psi: f64) -> Self {
        Self {
            thrust,
            tau_phi,
            tau_theta,
            tau_psi,
        }
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.thrust, self.tau_phi, self.tau_theta, self.tau_psi)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedGeometry {
    pub m_tot: f64,
    /// POI position relative to the combined CoG, body frame.
    pub r_hat: Vec3,
    /// Signed body-z distance from the combined CoG up to the POI.
    pub alpha: f64,
    /// Combined inertia about the combined CoG.
    pub h_cog: Mat3,
}

pub fn derive_geometry(params: &VehicleParams) -> DerivedGeometry {
    let m_tot = params.m_tot();
    let ratio = params.m_pl / m_tot;
    let s_pl = skew(&params.r_pl);
    let h_cog = (params.m_uav * params.m_pl / m_tot) * s_pl.transpose() * s_pl + params.h_tot;
    let r_hat = params.r_poi - ratio * params.r_pl;
    DerivedGeometry {
        m_tot,
        r_hat,
        alpha: params.r_poi.z - ratio * params.r_pl.z,
        h_cog,
    }
}

fn mass_matrix_with(geo: &DerivedGeometry, r: &Mat3) -> Matrix6<f64> {
    let m = geo.m_tot;
    let s = skew(&geo.r_hat);
    let m1 = geo.h_cog + m * s.transpose() * s;
    let m1 = (m1 + m1.transpose()) * 0.5;
    let top_right = m * r * s;
    let mut b = Matrix6::zeros();
    b.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Mat3::identity() * m));
    b.fixed_view_mut::<3, 3>(0, 3).copy_from(&top_right);
    b.fixed_view_mut::<3, 3>(3, 0).copy_from(&top_right.transpose());
    b.fixed_view_mut::<3, 3>(3, 3).copy_from(&m1);
    b
}

/// Generalized inertia `B(eta)`; symmetric positive definite.
pub fn mass_matrix(params: &VehicleParams, eta: EulerAngles) -> Matrix6<f64> {
    mass_matrix_with(&derive_geometry(params), &rotation_zyx(eta))
}

/// The Kronecker-product velocity term
/// `m (Gamma^-T kron p_dot^T) R_eta S(r_hat)`, where `R_eta` stacks the
/// partials of `R` with respect to the three Euler angles.
fn kronecker_term(geo: &DerivedGeometry, eta: EulerAngles, v_poi: &Vec3) -> Result<Mat3> {
    let gi = gamma_inv(eta)?;
    let parts = rotation_partials(eta);
    let s = skew(&geo.r_hat);
    let mut rows = Mat3::zeros();
    for i in 0..3 {
        let mut row = nalgebra::RowVector3::zeros();
        for (k, part) in parts.iter().enumerate() {
            // part holds d(R^T)/d(eta_k); the stack uses dR/d(eta_k).
            row += gi[(k, i)] * v_poi.transpose() * part.transpose();
        }
        rows.set_row(i, &row);
    }
    Ok(geo.m_tot * rows * s)
}

fn coriolis_with(
    geo: &DerivedGeometry,
    r: &Mat3,
    eta: EulerAngles,
    v_poi: &Vec3,
    omega: &Vec3,
) -> Result<Matrix6<f64>> {
    let m = geo.m_tot;
    let s_r = skew(&geo.r_hat);
    let s_w = skew(omega);
    let m1 = geo.h_cog + m * s_r.transpose() * s_r;
    let m2 = s_r * s_w - s_w * s_r;
    let m3 = kronecker_term(geo, eta, v_poi)?;
    let mut c = Matrix6::zeros();
    c.fixed_view_mut::<3, 3>(0, 3).copy_from(&(m * r * s_w * s_r));
    c.fixed_view_mut::<3, 3>(3, 0).copy_from(&(m * m2 * r.transpose()));
    c.fixed_view_mut::<3, 3>(3, 3).copy_from(&(s_w * m1 - m3));
    Ok(c)
}

/// Velocity-coupling matrix `C(p_dot, omega, eta)`.
pub fn coriolis_matrix(params: &VehicleParams, state: &RigidState) -> Result<Matrix6<f64>> {
    let geo = derive_geometry(params);
    let r = rotation_zyx(state.eta);
    coriolis_with(&geo, &r, state.eta, &state.v_poi, &state.omega)
}

fn gravity_with(geo: &DerivedGeometry, g: f64, r: &Mat3) -> Vector6<f64> {
    let mg = geo.m_tot * g;
    // r^T e3 equals gamma(eta) e3 for this Euler convention.
    let up_body = r.row(2).transpose();
    let torque = -mg * skew(&geo.r_hat) * up_body;
    Vector6::new(0.0, 0.0, mg, torque.x, torque.y, torque.z)
}

/// Gravity term `G(eta) = [m g e3; -m g S(r_hat) Gamma e3]`.
///
/// The rotational block is the gradient of `m g e3^T p_cog` with respect to a
/// body-frame rotation; see the crate README for the sign convention.
pub fn gravity_vector(params: &VehicleParams, eta: EulerAngles) -> Vector6<f64> {
    gravity_with(&derive_geometry(params), params.g, &rotation_zyx(eta))
}

/// Input map `M_F(eta)`: thrust along body z, torques pass through.
pub fn input_matrix(eta: EulerAngles) -> Matrix6x4 {
    input_matrix_with(&rotation_zyx(eta))
}

fn input_matrix_with(r: &Mat3) -> Matrix6x4 {
    let mut m = Matrix6x4::zeros();
    m.fixed_view_mut::<3, 1>(0, 0).copy_from(&r.column(2));
    m[(3, 1)] = 1.0;
    m[(4, 2)] = 1.0;
    m[(5, 3)] = 1.0;
    m
}

/// Everything the state derivative and the input-output linearization need,
/// evaluated once per state.
pub(crate) struct Dynamics {
    pub b: Matrix6<f64>,
    pub m_f: Matrix6x4,
    /// `C [v; omega] + G`
    pub bias: Vector6<f64>,
    pub gamma_inv: Mat3,
}

impl Dynamics {
    pub fn evaluate(params: &VehicleParams, geo: &DerivedGeometry, state: &RigidState) -> Result<Self> {
        if !state.is_finite() {
            return Err(Error::NonFinite("state"));
        }
        state.eta.check_regular()?;
        let r = rotation_zyx(state.eta);
        let c = coriolis_with(geo, &r, state.eta, &state.v_poi, &state.omega)?;
        let vel = Vector6::new(
            state.v_poi.x,
            state.v_poi.y,
            state.v_poi.z,
            state.omega.x,
            state.omega.y,
            state.omega.z,
        );
        Ok(Self {
            b: mass_matrix_with(geo, &r),
            m_f: input_matrix_with(&r),
            bias: c * vel + gravity_with(geo, params.g, &r),
            gamma_inv: gamma_inv(state.eta)?,
        })
    }

    /// Generalized accelerations `[p_ddot; omega_dot]` under input `u`.
    pub fn accelerations(&self, u: &Vector4<f64>) -> Result<Vector6<f64>> {
        let rhs = self.m_f * u - self.bias;
        self.b
            .cholesky()
            .map(|ch| ch.solve(&rhs))
            .ok_or(Error::Singular("mass matrix"))
    }
}

/// State derivative of the full nonlinear model.
pub fn nonlinear_derivative(
    params: &VehicleParams,
    state: &RigidState,
    u: &ControlInput,
) -> Result<StateVector> {
    let geo = derive_geometry(params);
    nonlinear_derivative_with(params, &geo, state, &u.to_vector())
}

pub(crate) fn nonlinear_derivative_with(
    params: &VehicleParams,
    geo: &DerivedGeometry,
    state: &RigidState,
    u: &Vector4<f64>,
) -> Result<StateVector> {
    if !u.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("input"));
    }
    let dynamics = Dynamics::evaluate(params, geo, state)?;
    let acc = dynamics.accelerations(u)?;
    let eta_dot = dynamics.gamma_inv * state.omega;
    let mut dx = StateVector::zeros();
    dx.fixed_rows_mut::<6>(0).copy_from(&acc);
    dx.fixed_rows_mut::<3>(6).copy_from(&state.v_poi);
    dx.fixed_rows_mut::<3>(9).copy_from(&eta_dot);
    Ok(dx)
}

/// Kinetic and potential energy of the combined body, in joules.
pub fn energy(params: &VehicleParams, state: &RigidState) -> (f64, f64) {
    let geo = derive_geometry(params);
    let r = rotation_zyx(state.eta);
    let p_cog = state.p_poi - r * geo.r_hat;
    let v_cog = state.v_poi - r * skew(&state.omega) * geo.r_hat;
    let kinetic = 0.5 * geo.m_tot * v_cog.norm_squared()
        + 0.5 * (state.omega.transpose() * geo.h_cog * state.omega)[(0, 0)];
    let potential = geo.m_tot * params.g * p_cog.z;
    (kinetic, potential)
}

/// Body rates from Euler-angle rates, with the gimbal guard applied.
pub fn body_rates(eta: EulerAngles, eta_dot: &Vec3) -> Result<Vec3> {
    Ok(gamma(eta)? * eta_dot)
}
