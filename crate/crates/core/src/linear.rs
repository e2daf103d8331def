//! Hover trim, linearization, input scaling and the four decoupled channels.
//!
//! Full-model vectors use the order `[p_dot, omega, p, eta]`. The decoupled
//! order stacks the channels
//!
//! ```text
//! x1 = [x, x_dot, theta, omega_y]   (driven by scaled tau_theta)
//! x2 = [y, y_dot, phi,   omega_x]   (driven by scaled tau_phi)
//! x3 = [z, z_dot]                   (driven by scaled thrust)
//! x4 = [psi, omega_z]               (driven by scaled tau_psi)
//! ```
//!
//! and [`DECOUPLED_ORDER`] maps each decoupled slot to its full-model index.

use nalgebra::{DMatrix, DVector, Matrix4, SMatrix, Vector4};

use crate::error::{Error, Result};
use crate::vehicle::{
    derive_geometry, gravity_vector, nonlinear_derivative_with, ControlInput, RigidState, StateVector,
    VehicleParams,
};
use crate::spatial::EulerAngles;

pub type Matrix12 = SMatrix<f64, 12, 12>;
pub type Matrix12x4 = SMatrix<f64, 12, 4>;

/// `DECOUPLED_ORDER[k]` is the full-model index of decoupled slot `k`.
pub const DECOUPLED_ORDER: [usize; 12] = [6, 0, 10, 4, 7, 1, 9, 3, 8, 2, 11, 5];

/// Decoupled slots of the four outputs `(x, y, z, psi)`.
pub const OUTPUT_SLOTS: [usize; 4] = [0, 4, 8, 10];

/// Channel feeding each input `(T, tau_phi, tau_theta, tau_psi)`, zero-based.
pub const INPUT_CHANNEL: [usize; 4] = [2, 1, 0, 3];

/// Offset of each channel inside the decoupled vector.
pub const CHANNEL_OFFSET: [usize; 4] = [0, 4, 8, 10];

pub fn to_decoupled(x: &StateVector) -> StateVector {
    StateVector::from_fn(|k, _| x[DECOUPLED_ORDER[k]])
}

pub fn from_decoupled(xbar: &StateVector) -> StateVector {
    let mut x = StateVector::zeros();
    for (k, &i) in DECOUPLED_ORDER.iter().enumerate() {
        x[i] = xbar[k];
    }
    x
}

/// Permutation matrix `T` with `x_bar = T x`.
pub fn decoupling_permutation() -> Matrix12 {
    let mut t = Matrix12::zeros();
    for (k, &i) in DECOUPLED_ORDER.iter().enumerate() {
        t[(k, i)] = 1.0;
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: Matrix12,
    /// Input matrix for raw input deviations `F_u - F_eq`.
    pub b: Matrix12x4,
    pub equilibrium_input: ControlInput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputScaling {
    /// Raw deviation to scaled input, `F_hat = psi * F_star`.
    pub psi: Matrix4<f64>,
    pub b1: f64,
    pub b2: f64,
}

impl InputScaling {
    pub fn new(params: &VehicleParams) -> Result<Self> {
        let m_tot = params.m_tot();
        let shift = params.m_pl * params.m_uav * params.r_pl.z * params.r_pl.z;
        let b1 = shift + params.h_tot[(1, 1)] * m_tot;
        let b2 = shift + params.h_tot[(0, 0)] * m_tot;
        let hzz = params.h_tot[(2, 2)];
        if !(b1 > 0.0 && b2 > 0.0 && hzz > 0.0) {
            return Err(Error::InvalidParameter {
                field: "h_tot",
                reason: "lateral inertia constants must be positive".into(),
            });
        }
        let psi = Matrix4::from_diagonal(&Vector4::new(1.0 / m_tot, m_tot / b2, m_tot / b1, 1.0 / hzz));
        Ok(Self { psi, b1, b2 })
    }

    pub fn psi_inv(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&self.psi.diagonal().map(|d| 1.0 / d))
    }
}

/// One decoupled channel `x_i' = A_i x_i + B_i u_i` with scaled weight `q_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSubsystem {
    /// 1..=4
    pub index: usize,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub alpha: f64,
    pub q_hat: f64,
    pub g: f64,
}

impl LinearSubsystem {
    pub fn lateral(index: usize, alpha: f64, q_hat: f64, g: f64) -> Self {
        assert!(index == 1 || index == 2, "lateral channels are 1 and 2");
        let sign = if index == 1 { 1.0 } else { -1.0 };
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 1)] = 1.0;
        a[(1, 2)] = sign * g;
        a[(2, 3)] = 1.0;
        let b = DVector::from_vec(vec![0.0, sign * alpha, 0.0, 1.0]);
        Self {
            index,
            a,
            b,
            alpha,
            q_hat,
            g,
        }
    }

    pub fn double_integrator(index: usize, q_hat: f64, g: f64) -> Self {
        assert!(index == 3 || index == 4, "double integrators are channels 3 and 4");
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = 1.0;
        Self {
            index,
            a,
            b: DVector::from_vec(vec![0.0, 1.0]),
            alpha: 0.0,
            q_hat,
            g,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_lateral(&self) -> bool {
        self.index <= 2
    }

    /// State weight `C^T q_hat^2 C` with the output being the first state.
    pub fn state_weight(&self) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.dim(), self.dim());
        q[(0, 0)] = self.q_hat * self.q_hat;
        q
    }

    pub fn output_row(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(1, self.dim());
        c[(0, 0)] = 1.0;
        c
    }
}

/// Checks the diagonal-inertia and on-axis-geometry assumptions the closed
/// forms depend on.
pub fn check_assumptions(params: &VehicleParams) -> Result<()> {
    let h = &params.h_tot;
    let tol = 1e-12 * h.norm();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        if h[(i, j)].abs() > tol || h[(j, i)].abs() > tol {
            return Err(Error::AssumptionViolated(format!(
                "inertia h_tot must be diagonal (entry ({i},{j}) = {})",
                h[(i, j)]
            )));
        }
    }
    for (name, r) in [("r_pl", &params.r_pl), ("r_poi", &params.r_poi)] {
        if r.x.abs() > 1e-12 || r.y.abs() > 1e-12 {
            return Err(Error::AssumptionViolated(format!(
                "{name} must lie on the body z-axis (x = {}, y = {})",
                r.x, r.y
            )));
        }
    }
    Ok(())
}

/// Hover trim at the origin with zero yaw. Torques cancel the gravity moment
/// about the POI, which vanishes when POI and payload sit on the body z-axis.
pub fn hover_equilibrium(params: &VehicleParams) -> (RigidState, ControlInput) {
    let gv = gravity_vector(params, EulerAngles::zero());
    (
        RigidState::zero(),
        ControlInput::new(params.m_tot() * params.g, gv[3], gv[4], gv[5]),
    )
}

/// Central-difference linearization of the full model at hover.
pub fn linearize_numeric(params: &VehicleParams) -> Result<LinearModel> {
    let geo = derive_geometry(params);
    let (x_eq, u_eq) = hover_equilibrium(params);
    let x0 = x_eq.to_vector();
    let u0 = u_eq.to_vector();
    let f = |x: &StateVector, u: &Vector4<f64>| {
        nonlinear_derivative_with(params, &geo, &RigidState::from_vector(x), u)
    };
    let mut a = Matrix12::zeros();
    for k in 0..12 {
        let h = 1e-6 * x0[k].abs().max(1.0);
        let mut xp = x0;
        let mut xm = x0;
        xp[k] += h;
        xm[k] -= h;
        a.set_column(k, &((f(&xp, &u0)? - f(&xm, &u0)?) / (2.0 * h)));
    }
    let mut b = Matrix12x4::zeros();
    for k in 0..4 {
        let h = 1e-6 * u0[k].abs().max(1.0);
        let mut up = u0;
        let mut um = u0;
        up[k] += h;
        um[k] -= h;
        b.set_column(k, &((f(&x0, &up)? - f(&x0, &um)?) / (2.0 * h)));
    }
    Ok(LinearModel {
        a,
        b,
        equilibrium_input: u_eq,
    })
}

/// Closed-form hover linearization under the diagonal-inertia and on-axis
/// assumptions, expressed for raw input deviations.
pub fn build_simplified(params: &VehicleParams, scaling: &InputScaling) -> Result<LinearModel> {
    check_assumptions(params)?;
    let alpha = derive_geometry(params).alpha;
    let g = params.g;
    let mut a = Matrix12::zeros();
    a[(0, 10)] = g;
    a[(1, 9)] = -g;
    for k in 0..6 {
        a[(6 + k, k)] = 1.0;
    }
    let mut b_hat = Matrix12x4::zeros();
    b_hat[(0, 2)] = alpha;
    b_hat[(1, 1)] = -alpha;
    for k in 0..4 {
        b_hat[(2 + k, k)] = 1.0;
    }
    Ok(LinearModel {
        a,
        b: b_hat * scaling.psi,
        equilibrium_input: hover_equilibrium(params).1,
    })
}

/// Positive output weights `q_1..q_4` on `(x, y, z, psi)`; the input weight
/// is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub q: [f64; 4],
}

impl CostWeights {
    pub fn uniform(q: f64) -> Self {
        Self { q: [q; 4] }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, q) in self.q.iter().enumerate() {
            if !(q.is_finite() && *q > 0.0) {
                return Err(Error::InvalidParameter {
                    field: "weights",
                    reason: format!("q{} must be positive and finite, got {q}", i + 1),
                });
            }
        }
        Ok(())
    }
}

/// Scaled weights `q_hat_1..q_hat_4`.
pub fn scaled_weights(params: &VehicleParams, weights: &CostWeights) -> Result<[f64; 4]> {
    let scaling = InputScaling::new(params)?;
    let m_tot = params.m_tot();
    Ok([
        scaling.b1 / m_tot * weights.q[0],
        scaling.b2 / m_tot * weights.q[1],
        m_tot * weights.q[2],
        params.h_tot[(2, 2)] * weights.q[3],
    ])
}

pub fn decouple(params: &VehicleParams, weights: &CostWeights) -> Result<[LinearSubsystem; 4]> {
    check_assumptions(params)?;
    weights.validate()?;
    let alpha = derive_geometry(params).alpha;
    let q_hat = scaled_weights(params, weights)?;
    let g = params.g;
    Ok([
        LinearSubsystem::lateral(1, alpha, q_hat[0], g),
        LinearSubsystem::lateral(2, alpha, q_hat[1], g),
        LinearSubsystem::double_integrator(3, q_hat[2], g),
        LinearSubsystem::double_integrator(4, q_hat[3], g),
    ])
}

/// Zeros of the position transfer function of a channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransferZeros {
    Pair {
        zeros: [nalgebra::Complex<f64>; 2],
        non_minimum_phase: bool,
    },
    NoFiniteZeros,
}

/// Closed-form zeros of `(alpha s^2 + g)`: imaginary for `alpha > 0`, a
/// real mirrored pair for `alpha < 0`.
pub fn transfer_zeros(subsystem: &LinearSubsystem) -> TransferZeros {
    use nalgebra::Complex;
    if !subsystem.is_lateral() || subsystem.alpha == 0.0 {
        return TransferZeros::NoFiniteZeros;
    }
    let w = (subsystem.g / subsystem.alpha.abs()).sqrt();
    if subsystem.alpha > 0.0 {
        TransferZeros::Pair {
            zeros: [Complex::new(0.0, w), Complex::new(0.0, -w)],
            non_minimum_phase: false,
        }
    } else {
        TransferZeros::Pair {
            zeros: [Complex::new(w, 0.0), Complex::new(-w, 0.0)],
            non_minimum_phase: true,
        }
    }
}
