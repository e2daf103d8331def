//! Closed-form Riccati solutions and the LQR law for the decoupled channels.

use nalgebra::{Complex, DMatrix, DVector, Matrix4, SMatrix, Vector4};
use twofloat::TwoFloat;

use crate::error::Result;
use crate::linear::{
    decouple, decoupling_permutation, CostWeights, InputScaling, LinearSubsystem, CHANNEL_OFFSET,
    INPUT_CHANNEL,
};
use crate::vehicle::{ControlInput, StateVector, VehicleParams};

pub type GainMatrix = SMatrix<f64, 4, 12>;

/// Closed-form stabilizing ARE solution for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiBlock {
    pub index: usize,
    pub p: DMatrix<f64>,
}

impl RiccatiBlock {
    /// `K = R^-1 B^T P` with `R = 1`.
    pub fn gain(&self, subsystem: &LinearSubsystem) -> DVector<f64> {
        self.p.transpose() * &subsystem.b
    }
}

/// `a - b + sigma` with `sigma = sqrt((a - b)^2 + a^2)`, without cancellation
/// when `b` dominates.
pub(crate) fn radicand(a: f64, b: f64) -> f64 {
    let s = a - b;
    let sigma = s.hypot(a);
    if s >= 0.0 {
        s + sigma
    } else {
        a * a / (sigma - s)
    }
}

/// `(a, b)` of the lateral closed forms: `a = sqrt(2 g q^7)`, `b = alpha q^4`.
pub(crate) fn lateral_ab(alpha: f64, q_hat: f64, g: f64) -> (f64, f64) {
    let q2 = q_hat * q_hat;
    let q4 = q2 * q2;
    ((2.0 * g).sqrt() * q_hat.powf(3.5), alpha * q4)
}

/// `(rho, rho - 1)` with `rho = radicand(a, b) / a`, computed from
/// `u = 1 - b / a` without cancellation.
pub(crate) fn lateral_rho(alpha: f64, q_hat: f64, g: f64) -> (f64, f64) {
    let u = 1.0 - alpha * (q_hat / (2.0 * g)).sqrt();
    let h = u.hypot(1.0);
    if u >= 0.0 {
        (u + h, u + u * u / (h + 1.0))
    } else {
        let d = h - u;
        (1.0 / d, (u - u * u / (h + 1.0)) / d)
    }
}

// `TwoFloat` division by a `TwoFloat` drops the low word of the quotient.
fn div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let r = TwoFloat::new_div(1.0, b.hi());
    a * (r + r * (1.0 - b * r))
}

// Entries are polynomials in t = sqrt(rho), evaluated in double-double and
// rounded once. The ARE residual amplifies entry errors by |P B B^T P| / |Q|,
// which reaches ~150 at large q_hat and negative alpha.
fn lateral_p(alpha: f64, q: f64, g: f64) -> DMatrix<f64> {
    type D = TwoFloat;
    let one = D::from(1.0);
    let qd = D::from(q);
    let gd = D::from(g);
    let u = one - D::from(alpha) * (qd / (2.0 * g)).sqrt();
    let h = (u * u + one).sqrt();
    let (rho, rho_m1) = if u >= 0.0 {
        (u + h, u + div(u * u, h + one))
    } else {
        let d = h - u;
        (div(one, d), div(u - div(u * u, h + one), d))
    };
    let t = rho.sqrt();
    let rho2 = rho * rho;
    let q4 = qd.sqrt().sqrt();
    let g4 = gd.sqrt().sqrt();
    let s4 = D::from(2.0).sqrt().sqrt();
    let s2 = s4 * s4;
    let q34 = q4 * q4 * q4;
    let g34 = g4 * g4 * g4;

    let p11 = div(s2 * s4 * qd * q34 * t, g4);
    let p12 = div(s2 * qd * q4 * q4 * rho, g4 * g4);
    let p22 = div(s4 * qd * q4 * t * (rho + one), g34);
    let p13 = s4 * g4 * qd * q4 * t * rho_m1;
    let p14 = qd * rho * (rho - 2.0);
    let p23 = qd * rho2;
    let p24 = div(s2 * s4 * q34 * (rho2 * rho_m1 - rho - one), g4 * t) / 2.0;
    let p33 = div(s2 * s4 * g34 * q34 * (rho2 * rho_m1 + rho + one), t) / 2.0;
    let p34 = s2 * q4 * q4 * g4 * g4 * rho * rho_m1 * rho_m1 / 2.0;
    let p44 = div(s4 * g4 * q4 * (rho2 * rho * rho_m1 * (rho - 2.0) + rho * 3.0 + one), t * rho) / 2.0;
    let [p11, p12, p13, p14, p22, p23, p24, p33, p34, p44] =
        [p11, p12, p13, p14, p22, p23, p24, p33, p34, p44].map(f64::from);

    DMatrix::from_row_slice(
        4,
        4,
        &[
            p11, p12, p13, p14, //
            p12, p22, p23, p24, //
            p13, p23, p33, p34, //
            p14, p24, p34, p44,
        ],
    )
}

/// Closed-form stabilizing solution of `A^T P + P A - P B B^T P + Q = 0`
/// for one decoupled channel with `Q = C^T q_hat^2 C`.
///
/// Channel 2 is channel 1 under the similarity `diag(-1, -1, 1, 1)`, which
/// flips the signs of the position/angle cross terms.
pub fn closed_form_riccati(subsystem: &LinearSubsystem) -> RiccatiBlock {
    let q = subsystem.q_hat;
    let p = match subsystem.index {
        1 => lateral_p(subsystem.alpha, q, subsystem.g),
        2 => {
            let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -1.0, 1.0, 1.0]));
            &d * lateral_p(subsystem.alpha, q, subsystem.g) * &d
        }
        _ => {
            let r = (2.0 * q).sqrt();
            DMatrix::from_row_slice(2, 2, &[q * r, q, q, r])
        }
    };
    RiccatiBlock {
        index: subsystem.index,
        p,
    }
}

/// Residual `A^T P + P A - P B B^T P + Q`, accumulated in double-double so
/// the result reflects `P` rather than the cancellation between the terms.
pub fn are_residual(subsystem: &LinearSubsystem, p: &DMatrix<f64>) -> DMatrix<f64> {
    let a = &subsystem.a;
    let b = &subsystem.b;
    let q = subsystem.state_weight();
    let n = a.nrows();
    let pb: Vec<TwoFloat> = (0..n)
        .map(|i| (0..n).fold(TwoFloat::from(0.0), |acc, k| acc + TwoFloat::new_mul(p[(i, k)], b[k])))
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let mut r = TwoFloat::from(q[(i, j)]) - pb[i] * pb[j];
        for k in 0..n {
            r += TwoFloat::new_mul(a[(k, i)], p[(k, j)]) + TwoFloat::new_mul(p[(i, k)], a[(k, j)]);
        }
        f64::from(r)
    })
}

/// `||residual||_F / ||Q||_F`.
pub fn relative_are_residual(subsystem: &LinearSubsystem, p: &DMatrix<f64>) -> f64 {
    are_residual(subsystem, p).norm() / subsystem.state_weight().norm()
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|e: &Complex<f64>| e.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn closed_loop_matrix(subsystem: &LinearSubsystem, block: &RiccatiBlock) -> DMatrix<f64> {
    &subsystem.a - &subsystem.b * block.gain(subsystem).transpose()
}

/// Scaled-input gain acting on the full-model state: `F_hat = -K x`.
/// Rows are ordered `(T, tau_phi, tau_theta, tau_psi)`.
pub fn lqr_gain(subsystems: &[LinearSubsystem; 4], blocks: &[RiccatiBlock; 4]) -> GainMatrix {
    let mut k_bar = GainMatrix::zeros();
    for (row, &ch) in INPUT_CHANNEL.iter().enumerate() {
        let k = blocks[ch].gain(&subsystems[ch]);
        for (j, v) in k.iter().enumerate() {
            k_bar[(row, CHANNEL_OFFSET[ch] + j)] = *v;
        }
    }
    k_bar * decoupling_permutation()
}

/// Hover LQR with the closed-form gains, producing raw thrust and torques.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrController {
    pub subsystems: [LinearSubsystem; 4],
    pub blocks: [RiccatiBlock; 4],
    /// Scaled gain on the full-model state.
    pub k_hat: GainMatrix,
    pub scaling: InputScaling,
    pub equilibrium: ControlInput,
}

impl LqrController {
    pub fn new(params: &VehicleParams, weights: &CostWeights) -> Result<Self> {
        let subsystems = decouple(params, weights)?;
        let blocks = [
            closed_form_riccati(&subsystems[0]),
            closed_form_riccati(&subsystems[1]),
            closed_form_riccati(&subsystems[2]),
            closed_form_riccati(&subsystems[3]),
        ];
        let k_hat = lqr_gain(&subsystems, &blocks);
        Ok(Self {
            subsystems,
            blocks,
            k_hat,
            scaling: InputScaling::new(params)?,
            equilibrium: crate::linear::hover_equilibrium(params).1,
        })
    }

    /// Scaled control `F_hat = -K x`.
    pub fn scaled_input(&self, x: &StateVector) -> Vector4<f64> {
        -(self.k_hat * x)
    }

    /// Raw deviation `F_star = Psi^-1 F_hat`.
    pub fn raw_deviation(&self, x: &StateVector) -> Vector4<f64> {
        self.scaling.psi_inv() * self.scaled_input(x)
    }

    /// Gain on the raw deviation, `F_star = -K_raw x`.
    pub fn raw_gain(&self) -> GainMatrix {
        self.scaling.psi_inv() * self.k_hat
    }

    /// Total commanded input, trim included.
    pub fn input(&self, x: &StateVector) -> Vector4<f64> {
        self.equilibrium.to_vector() + self.raw_deviation(x)
    }

    /// Block-diagonal `P` in the decoupled ordering.
    pub fn p_decoupled(&self) -> SMatrix<f64, 12, 12> {
        let mut p = SMatrix::<f64, 12, 12>::zeros();
        for (ch, block) in self.blocks.iter().enumerate() {
            let o = CHANNEL_OFFSET[ch];
            let n = block.p.nrows();
            for i in 0..n {
                for j in 0..n {
                    p[(o + i, o + j)] = block.p[(i, j)];
                }
            }
        }
        p
    }

    pub fn psi(&self) -> Matrix4<f64> {
        self.scaling.psi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{build_simplified, to_decoupled};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn double_integrator_example() {
        let s = LinearSubsystem::double_integrator(3, 140.0, 9.81);
        let b = closed_form_riccati(&s);
        let r = 280f64.sqrt();
        assert_relative_eq!(b.p, DMatrix::from_row_slice(2, 2, &[140.0 * r, 140.0, 140.0, r]));
        assert!(relative_are_residual(&s, &b.p) < 1e-14);
        let k = b.gain(&s);
        assert_relative_eq!(k[0], 140.0);
        assert_relative_eq!(k[1], r);
    }

    #[test]
    fn alpha_zero_p14_is_q() {
        for q in [0.1, 1.0, 37.0] {
            let b = closed_form_riccati(&LinearSubsystem::lateral(1, 0.0, q, 9.81));
            assert_eq!(b.p[(0, 3)], q);
        }
    }

    #[test]
    fn lateral_residual_and_stability() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let alpha = rng.random_range(-5.0..5.0);
            let q = 10f64.powf(rng.random_range(-2.0..4.0));
            for index in [1, 2] {
                let s = LinearSubsystem::lateral(index, alpha, q, 9.81);
                let b = closed_form_riccati(&s);
                let res = relative_are_residual(&s, &b.p);
                assert!(res < 1e-9, "alpha {alpha} q {q} residual {res}");
                assert!(spectral_abscissa(&closed_loop_matrix(&s, &b)) < 0.0);
                assert!(b.p.clone().cholesky().is_some());
            }
        }
    }

    #[test]
    fn radicand_is_positive() {
        for alpha in [-1e3, -5.0, 0.0, 5.0, 1e3] {
            for q in [1e-2, 1.0, 1e4] {
                let (a, b) = lateral_ab(alpha, q, 9.81);
                assert!(radicand(a, b) > 0.0);
            }
        }
    }

    #[test]
    fn gain_rows_follow_input_order() {
        let p = VehicleParams::reference();
        let c = LqrController::new(&p, &CostWeights::uniform(5.0)).unwrap();
        // thrust only sees z and z_dot
        let mut x = StateVector::zeros();
        x[8] = 1.0;
        let u = c.scaled_input(&x);
        assert_relative_eq!(u[0], -c.subsystems[2].q_hat);
        assert_eq!((u[1], u[2], u[3]), (0.0, 0.0, 0.0));
        assert_eq!(c.scaled_input(&StateVector::zeros()), Vector4::zeros());
        assert_eq!(c.input(&StateVector::zeros()), c.equilibrium.to_vector());
    }

    #[test]
    fn full_closed_loop_is_hurwitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let z_pl = rng.random_range(-3.0..3.0);
            let z_poi = rng.random_range(-3.0..3.0);
            let q = rng.random_range(0.5..50.0);
            let p = VehicleParams::reference().with_heights(z_pl, z_poi);
            let c = LqrController::new(&p, &CostWeights::uniform(q)).unwrap();
            let lin = build_simplified(&p, &c.scaling).unwrap();
            let acl = lin.a - lin.b * c.raw_gain();
            let dm = DMatrix::from_column_slice(12, 12, acl.as_slice());
            assert!(spectral_abscissa(&dm) < 0.0);
        }
    }

    #[test]
    fn quadratic_form_in_decoupled_coordinates() {
        let p = VehicleParams::reference();
        let c = LqrController::new(&p, &CostWeights::uniform(2.0)).unwrap();
        let pd = c.p_decoupled();
        assert_eq!(pd, pd.transpose());
        let x = StateVector::from_fn(|i, _| 0.1 * i as f64 - 0.3);
        let xb = to_decoupled(&x);
        assert!((xb.transpose() * pd * xb)[0] > 0.0);
    }
}
