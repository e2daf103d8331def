//! Closed-loop simulation of the nonlinear and linearized models under the
//! hover LQR, with input white noise, cost accounting and Monte Carlo H2
//! estimation.

use std::io::Write;

use nalgebra::{DMatrix, SVector, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrate::{rk4_step, AdaptiveOptions, Dopri5};
use crate::linear::{build_simplified, CostWeights, LinearModel, INPUT_CHANNEL};
use crate::riccati::{closed_loop_matrix, spectral_abscissa, LqrController};
use crate::spatial::EulerAngles;
use crate::vehicle::{derive_geometry, nonlinear_derivative_with, ControlInput, RigidState, StateVector, VehicleParams};

/// Full-model indices of the outputs `(x, y, z, psi)`.
const OUTPUT_INDEX: [usize; 4] = [6, 7, 8, 11];

/// State, per-channel scaled cost, output-weighted cost and physical cost.
type Augmented = SVector<f64, 18>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Rk4Fixed,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Nonlinear,
    Linearized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Fixed step for RK4, output spacing for the adaptive integrator.
    pub dt: f64,
    pub horizon: f64,
    pub integrator: Integrator,
    /// Intensity of the input white noise.
    pub noise_sigma: f64,
    pub seed: u64,
    pub model: ModelKind,
    /// Raw inputs `(T, tau_phi, tau_theta, tau_psi)` that receive noise.
    pub noise_channels: [bool; 4],
    /// Keep every n-th sample.
    pub record_every: usize,
    pub adaptive: AdaptiveOptions,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 10.0,
            integrator: Integrator::Rk4Fixed,
            noise_sigma: 0.0,
            seed: 0,
            model: ModelKind::Nonlinear,
            noise_channels: [true; 4],
            record_every: 1,
            adaptive: AdaptiveOptions::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| {
            Err(Error::InvalidParameter {
                field,
                reason: reason.into(),
            })
        };
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", "must be positive");
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return bad("horizon", "must be at least dt");
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise_sigma", "must be nonnegative");
        }
        if self.noise_sigma > 0.0 && self.integrator != Integrator::Rk4Fixed {
            return bad("integrator", "noise runs require the fixed-step RK4 integrator");
        }
        if self.record_every == 0 {
            return bad("record_every", "must be at least 1");
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    SingularAttitude,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<RigidState>,
    /// Applied inputs, trim and noise included.
    pub inputs: Vec<ControlInput>,
    /// Scaled cost `int |y|^2_Qhat + |F_hat|^2`.
    pub cumulative_cost: Vec<f64>,
    /// Cost with the unscaled weights, `int |y|^2_Q + |Psi F_hat|^2`.
    pub raw_cost: Vec<f64>,
    /// `int |y|^2_Q + |F_star|^2` with the physical input deviation
    /// `F_star = Psi^-1 F_hat`.
    pub physical_cost: Vec<f64>,
    /// Scaled cost split by channel.
    pub channel_costs: Vec<[f64; 4]>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_cost(&self) -> f64 {
        self.cumulative_cost.last().copied().unwrap_or(0.0)
    }

    pub fn final_raw_cost(&self) -> f64 {
        self.raw_cost.last().copied().unwrap_or(0.0)
    }

    pub fn final_physical_cost(&self) -> f64 {
        self.physical_cost.last().copied().unwrap_or(0.0)
    }

    /// CSV with `#` metadata lines, a header row and one row per sample.
    pub fn write_csv<W: Write>(&self, mut out: W, metadata: &[(String, String)]) -> std::io::Result<()> {
        for (k, v) in metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        writeln!(
            out,
            "t,vx,vy,vz,wx,wy,wz,x,y,z,phi,theta,psi,thrust,tau_phi,tau_theta,tau_psi,cost"
        )?;
        for i in 0..self.len() {
            let x = self.states[i].to_vector();
            let u = self.inputs[i].to_vector();
            write!(out, "{}", self.times[i])?;
            for v in x.iter().chain(u.iter()) {
                write!(out, ",{v}")?;
            }
            writeln!(out, ",{}", self.cumulative_cost[i])?;
        }
        Ok(())
    }
}

/// Zero-order-hold white noise: each sample is held for one step of length
/// `dt` and has variance `sigma^2 / dt`, so the spectral level is `sigma^2`.
#[derive(Debug, Clone)]
pub struct WhiteNoise {
    rng: ChaCha8Rng,
    std: f64,
    channels: [bool; 4],
}

impl WhiteNoise {
    pub fn new(sigma: f64, dt: f64, channels: [bool; 4], seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            std: sigma / dt.sqrt(),
            channels,
        }
    }

    pub fn sample(&mut self) -> Vector4<f64> {
        let mut w = Vector4::zeros();
        if self.std > 0.0 {
            for k in 0..4 {
                if self.channels[k] {
                    let z: f64 = StandardNormal.sample(&mut self.rng);
                    w[k] = self.std * z;
                }
            }
        }
        w
    }
}

/// Closed loop shared by every run with the same parameters and weights.
struct ClosedLoop {
    params: VehicleParams,
    geo: crate::vehicle::DerivedGeometry,
    ctrl: LqrController,
    linear: LinearModel,
    q_hat_sq: [f64; 4],
    q_sq: [f64; 4],
}

impl ClosedLoop {
    fn new(params: &VehicleParams, weights: &CostWeights) -> Result<Self> {
        params.validate()?;
        let ctrl = LqrController::new(params, weights)?;
        let linear = build_simplified(params, &ctrl.scaling)?;
        let q_hat_sq = std::array::from_fn(|c| ctrl.subsystems[c].q_hat.powi(2));
        Ok(Self {
            params: params.clone(),
            geo: derive_geometry(params),
            ctrl,
            linear,
            q_hat_sq,
            q_sq: weights.q.map(|q| q * q),
        })
    }

    fn rhs(&self, model: ModelKind, y: &Augmented, w: &Vector4<f64>) -> Result<Augmented> {
        let x: StateVector = y.fixed_rows::<12>(0).into_owned();
        let f_hat = self.ctrl.scaled_input(&x);
        let f_star = self.ctrl.scaling.psi_inv() * f_hat;
        let dev = f_star + w;
        let dx = match model {
            ModelKind::Nonlinear => nonlinear_derivative_with(
                &self.params,
                &self.geo,
                &RigidState::from_vector(&x),
                &(self.ctrl.equilibrium.to_vector() + dev),
            )?,
            ModelKind::Linearized => self.linear.a * x + self.linear.b * dev,
        };
        let mut out = Augmented::zeros();
        out.fixed_rows_mut::<12>(0).copy_from(&dx);
        let psi_f = self.ctrl.scaling.psi * f_hat;
        let mut raw = psi_f.norm_squared();
        let mut physical = f_star.norm_squared();
        for (row, &c) in INPUT_CHANNEL.iter().enumerate() {
            let out_c = x[OUTPUT_INDEX[c]];
            out[12 + c] = self.q_hat_sq[c] * out_c * out_c + f_hat[row] * f_hat[row];
            raw += self.q_sq[c] * out_c * out_c;
            physical += self.q_sq[c] * out_c * out_c;
        }
        out[16] = raw;
        out[17] = physical;
        Ok(out)
    }

    fn applied_input(&self, x: &StateVector, w: &Vector4<f64>) -> ControlInput {
        ControlInput::from_vector(&(self.ctrl.input(x) + w))
    }
}

/// Runs the closed loop from `initial` (a deviation from hover).
pub fn simulate(
    params: &VehicleParams,
    weights: &CostWeights,
    config: &SimConfig,
    initial: &RigidState,
) -> Result<Trajectory> {
    let cl = ClosedLoop::new(params, weights)?;
    simulate_with(&cl, config, initial, config.seed, 0)
}

fn simulate_with(
    cl: &ClosedLoop,
    config: &SimConfig,
    initial: &RigidState,
    seed: u64,
    stream: u64,
) -> Result<Trajectory> {
    config.validate()?;
    if !initial.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    initial.eta.check_regular()?;

    let mut noise = WhiteNoise::new(config.noise_sigma, config.dt, config.noise_channels, seed, stream);

    let steps = config.steps();
    let capacity = steps / config.record_every + 2;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        inputs: Vec::with_capacity(capacity),
        cumulative_cost: Vec::with_capacity(capacity),
        raw_cost: Vec::with_capacity(capacity),
        physical_cost: Vec::with_capacity(capacity),
        channel_costs: Vec::with_capacity(capacity),
        termination: Termination::Completed,
    };
    let record = |traj: &mut Trajectory, t: f64, y: &Augmented, w: &Vector4<f64>| {
        let x: StateVector = y.fixed_rows::<12>(0).into_owned();
        traj.times.push(t);
        traj.states.push(RigidState::from_vector(&x));
        traj.inputs.push(cl.applied_input(&x, w));
        traj.cumulative_cost.push(y[12] + y[13] + y[14] + y[15]);
        traj.raw_cost.push(y[16]);
        traj.physical_cost.push(y[17]);
        traj.channel_costs.push([y[12], y[13], y[14], y[15]]);
    };

    let mut y = Augmented::zeros();
    y.fixed_rows_mut::<12>(0).copy_from(&initial.to_vector());
    let mut solver = Dopri5::new(config.adaptive);
    let mut w = noise.sample();
    record(&mut traj, 0.0, &y, &w);

    for k in 0..steps {
        let t = k as f64 * config.dt;
        let t_next = (k + 1) as f64 * config.dt;
        let step = match config.integrator {
            Integrator::Rk4Fixed => rk4_step(|_, s| cl.rhs(config.model, s, &w), t, &y, config.dt),
            Integrator::Adaptive => solver.integrate(|_, s| cl.rhs(config.model, s, &w), t, &y, t_next),
        };
        y = match step {
            Ok(next) => next,
            Err(Error::SingularAttitude { .. }) => {
                traj.termination = Termination::SingularAttitude;
                return Ok(traj);
            }
            Err(Error::NonFinite(_)) => {
                traj.termination = Termination::Diverged;
                return Ok(traj);
            }
            Err(e) => return Err(e),
        };
        let norm = y.fixed_rows::<12>(0).norm();
        if !norm.is_finite() || norm > 1e6 {
            traj.termination = Termination::Diverged;
            return Ok(traj);
        }
        w = noise.sample();
        if (k + 1) % config.record_every == 0 || k + 1 == steps {
            record(&mut traj, t_next, &y, &w);
        }
    }
    Ok(traj)
}

/// Initial deviation with roll and pitch both set to `angle`.
pub fn attitude_offset(angle: f64) -> RigidState {
    RigidState {
        eta: EulerAngles::new(angle, angle, 0.0),
        ..RigidState::zero()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelComparison {
    pub angle: f64,
    pub times: Vec<f64>,
    /// `|x_nonlinear(t) - x_linear(t)|`
    pub error: Vec<f64>,
    pub termination: Termination,
}

impl ModelComparison {
    pub fn peak(&self) -> f64 {
        self.error.iter().copied().fold(0.0, f64::max)
    }
}

/// State error between the nonlinear and linearized closed loops for each
/// initial roll/pitch angle. Noise is switched off.
pub fn compare_models(
    params: &VehicleParams,
    weights: &CostWeights,
    config: &SimConfig,
    initial_angles: &[f64],
) -> Result<Vec<ModelComparison>> {
    let cl = ClosedLoop::new(params, weights)?;
    let base = SimConfig {
        noise_sigma: 0.0,
        ..config.clone()
    };
    initial_angles
        .par_iter()
        .map(|&angle| {
            let x0 = attitude_offset(angle);
            let nl = simulate_with(
                &cl,
                &SimConfig {
                    model: ModelKind::Nonlinear,
                    ..base.clone()
                },
                &x0,
                base.seed,
                0,
            )?;
            let lin = simulate_with(
                &cl,
                &SimConfig {
                    model: ModelKind::Linearized,
                    ..base.clone()
                },
                &x0,
                base.seed,
                0,
            )?;
            let n = nl.len().min(lin.len());
            let error = (0..n)
                .map(|i| (nl.states[i].to_vector() - lin.states[i].to_vector()).norm())
                .collect();
            Ok(ModelComparison {
                angle,
                times: nl.times[..n].to_vec(),
                error,
                termination: nl.termination,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct H2Estimate {
    pub value: f64,
    pub standard_error: f64,
    /// Steps averaged per run after burn-in.
    pub n_steps: usize,
    pub n_runs: usize,
    pub burn_in: f64,
    pub analytical: f64,
}

impl H2Estimate {
    pub fn relative_error(&self) -> f64 {
        (self.value - self.analytical).abs() / self.analytical
    }
}

/// Monte Carlo estimate of the H2 norm of `channel` (1..=4): white noise on
/// the raw input driving that channel, steady-state mean of the channel's
/// performance output, normalized by the scaled noise intensity.
///
/// Each run first discards five time constants of the slowest closed-loop
/// mode, then averages over `config.horizon` seconds.
pub fn estimate_h2(
    params: &VehicleParams,
    weights: &CostWeights,
    config: &SimConfig,
    channel: usize,
    n_seeds: usize,
) -> Result<H2Estimate> {
    if !(1..=4).contains(&channel) {
        return Err(Error::InvalidParameter {
            field: "channel",
            reason: format!("must be 1..=4, got {channel}"),
        });
    }
    if !(config.noise_sigma > 0.0) {
        return Err(Error::InvalidParameter {
            field: "noise_sigma",
            reason: "H2 estimation needs a positive noise intensity".into(),
        });
    }
    if config.integrator != Integrator::Rk4Fixed {
        return Err(Error::InvalidParameter {
            field: "integrator",
            reason: "H2 estimation requires the fixed-step RK4 integrator".into(),
        });
    }
    if n_seeds < 2 {
        return Err(Error::InvalidParameter {
            field: "n_seeds",
            reason: "need at least two runs for a standard error".into(),
        });
    }
    let c = channel - 1;
    let cl = ClosedLoop::new(params, weights)?;
    let sub = &cl.ctrl.subsystems[c];
    let decay = -spectral_abscissa(&closed_loop_matrix(sub, &cl.ctrl.blocks[c]));
    let burn_in = 5.0 / decay;
    let input = INPUT_CHANNEL.iter().position(|&ch| ch == c).unwrap();
    let mut noise_channels = [false; 4];
    noise_channels[input] = true;
    let run_config = SimConfig {
        noise_channels,
        record_every: 1,
        horizon: burn_in + config.horizon,
        ..config.clone()
    };
    let burn_steps = (burn_in / config.dt).ceil() as usize;

    let per_run: Vec<Result<(f64, usize)>> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let traj = simulate_with(&cl, &run_config, &RigidState::zero(), config.seed, s)?;
            if traj.termination != Termination::Completed {
                return Err(Error::Diverged {
                    t: traj.times.last().copied().unwrap_or(0.0),
                    norm: traj.states.last().map(|x| x.to_vector().norm()).unwrap_or(f64::NAN),
                });
            }
            let costs = &traj.channel_costs;
            let last = costs.len() - 1;
            let span = traj.times[last] - traj.times[burn_steps];
            Ok(((costs[last][c] - costs[burn_steps][c]) / span, last - burn_steps))
        })
        .collect();
    let mut means = Vec::with_capacity(n_seeds);
    let mut n_steps = 0;
    for r in per_run {
        let (m, n) = r?;
        means.push(m);
        n_steps = n;
    }
    let n = means.len() as f64;
    let mean = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let intensity = cl.ctrl.scaling.psi[(input, input)] * config.noise_sigma;
    let value = mean.sqrt() / intensity;
    // delta method on sqrt
    let standard_error = (var / n).sqrt() / (2.0 * mean.sqrt()) / intensity;
    Ok(H2Estimate {
        value,
        standard_error,
        n_steps,
        n_runs: means.len(),
        burn_in,
        analytical: crate::h2::analytical_h2(sub),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostGap {
    pub weights: CostWeights,
    pub initial: RigidState,
    pub j_above: f64,
    pub j_below: f64,
    pub j_hat_above: f64,
    pub j_hat_below: f64,
    pub j_phys_above: f64,
    pub j_phys_below: f64,
}

impl CostGap {
    /// `J_below - J_above` for the raw cost.
    pub fn gap(&self) -> f64 {
        self.j_below - self.j_above
    }

    pub fn scaled_gap(&self) -> f64 {
        self.j_hat_below - self.j_hat_above
    }

    pub fn physical_gap(&self) -> f64 {
        self.j_phys_below - self.j_phys_above
    }
}

/// Nonlinear closed-loop costs with the payload at the POI, for
/// `alpha = +|alpha|` and `alpha = -|alpha|`, over every weight set and
/// initial condition. Rows are weight-major.
///
/// [`CostGap::gap`] uses `int |y|^2_Q + |Psi F_hat|^2`, a per-channel
/// rescaling of the optimized cost.
pub fn cost_comparison(
    params: &VehicleParams,
    weight_sets: &[CostWeights],
    config: &SimConfig,
    alpha_magnitude: f64,
    initial_set: &[RigidState],
) -> Result<Vec<CostGap>> {
    if !(alpha_magnitude > 0.0) {
        return Err(Error::InvalidParameter {
            field: "alpha_magnitude",
            reason: "must be positive".into(),
        });
    }
    let cfg = SimConfig {
        model: ModelKind::Nonlinear,
        ..config.clone()
    };
    let above = params.with_payload_at_poi(alpha_magnitude);
    let below = params.with_payload_at_poi(-alpha_magnitude);
    let jobs: Vec<(CostWeights, RigidState)> = weight_sets
        .iter()
        .flat_map(|w| initial_set.iter().map(move |x| (*w, *x)))
        .collect();
    jobs.par_iter()
        .map(|(w, x0)| {
            let run = |p: &VehicleParams| -> Result<Trajectory> {
                let t = simulate(p, w, &cfg, x0)?;
                if t.termination != Termination::Completed {
                    return Err(Error::Diverged {
                        t: t.times.last().copied().unwrap_or(0.0),
                        norm: f64::NAN,
                    });
                }
                Ok(t)
            };
            let a = run(&above)?;
            let b = run(&below)?;
            Ok(CostGap {
                weights: *w,
                initial: *x0,
                j_above: a.final_raw_cost(),
                j_below: b.final_raw_cost(),
                j_hat_above: a.final_cost(),
                j_hat_below: b.final_cost(),
                j_phys_above: a.final_physical_cost(),
                j_phys_below: b.final_physical_cost(),
            })
        })
        .collect()
}

/// Closed-loop matrix of the linearized model in full-model coordinates.
pub fn linear_closed_loop(params: &VehicleParams, weights: &CostWeights) -> Result<DMatrix<f64>> {
    let cl = ClosedLoop::new(params, weights)?;
    let acl = cl.linear.a - cl.linear.b * cl.ctrl.raw_gain();
    Ok(DMatrix::from_column_slice(12, 12, acl.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::to_decoupled;
    use approx::assert_relative_eq;

    fn quick() -> SimConfig {
        SimConfig {
            dt: 1e-3,
            horizon: 2.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        let p = VehicleParams::reference();
        let w = CostWeights::uniform(5.0);
        let bad = SimConfig {
            dt: 0.0,
            ..quick()
        };
        assert!(simulate(&p, &w, &bad, &RigidState::zero()).is_err());
        let bad = SimConfig {
            noise_sigma: 0.1,
            integrator: Integrator::Adaptive,
            ..quick()
        };
        assert!(bad.validate().is_err());
        let bad = SimConfig {
            horizon: 1e-4,
            ..quick()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn equilibrium_stays_put() {
        let p = VehicleParams::reference();
        let w = CostWeights::uniform(5.0);
        for model in [ModelKind::Nonlinear, ModelKind::Linearized] {
            for integrator in [Integrator::Rk4Fixed, Integrator::Adaptive] {
                let cfg = SimConfig {
                    model,
                    integrator,
                    ..quick()
                };
                let t = simulate(&p, &w, &cfg, &RigidState::zero()).unwrap();
                assert_eq!(t.termination, Termination::Completed);
                assert!(t.states.iter().all(|s| s.to_vector() == StateVector::zeros()));
                assert_eq!(t.final_cost(), 0.0);
                assert_eq!(t.inputs[5], ControlInput::new(274.68, 0.0, 0.0, 0.0));
            }
        }
    }

    #[test]
    fn costs_are_nondecreasing() {
        let p = VehicleParams::reference();
        let x0 = RigidState {
            p_poi: crate::spatial::Vec3::new(-0.5, 0.0, 0.5),
            ..RigidState::zero()
        };
        let t = simulate(&p, &CostWeights::uniform(10.0), &quick(), &x0).unwrap();
        for w in t.cumulative_cost.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in t.raw_cost.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in t.physical_cost.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert_eq!(t.times.len(), t.states.len());
        assert_eq!(t.inputs.len(), t.cumulative_cost.len());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let p = VehicleParams::reference();
        let w = CostWeights::uniform(5.0);
        let cfg = SimConfig {
            noise_sigma: 0.1,
            horizon: 0.5,
            ..quick()
        };
        let a = simulate(&p, &w, &cfg, &RigidState::zero()).unwrap();
        let b = simulate(&p, &w, &cfg, &RigidState::zero()).unwrap();
        assert_eq!(a, b);
        let c = simulate(&p, &w, &SimConfig { seed: 1, ..cfg.clone() }, &RigidState::zero()).unwrap();
        assert_ne!(a.states, c.states);
        let quiet = SimConfig {
            noise_sigma: 0.0,
            ..cfg
        };
        let d = simulate(&p, &w, &quiet, &attitude_offset(0.1)).unwrap();
        let e = simulate(&p, &w, &SimConfig { seed: 9, ..quiet }, &attitude_offset(0.1)).unwrap();
        assert_eq!(d, e);
    }

    #[test]
    fn linearized_cost_matches_quadratic_form() {
        let p = VehicleParams::reference().with_heights(1.0, 1.0);
        let w = CostWeights::uniform(5.0);
        let ctrl = LqrController::new(&p, &w).unwrap();
        let x0 = RigidState {
            p_poi: crate::spatial::Vec3::new(0.3, -0.2, 0.1),
            eta: EulerAngles::new(0.05, -0.02, 0.1),
            ..RigidState::zero()
        };
        let cfg = SimConfig {
            model: ModelKind::Linearized,
            integrator: Integrator::Adaptive,
            dt: 0.01,
            horizon: 40.0,
            ..SimConfig::default()
        };
        let t = simulate(&p, &w, &cfg, &x0).unwrap();
        let xb = to_decoupled(&x0.to_vector());
        let expected = (xb.transpose() * ctrl.p_decoupled() * xb)[0];
        assert_relative_eq!(t.final_cost(), expected, max_relative = 1e-3);
    }

    #[test]
    fn singular_attitude_aborts_with_partial_trajectory() {
        // a large pitch kick under weak control tips the vehicle over
        let p = VehicleParams::reference().with_heights(-1.0, -1.0);
        let x0 = RigidState {
            omega: crate::spatial::Vec3::new(0.0, 30.0, 0.0),
            eta: EulerAngles::new(0.0, 1.4, 0.0),
            ..RigidState::zero()
        };
        let t = simulate(&p, &CostWeights::uniform(0.1), &quick(), &x0).unwrap();
        assert_ne!(t.termination, Termination::Completed);
        assert!(!t.is_empty());
    }

    #[test]
    fn csv_layout() {
        let p = VehicleParams::reference();
        let cfg = SimConfig {
            horizon: 0.01,
            ..quick()
        };
        let t = simulate(&p, &CostWeights::uniform(5.0), &cfg, &RigidState::zero()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, &[("seed".into(), "0".into())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# seed: 0");
        assert_eq!(lines[1].split(',').count(), 18);
        assert_eq!(lines.len(), 2 + t.len());
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn estimate_h2_preconditions() {
        let p = VehicleParams::reference();
        let w = CostWeights::uniform(5.0);
        assert!(estimate_h2(&p, &w, &quick(), 1, 4).is_err());
        let noisy = SimConfig {
            noise_sigma: 0.1,
            ..quick()
        };
        assert!(estimate_h2(&p, &w, &noisy, 0, 4).is_err());
        assert!(estimate_h2(&p, &w, &noisy, 1, 1).is_err());
    }

    #[test]
    fn comparison_at_zero_angle_is_zero() {
        let p = VehicleParams::reference();
        let r = compare_models(&p, &CostWeights::uniform(10.0), &quick(), &[0.0]).unwrap();
        assert!(r[0].error.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn zero_initial_condition_gives_zero_gap() {
        let p = VehicleParams::reference();
        let r = cost_comparison(&p, &[CostWeights::uniform(5.0)], &quick(), 0.55, &[RigidState::zero()]).unwrap();
        assert_eq!(r[0].gap(), 0.0);
        assert!(cost_comparison(&p, &[CostWeights::uniform(5.0)], &quick(), 0.0, &[]).is_err());
    }
}
