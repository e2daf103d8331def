//! TOML run configuration.
//!
//! Units are SI throughout. Every section has defaults matching the reference
//! vehicle, so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use uavpl_core::integrate::AdaptiveOptions;
use uavpl_core::linear::check_assumptions;
use uavpl_core::sim::Integrator;
use uavpl_core::{CostWeights, EulerAngles, Mat3, ModelKind, RigidState, SimConfig, Vec3, VehicleParams};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub vehicle: VehicleSection,
    pub weights: WeightsSection,
    pub sim: SimSection,
    pub sweep: SweepSection,
    pub validate: ValidateSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleSection {
    /// kg
    pub m_uav: f64,
    /// kg
    pub m_pl: f64,
    /// Payload center of mass in the body frame, m.
    pub r_pl: [f64; 3],
    /// Point of interest in the body frame, m.
    pub r_poi: [f64; 3],
    /// Row-major combined inertia, kg m^2.
    pub inertia: [[f64; 3]; 3],
    pub g: f64,
}

impl Default for VehicleSection {
    fn default() -> Self {
        let p = VehicleParams::reference();
        let h = p.h_tot;
        Self {
            m_uav: p.m_uav,
            m_pl: p.m_pl,
            r_pl: p.r_pl.into(),
            r_poi: p.r_poi.into(),
            inertia: [0, 1, 2].map(|i| [h[(i, 0)], h[(i, 1)], h[(i, 2)]]),
            g: p.g,
        }
    }
}

impl VehicleSection {
    pub fn params(&self) -> VehicleParams {
        let h = &self.inertia;
        VehicleParams {
            m_uav: self.m_uav,
            m_pl: self.m_pl,
            r_pl: Vec3::from(self.r_pl),
            r_poi: Vec3::from(self.r_poi),
            h_tot: Mat3::from_fn(|i, j| h[i][j]),
            g: self.g,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsSection {
    /// Output weights on `(x, y, z, psi)`.
    pub q: [f64; 4],
}

impl Default for WeightsSection {
    fn default() -> Self {
        Self { q: [5.0; 4] }
    }
}

impl WeightsSection {
    pub fn weights(&self) -> CostWeights {
        CostWeights { q: self.q }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorName {
    Rk4,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Nonlinear,
    Linearized,
}

impl ModelName {
    pub fn kind(self) -> ModelKind {
        match self {
            ModelName::Nonlinear => ModelKind::Nonlinear,
            ModelName::Linearized => ModelKind::Linearized,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelName::Nonlinear => "nonlinear",
            ModelName::Linearized => "linearized",
        }
    }
}

/// Deviation from hover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct InitialState {
    pub p_poi: [f64; 3],
    pub v_poi: [f64; 3],
    pub omega: [f64; 3],
    /// `(phi, theta, psi)`, rad.
    pub eta: [f64; 3],
}

impl InitialState {
    pub fn state(&self) -> RigidState {
        RigidState {
            v_poi: Vec3::from(self.v_poi),
            omega: Vec3::from(self.omega),
            p_poi: Vec3::from(self.p_poi),
            eta: EulerAngles::new(self.eta[0], self.eta[1], self.eta[2]),
        }
    }

    fn at(p_poi: [f64; 3], eta: [f64; 3], v_poi: [f64; 3]) -> Self {
        Self {
            p_poi,
            v_poi,
            omega: [0.0; 3],
            eta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: f64,
    pub horizon: f64,
    pub integrator: IntegratorName,
    pub rtol: f64,
    pub atol: f64,
    pub noise_sigma: f64,
    /// Raw inputs `(T, tau_phi, tau_theta, tau_psi)` that receive noise.
    pub noise_channels: [bool; 4],
    pub seed: u64,
    pub record_every: usize,
    pub models: Vec<ModelName>,
    /// Signed POI-to-CoG heights with the payload moved to the POI. Empty
    /// runs the vehicle as configured.
    pub placements: Vec<f64>,
    pub initial: InitialState,
}

impl Default for SimSection {
    fn default() -> Self {
        let base = SimConfig::default();
        Self {
            dt: 0.01,
            horizon: 30.0,
            integrator: IntegratorName::Rk4,
            rtol: base.adaptive.rtol,
            atol: base.adaptive.atol,
            noise_sigma: 0.0,
            noise_channels: [true; 4],
            seed: 0,
            record_every: 1,
            models: vec![ModelName::Nonlinear],
            placements: Vec::new(),
            initial: InitialState::default(),
        }
    }
}

impl SimSection {
    pub fn sim_config(&self, model: ModelKind) -> SimConfig {
        SimConfig {
            dt: self.dt,
            horizon: self.horizon,
            integrator: match self.integrator {
                IntegratorName::Rk4 => Integrator::Rk4Fixed,
                IntegratorName::Adaptive => Integrator::Adaptive,
            },
            noise_sigma: self.noise_sigma,
            seed: self.seed,
            model,
            noise_channels: self.noise_channels,
            record_every: self.record_every,
            adaptive: AdaptiveOptions {
                rtol: self.rtol,
                atol: self.atol,
                ..AdaptiveOptions::default()
            },
        }
    }
}

/// Either explicit values or an inclusive `start..=stop` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

const MAX_GRID: usize = 1_000_000;

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Range { start, stop, step } => {
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| start + i as f64 * step).collect()
            }
        }
    }

    fn check(&self, field: &str) -> Result<(), CliError> {
        let bad = |why: String| Err(CliError::Config(format!("{field}: {why}")));
        match *self {
            Grid::Values(ref v) => {
                if v.is_empty() {
                    return bad("grid is empty".into());
                }
                if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                    return bad(format!("non-finite value {x}"));
                }
            }
            Grid::Range { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
                    return bad("start, stop and step must be finite".into());
                }
                if step <= 0.0 {
                    return bad(format!("step must be positive, got {step}"));
                }
                if stop < start {
                    return bad(format!("stop {stop} is below start {start}"));
                }
                if (stop - start) / step >= MAX_GRID as f64 {
                    return bad(format!("more than {MAX_GRID} points"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Lateral channel, 1 (x) or 2 (y).
    pub channel: usize,
    pub z_pl: Grid,
    pub z_poi: Grid,
    /// POI-to-CoG heights for the payload-at-POI curve.
    pub alpha: Grid,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            channel: 1,
            z_pl: Grid::Range {
                start: -2.0,
                stop: 2.0,
                step: 0.1,
            },
            z_poi: Grid::Range {
                start: -2.0,
                stop: 8.0,
                step: 0.1,
            },
            alpha: Grid::Range {
                start: -2.0,
                stop: 2.0,
                step: 0.25,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSection {
    /// Random `(alpha, q_hat)` points for the Riccati and trace checks.
    pub grid_points: usize,
    pub mc_sigma: f64,
    pub mc_dt: f64,
    /// Averaging window after burn-in, s.
    pub mc_horizon: f64,
    pub mc_seeds: usize,
    pub mc_channel: usize,
    pub mc_alphas: Vec<f64>,
    pub mc_nonlinear: bool,
    pub mc_tolerance_linearized: f64,
    pub mc_tolerance_nonlinear: f64,
    pub cost_alpha: f64,
    pub cost_weights: Vec<[f64; 4]>,
    pub cost_dt: f64,
    pub cost_horizon: f64,
    pub cost_initial: Vec<InitialState>,
}

impl Default for ValidateSection {
    fn default() -> Self {
        let z = [0.0; 3];
        Self {
            grid_points: 200,
            mc_sigma: 0.1,
            mc_dt: 1e-3,
            mc_horizon: 60.0,
            mc_seeds: 20,
            mc_channel: 1,
            mc_alphas: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            mc_nonlinear: true,
            mc_tolerance_linearized: 0.05,
            mc_tolerance_nonlinear: 0.10,
            cost_alpha: 0.55,
            cost_weights: vec![[1.0; 4], [5.0; 4], [10.0; 4], [2.0, 8.0, 5.0, 1.0]],
            cost_dt: 0.01,
            cost_horizon: 60.0,
            cost_initial: vec![
                InitialState::at([-0.5, 0.0, 0.5], z, z),
                InitialState::at([1.0, 0.0, 0.0], z, z),
                InitialState::at([0.0, -1.0, 0.0], z, z),
                InitialState::at([0.7, 0.7, -0.3], z, z),
                InitialState::at([-1.0, 1.0, 1.0], z, z),
                InitialState::at(z, [0.1, 0.0, 0.0], z),
                InitialState::at(z, [0.0, -0.2, 0.0], z),
                InitialState::at(z, [0.15, 0.15, 0.3], z),
                InitialState::at(z, z, [0.5, 0.0, 0.0]),
                InitialState::at(z, z, [0.0, -0.5, 0.2]),
                InitialState {
                    p_poi: [0.3, -0.2, 0.1],
                    v_poi: [0.0, 0.3, 0.0],
                    omega: z,
                    eta: [-0.05, 0.1, 0.0],
                },
                InitialState::at([2.0, 0.0, 0.0], z, z),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

fn core_error(section: &str, e: uavpl_core::Error) -> CliError {
    CliError::Config(format!("{section}: {e}"))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{field}: must be positive and finite, got {v}")))
    }
}

fn check_initial(field: &str, x: &InitialState) -> Result<(), CliError> {
    let s = x.state();
    if !s.is_finite() {
        return Err(CliError::Config(format!("{field}: non-finite initial state")));
    }
    s.eta.check_regular().map_err(|e| core_error(field, e))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Field-level checks, run before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let params = self.vehicle.params();
        params.validate().map_err(|e| core_error("vehicle", e))?;
        check_assumptions(&params).map_err(|e| core_error("vehicle", e))?;
        self.weights.weights().validate().map_err(|e| core_error("weights", e))?;

        let sim = &self.sim;
        if sim.models.is_empty() {
            return Err(CliError::Config("sim.models: at least one model is required".into()));
        }
        for model in &sim.models {
            sim.sim_config(model.kind())
                .validate()
                .map_err(|e| core_error("sim", e))?;
        }
        positive("sim.rtol", sim.rtol)?;
        positive("sim.atol", sim.atol)?;
        for (i, a) in sim.placements.iter().enumerate() {
            if !a.is_finite() {
                return Err(CliError::Config(format!("sim.placements[{i}]: non-finite value {a}")));
            }
        }
        check_initial("sim.initial", &sim.initial)?;

        let sweep = &self.sweep;
        if !(sweep.channel == 1 || sweep.channel == 2) {
            return Err(CliError::Config(format!(
                "sweep.channel: must be 1 or 2, got {}",
                sweep.channel
            )));
        }
        sweep.z_pl.check("sweep.z_pl")?;
        sweep.z_poi.check("sweep.z_poi")?;
        sweep.alpha.check("sweep.alpha")?;

        let v = &self.validate;
        if v.grid_points == 0 {
            return Err(CliError::Config("validate.grid_points: must be at least 1".into()));
        }
        if !(v.mc_sigma.is_finite() && v.mc_sigma >= 0.0) {
            return Err(CliError::Config(format!(
                "validate.mc_sigma: must be nonnegative and finite, got {}",
                v.mc_sigma
            )));
        }
        positive("validate.mc_dt", v.mc_dt)?;
        positive("validate.mc_horizon", v.mc_horizon)?;
        if v.mc_seeds < 2 {
            return Err(CliError::Config("validate.mc_seeds: at least 2 runs are needed".into()));
        }
        if !(1..=4).contains(&v.mc_channel) {
            return Err(CliError::Config(format!(
                "validate.mc_channel: must be 1..=4, got {}",
                v.mc_channel
            )));
        }
        if v.mc_alphas.is_empty() || v.mc_alphas.iter().any(|a| !a.is_finite()) {
            return Err(CliError::Config("validate.mc_alphas: need finite values".into()));
        }
        positive("validate.mc_tolerance_linearized", v.mc_tolerance_linearized)?;
        positive("validate.mc_tolerance_nonlinear", v.mc_tolerance_nonlinear)?;
        positive("validate.cost_alpha", v.cost_alpha)?;
        positive("validate.cost_dt", v.cost_dt)?;
        positive("validate.cost_horizon", v.cost_horizon)?;
        if v.cost_weights.is_empty() {
            return Err(CliError::Config("validate.cost_weights: need at least one set".into()));
        }
        for (i, q) in v.cost_weights.iter().enumerate() {
            CostWeights { q: *q }
                .validate()
                .map_err(|e| core_error(&format!("validate.cost_weights[{i}]"), e))?;
        }
        if v.cost_initial.is_empty() {
            return Err(CliError::Config("validate.cost_initial: need at least one state".into()));
        }
        for (i, x) in v.cost_initial.iter().enumerate() {
            check_initial(&format!("validate.cost_initial[{i}]"), x)?;
        }
        Ok(())
    }
}
