//! Modelling, zero-dynamics analysis and optimal point-of-interest placement
//! for a multirotor carrying a rigidly attached payload.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod care;
pub mod error;
pub mod h2;
pub mod integrate;
pub mod linear;
pub mod riccati;
pub mod sim;
pub mod spatial;
pub mod vehicle;
pub mod zero_dynamics;

pub use error::{Error, Result};
pub use h2::H2Report;
pub use linear::{CostWeights, InputScaling, LinearModel, LinearSubsystem};
pub use riccati::{LqrController, RiccatiBlock};
pub use sim::{H2Estimate, ModelKind, SimConfig, Trajectory};
pub use spatial::{EulerAngles, Mat3, Vec3};
pub use vehicle::{ControlInput, DerivedGeometry, RigidState, StateVector, VehicleParams};
pub use zero_dynamics::{Classification, StabilityVerdict, ZeroDynState};
