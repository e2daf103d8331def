//! H2 performance of the LQR-controlled channels and optimal POI placement.
//!
//! For a lateral channel write `a = sqrt(2 g q^7)`, `b = alpha q^4` and
//! `sigma = sqrt((a - b)^2 + a^2)`. Then
//!
//! ```text
//! trace(B^T P B) = (2a - b + sigma) / (q^(3/2) sqrt(a - b + sigma))
//! ```
//!
//! and the H2 norm is its square root. The double-integrator channels have
//! `trace(B^T P B) = sqrt(2 q)`.

use rayon::prelude::*;
use twofloat::TwoFloat;

use crate::error::Result;
use crate::linear::{check_assumptions, decouple, scaled_weights, CostWeights, LinearSubsystem};
use crate::riccati::{lateral_ab, lateral_rho, radicand, RiccatiBlock};
use crate::vehicle::{derive_geometry, VehicleParams};

/// `trace(B^T P B)` of a lateral channel as a function of `(alpha, q_hat)`,
/// with `weight` in the `q^(3/2)` denominator.
fn lateral_trace(alpha: f64, q_hat: f64, weight: f64, g: f64) -> f64 {
    let (a, b) = lateral_ab(alpha, q_hat, g);
    let r = radicand(a, b);
    // 2a - b + sigma = a + (a - b + sigma)
    (a + r) / (weight * weight.sqrt() * r.sqrt())
}

/// H2 norm of a lateral channel.
pub fn lateral_h2(alpha: f64, q_hat: f64, g: f64) -> f64 {
    lateral_trace(alpha, q_hat, q_hat, g).sqrt()
}

/// H2 norm of a double-integrator channel.
pub fn double_integrator_h2(q_hat: f64) -> f64 {
    (2.0 * q_hat).sqrt().sqrt()
}

/// Closed-form H2 norm of a channel.
pub fn analytical_h2(subsystem: &LinearSubsystem) -> f64 {
    if subsystem.is_lateral() {
        lateral_h2(subsystem.alpha, subsystem.q_hat, subsystem.g)
    } else {
        double_integrator_h2(subsystem.q_hat)
    }
}

/// Diagnostic variant with the unscaled weight in the denominator. Differs
/// from [`analytical_h2`] whenever `q_raw != q_hat`.
pub fn analytical_h2_raw_denominator(subsystem: &LinearSubsystem, q_raw: f64) -> f64 {
    if subsystem.is_lateral() {
        lateral_trace(subsystem.alpha, subsystem.q_hat, q_raw, subsystem.g).sqrt()
    } else {
        double_integrator_h2(subsystem.q_hat)
    }
}

/// `sqrt(trace(B^T P B))` for an arbitrary solution `P`.
pub fn trace_h2(subsystem: &LinearSubsystem, p: &nalgebra::DMatrix<f64>) -> f64 {
    // b^T P b cancels for large |alpha|; accumulate in double-double
    let b = &subsystem.b;
    let n = b.len();
    let mut sum = TwoFloat::from(0.0);
    for i in 0..n {
        for j in 0..n {
            sum += TwoFloat::new_mul(b[i], b[j]) * p[(i, j)];
        }
    }
    f64::from(sum).sqrt()
}

pub fn block_trace_h2(subsystem: &LinearSubsystem, block: &RiccatiBlock) -> f64 {
    trace_h2(subsystem, &block.p)
}

/// Minimizer of the lateral H2 norm over `alpha`.
pub fn optimal_alpha(q_hat: f64, g: f64) -> f64 {
    (2.0 * g / q_hat).sqrt()
}

/// Lateral H2 norm at `alpha = optimal_alpha(q_hat)`, where `a = b = sigma`:
/// `sqrt(2 (2g)^(1/4) q^(1/4))`.
pub fn h2_at_optimum(q_hat: f64, g: f64) -> f64 {
    (2.0 * (2.0 * g).powf(0.25) * q_hat.powf(0.25)).sqrt()
}

/// Golden-section search for the minimizer of a unimodal `f` on `[lo, hi]`.
/// Exact ties keep the interval between the two probes.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else if f1 > f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            lo = x1;
            hi = x2;
            x1 = hi - inv_phi * (hi - lo);
            x2 = lo + inv_phi * (hi - lo);
            f1 = f(x1);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// `trace q^(3/2) / sqrt(a) - 2`, which is `(sqrt(rho) - 1)^2 / sqrt(rho)`
/// with `rho = radicand / a`. Vanishes at the optimum without cancellation.
fn lateral_excess(alpha: f64, q_hat: f64, g: f64) -> f64 {
    let (rho, rho_m1) = lateral_rho(alpha, q_hat, g);
    let sr = rho.sqrt();
    let t = rho_m1 / (sr + 1.0);
    t * t / sr
}

/// Numerical minimizer of the lateral H2 norm over `alpha`. The objective is
/// an increasing affine map of the squared norm, evaluated in a form that
/// keeps full relative precision near the minimum.
pub fn search_optimal_alpha(q_hat: f64, g: f64) -> f64 {
    let guess = optimal_alpha(q_hat, g);
    golden_section_min(|a| lateral_excess(a, q_hat, g), -guess - 1.0, 4.0 * guess + 1.0, 1e-12)
}

/// `H2(-|alpha|) - H2(|alpha|)` for a lateral channel.
pub fn above_below_gap(q_hat: f64, alpha_magnitude: f64, g: f64) -> f64 {
    let a = alpha_magnitude.abs();
    lateral_h2(-a, q_hat, g) - lateral_h2(a, q_hat, g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct H2Report {
    pub alpha: f64,
    /// Closed-form H2 per channel for the given geometry.
    pub channel_h2: [f64; 4],
    /// Same with the unscaled weight in the lateral denominators.
    pub raw_denominator_h2: [f64; 2],
    /// Optimal `alpha` per lateral channel with the payload at the rotor plane.
    pub optimal_alpha: [f64; 2],
    /// Golden-section check of `optimal_alpha`.
    pub searched_alpha: [f64; 2],
    pub optimal_z_pl: f64,
    /// Optimal `z_poi` with the payload at the rotor plane.
    pub optimal_z_poi: [f64; 2],
    /// Optimal `z_poi` with the payload held at its configured height.
    pub pinned_z_poi: [f64; 2],
    /// `H2(-|alpha|) - H2(|alpha|)` for the current `|alpha|`.
    pub above_below_gap: [f64; 2],
}

pub fn optimal_placement(params: &VehicleParams, weights: &CostWeights) -> Result<H2Report> {
    check_assumptions(params)?;
    let subs = decouple(params, weights)?;
    let g = params.g;
    let alpha = derive_geometry(params).alpha;
    let at_rotor_plane = scaled_weights(&params.with_heights(0.0, params.r_poi.z), weights)?;
    let shift = params.m_pl / params.m_tot() * params.r_pl.z;

    let mut report = H2Report {
        alpha,
        channel_h2: [0.0; 4],
        raw_denominator_h2: [0.0; 2],
        optimal_alpha: [0.0; 2],
        searched_alpha: [0.0; 2],
        optimal_z_pl: 0.0,
        optimal_z_poi: [0.0; 2],
        pinned_z_poi: [0.0; 2],
        above_below_gap: [0.0; 2],
    };
    for (k, s) in subs.iter().enumerate() {
        report.channel_h2[k] = analytical_h2(s);
    }
    for k in 0..2 {
        let s = &subs[k];
        report.raw_denominator_h2[k] = analytical_h2_raw_denominator(s, weights.q[k]);
        report.optimal_alpha[k] = optimal_alpha(at_rotor_plane[k], g);
        report.searched_alpha[k] = search_optimal_alpha(at_rotor_plane[k], g);
        report.optimal_z_poi[k] = report.optimal_alpha[k];
        report.pinned_z_poi[k] = optimal_alpha(s.q_hat, g) + shift;
        report.above_below_gap[k] = above_below_gap(s.q_hat, alpha, g);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub z_pl: f64,
    pub z_poi: f64,
    pub alpha: f64,
    pub h2: f64,
}

/// Lateral-channel (`channel` 1 or 2) H2 over a `(z_pl, z_poi)` grid, rows in
/// `z_pl`-major order.
pub fn sweep_surface(
    params: &VehicleParams,
    weights: &CostWeights,
    channel: usize,
    z_pl_grid: &[f64],
    z_poi_grid: &[f64],
) -> Result<Vec<SweepRow>> {
    assert!(channel == 1 || channel == 2, "sweeps cover the lateral channels");
    check_assumptions(params)?;
    weights.validate()?;
    let rows: Result<Vec<Vec<SweepRow>>> = z_pl_grid
        .par_iter()
        .map(|&z_pl| {
            let q_hat = scaled_weights(&params.with_heights(z_pl, 0.0), weights)?[channel - 1];
            Ok(z_poi_grid
                .iter()
                .map(|&z_poi| {
                    let alpha = derive_geometry(&params.with_heights(z_pl, z_poi)).alpha;
                    SweepRow {
                        z_pl,
                        z_poi,
                        alpha,
                        h2: lateral_h2(alpha, q_hat, params.g),
                    }
                })
                .collect())
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

pub fn argmin_row(rows: &[SweepRow]) -> Option<SweepRow> {
    rows.iter().copied().min_by(|a, b| a.h2.total_cmp(&b.h2))
}
