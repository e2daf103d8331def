use std::io::Write;

use uavpl_core::h2::{analytical_h2, trace_h2};
use uavpl_core::linear::{build_simplified, decouple, linearize_numeric};
use uavpl_core::riccati::{closed_form_riccati, relative_are_residual};
use uavpl_core::sim::{cost_comparison, estimate_h2, Integrator};
use uavpl_core::{CostWeights, InputScaling, LinearSubsystem, ModelKind, SimConfig};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{metadata, write_header, OutDir};

#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    /// Negative control: perturbs `P[0][0]` before the residual check.
    pub corrupt_p: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: String,
    pub pass: bool,
    pub detail: String,
}

/// Kronecker sequence over `alpha in [-5, 5]`, `q_hat in [1e-2, 1e4]`,
/// alternating lateral channels.
pub fn oracle_grid(n: usize, g: f64) -> Vec<LinearSubsystem> {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let s2 = 2f64.sqrt() - 1.0;
    (1..=n)
        .map(|i| {
            let alpha = -5.0 + 10.0 * (i as f64 * phi).fract();
            let q = 10f64.powf(-2.0 + 6.0 * (i as f64 * s2).fract());
            LinearSubsystem::lateral(1 + i % 2, alpha, q, g)
        })
        .collect()
}

fn subsystems(config: &RunConfig) -> Result<Vec<LinearSubsystem>, CliError> {
    let params = config.vehicle.params();
    let mut subs = decouple(&params, &config.weights.weights())?.to_vec();
    subs.extend(oracle_grid(config.validate.grid_points, params.g));
    Ok(subs)
}

fn are_check(subs: &[LinearSubsystem], opts: Options) -> Check {
    let mut worst: f64 = 0.0;
    for s in subs {
        let mut p = closed_form_riccati(s).p;
        if opts.corrupt_p {
            p[(0, 0)] *= 1.0 + 1e-6;
        }
        worst = worst.max(relative_are_residual(s, &p));
    }
    Check {
        name: "are_residual",
        measured: worst,
        tolerance: "1e-9".into(),
        pass: worst < 1e-9,
        detail: format!(
            "max |A'P + PA - PBB'P + Q|_F / |Q|_F over {} blocks{}",
            subs.len(),
            if opts.corrupt_p { " (P corrupted)" } else { "" }
        ),
    }
}

fn trace_check(subs: &[LinearSubsystem]) -> Check {
    let mut worst: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for s in subs {
        let p = closed_form_riccati(s).p;
        let t = trace_h2(s, &p);
        let h2 = analytical_h2(s);
        let err = (h2 - t).abs() / h2;
        // b'Pb cancels for large |alpha|; rounding P alone costs ~eps * kappa
        let kappa = if s.is_lateral() {
            let a = s.b[1];
            let terms = [a * a * p[(1, 1)], 2.0 * a * p[(1, 3)], p[(3, 3)]];
            terms.iter().map(|v| v.abs()).sum::<f64>() / (t * t)
        } else {
            1.0
        };
        worst = worst.max(err);
        worst_ratio = worst_ratio.max(err / (1e-10 + 64.0 * f64::EPSILON * kappa));
    }
    Check {
        name: "trace_h2",
        measured: worst,
        tolerance: "1e-10 + 64 eps kappa".into(),
        pass: worst_ratio <= 1.0,
        detail: format!(
            "max |H2 - sqrt(b'Pb)| / H2 over {} blocks; worst error / bound {worst_ratio:.2e}",
            subs.len()
        ),
    }
}

fn linearization_check(config: &RunConfig) -> Result<Check, CliError> {
    let params = config.vehicle.params();
    let lin = linearize_numeric(&params)?;
    let simple = build_simplified(&params, &InputScaling::new(&params)?)?;
    let err = (lin.a - simple.a).abs().max().max((lin.b - simple.b).abs().max());
    Ok(Check {
        name: "linearization",
        measured: err,
        tolerance: "1e-6".into(),
        pass: err < 1e-6,
        detail: "max elementwise |numeric - closed form| over A and B".into(),
    })
}

fn monte_carlo_check(config: &RunConfig, model: ModelKind) -> Result<Check, CliError> {
    let v = &config.validate;
    let base = config.vehicle.params();
    let weights = config.weights.weights();
    let sim = SimConfig {
        dt: v.mc_dt,
        horizon: v.mc_horizon,
        noise_sigma: v.mc_sigma,
        seed: config.sim.seed,
        model,
        ..SimConfig::default()
    };
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for &alpha in &v.mc_alphas {
        let est = estimate_h2(&base.with_payload_at_poi(alpha), &weights, &sim, v.mc_channel, v.mc_seeds)?;
        worst = worst.max(est.relative_error());
        parts.push(format!("{alpha:+}:{:.4}/{:.4}", est.value, est.analytical));
    }
    let (name, tol) = match model {
        ModelKind::Linearized => ("mc_h2_linearized", v.mc_tolerance_linearized),
        ModelKind::Nonlinear => ("mc_h2_nonlinear", v.mc_tolerance_nonlinear),
    };
    Ok(Check {
        name,
        measured: worst,
        tolerance: tol.to_string(),
        pass: worst < tol,
        detail: format!(
            "max relative error, channel {}, {} seeds; alpha:estimate/analytical {}",
            v.mc_channel,
            v.mc_seeds,
            parts.join(" ")
        ),
    })
}

fn cost_check(config: &RunConfig) -> Result<Check, CliError> {
    let v = &config.validate;
    let sets: Vec<CostWeights> = v.cost_weights.iter().map(|q| CostWeights { q: *q }).collect();
    let initial: Vec<_> = v.cost_initial.iter().map(|x| x.state()).collect();
    let sim = SimConfig {
        dt: v.cost_dt,
        horizon: v.cost_horizon,
        integrator: Integrator::Adaptive,
        ..SimConfig::default()
    };
    let gaps = cost_comparison(&config.vehicle.params(), &sets, &sim, v.cost_alpha, &initial)?;
    let min = gaps.iter().map(|g| g.gap()).fold(f64::INFINITY, f64::min);
    Ok(Check {
        name: "cost_gap",
        measured: min,
        tolerance: "> 0".into(),
        pass: min > 0.0,
        detail: format!(
            "min J_below - J_above over {} runs, |alpha| = {}",
            gaps.len(),
            v.cost_alpha
        ),
    })
}

pub fn checks(config: &RunConfig, opts: Options) -> Result<Vec<Check>, CliError> {
    if config.validate.mc_sigma == 0.0 {
        return Err(CliError::Config(
            "validate.mc_sigma = 0: the Monte Carlo H2 check needs input noise, set it above zero".into(),
        ));
    }
    let subs = subsystems(config)?;
    let mut out = vec![
        are_check(&subs, opts),
        trace_check(&subs),
        linearization_check(config)?,
        monte_carlo_check(config, ModelKind::Linearized)?,
    ];
    if config.validate.mc_nonlinear {
        out.push(monte_carlo_check(config, ModelKind::Nonlinear)?);
    }
    out.push(cost_check(config)?);
    Ok(out)
}

pub fn run(config: &RunConfig, opts: Options) -> Result<OutDir, CliError> {
    let results = checks(config, opts)?;
    let mut meta = metadata(config, "validate");
    if opts.corrupt_p {
        meta.push(("test_mode".into(), "corrupt_p".into()));
    }
    let mut out = OutDir::create(config)?;
    out.write("validate.csv", |w| {
        write_header(w, &meta)?;
        writeln!(w, "check,measured,tolerance,pass,detail")?;
        for c in &results {
            writeln!(w, "{},{:e},{},{},\"{}\"", c.name, c.measured, c.tolerance, c.pass, c.detail)?;
        }
        Ok(())
    })?;
    for c in &results {
        println!(
            "{} {:<18} {:>12.3e}  (tol {})  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance,
            c.detail
        );
    }
    let failed: Vec<&str> = results.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(out)
    } else {
        Err(CliError::Check(failed.join(", ")))
    }
}
