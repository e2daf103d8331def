use std::io::Write;

use rayon::prelude::*;
use uavpl_core::sim::{simulate, Termination};
use uavpl_core::vehicle::derive_geometry;
use uavpl_core::{Trajectory, VehicleParams};

use crate::config::{ModelName, RunConfig};
use crate::error::CliError;
use crate::output::{metadata, write_header, OutDir};

pub struct Run {
    pub model: ModelName,
    pub label: String,
    pub alpha: f64,
    pub result: Result<Trajectory, uavpl_core::Error>,
}

fn placements(config: &RunConfig) -> Vec<(String, VehicleParams)> {
    let base = config.vehicle.params();
    if config.sim.placements.is_empty() {
        return vec![("configured".into(), base)];
    }
    config
        .sim
        .placements
        .iter()
        .map(|&a| (format!("alpha{a:+.3}"), base.with_payload_at_poi(a)))
        .collect()
}

pub fn simulate_all(config: &RunConfig) -> Vec<Run> {
    let weights = config.weights.weights();
    let x0 = config.sim.initial.state();
    let jobs: Vec<(ModelName, String, VehicleParams)> = config
        .sim
        .models
        .iter()
        .flat_map(|&m| placements(config).into_iter().map(move |(l, p)| (m, l, p)))
        .collect();
    jobs.into_par_iter()
        .map(|(model, label, params)| Run {
            model,
            alpha: derive_geometry(&params).alpha,
            result: simulate(&params, &weights, &config.sim.sim_config(model.kind()), &x0),
            label,
        })
        .collect()
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Completed => "completed",
        Termination::SingularAttitude => "singular_attitude",
        Termination::Diverged => "diverged",
    }
}

pub fn run(config: &RunConfig) -> Result<OutDir, CliError> {
    let runs = simulate_all(config);
    let meta = metadata(config, "simulate");
    let mut out = OutDir::create(config)?;
    let mut failures = Vec::new();
    let mut rows = Vec::new();

    for r in &runs {
        let name = format!("traj_{}_{}.csv", r.model.label(), r.label);
        match &r.result {
            Ok(t) => {
                out.write(&name, |w| t.write_csv(w, &meta))?;
                let last = t.states.last().expect("trajectory has the initial sample");
                let min_x = t.states.iter().map(|s| s.p_poi.x).fold(f64::INFINITY, f64::min);
                rows.push(format!(
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.model.label(),
                    r.label,
                    r.alpha,
                    termination_name(t.termination),
                    t.times.last().copied().unwrap_or(0.0),
                    last.p_poi.norm(),
                    last.to_vector().norm(),
                    min_x,
                    t.final_cost(),
                    t.final_raw_cost(),
                    t.final_physical_cost()
                ));
                if t.termination != Termination::Completed {
                    failures.push(format!("{name}: {}", termination_name(t.termination)));
                }
            }
            Err(e) => {
                rows.push(format!("{},{},{},error,,,,,,,", r.model.label(), r.label, r.alpha));
                failures.push(format!("{} {}: {e}", r.model.label(), r.label));
            }
        }
    }

    let header = "model,placement,alpha,termination,t_end,final_poi_error,final_state_norm,min_x,j_scaled,j,j_physical";
    out.write("simulate_summary.csv", |w| {
        write_header(w, &meta)?;
        writeln!(w, "{header}")?;
        for row in &rows {
            writeln!(w, "{row}")?;
        }
        Ok(())
    })?;
    println!("{header}");
    for row in &rows {
        println!("{row}");
    }

    if failures.is_empty() {
        Ok(out)
    } else {
        Err(CliError::Run(format!(
            "{} of {} runs aborted, partial output kept in {}: {}",
            failures.len(),
            runs.len(),
            out.path().display(),
            failures.join("; ")
        )))
    }
}
