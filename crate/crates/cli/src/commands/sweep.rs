use std::io::Write;

use rayon::prelude::*;
use uavpl_core::h2::{above_below_gap, analytical_h2, argmin_row, optimal_placement, sweep_surface, SweepRow};
use uavpl_core::linear::decouple;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{metadata, write_header, OutDir};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaRow {
    pub alpha: f64,
    /// Height of the payload and POI above the rotor plane.
    pub z: f64,
    pub q_hat: f64,
    pub h2: f64,
    /// `H2(-|alpha|) - H2(|alpha|)` at this `q_hat`.
    pub gap: f64,
}

pub struct Sweep {
    pub surface: Vec<SweepRow>,
    pub argmin: SweepRow,
    pub optimal_z_pl: f64,
    pub optimal_z_poi: f64,
    pub alpha_curve: Vec<AlphaRow>,
}

pub fn sweep(config: &RunConfig) -> Result<Sweep, CliError> {
    let params = config.vehicle.params();
    let weights = config.weights.weights();
    let ch = config.sweep.channel;
    let surface = sweep_surface(
        &params,
        &weights,
        ch,
        &config.sweep.z_pl.values(),
        &config.sweep.z_poi.values(),
    )?;
    let argmin = argmin_row(&surface).expect("grids are nonempty");
    let best = optimal_placement(&params, &weights)?;
    let alpha_curve = config
        .sweep
        .alpha
        .values()
        .par_iter()
        .map(|&alpha| {
            let p = params.with_payload_at_poi(alpha);
            let sub = decouple(&p, &weights)?[ch - 1].clone();
            Ok(AlphaRow {
                alpha,
                z: p.r_poi.z,
                q_hat: sub.q_hat,
                h2: analytical_h2(&sub),
                gap: above_below_gap(sub.q_hat, alpha, params.g),
            })
        })
        .collect::<Result<Vec<_>, uavpl_core::Error>>()?;
    Ok(Sweep {
        surface,
        argmin,
        optimal_z_pl: best.optimal_z_pl,
        optimal_z_poi: best.optimal_z_poi[ch - 1],
        alpha_curve,
    })
}

pub fn run(config: &RunConfig) -> Result<OutDir, CliError> {
    let s = sweep(config)?;
    let meta = metadata(config, "sweep");
    let mut out = OutDir::create(config)?;
    out.write("sweep_surface.csv", |w| {
        write_header(w, &meta)?;
        writeln!(w, "z_pl,z_poi,alpha,h2")?;
        for r in &s.surface {
            writeln!(w, "{},{},{},{}", r.z_pl, r.z_poi, r.alpha, r.h2)?;
        }
        Ok(())
    })?;
    out.write("sweep_alpha.csv", |w| {
        write_header(w, &meta)?;
        writeln!(w, "alpha,z,q_hat,h2,above_below_gap")?;
        for r in &s.alpha_curve {
            writeln!(w, "{},{},{},{},{}", r.alpha, r.z, r.q_hat, r.h2, r.gap)?;
        }
        Ok(())
    })?;
    let m = &s.argmin;
    let summary = [
        ("channel", config.sweep.channel.to_string()),
        ("rows", s.surface.len().to_string()),
        ("argmin_z_pl", m.z_pl.to_string()),
        ("argmin_z_poi", m.z_poi.to_string()),
        ("argmin_alpha", m.alpha.to_string()),
        ("argmin_h2", m.h2.to_string()),
        ("optimal_z_pl", s.optimal_z_pl.to_string()),
        ("optimal_z_poi", s.optimal_z_poi.to_string()),
    ];
    out.write("sweep_summary.csv", |w| {
        write_header(w, &meta)?;
        writeln!(w, "key,value")?;
        for (k, v) in &summary {
            writeln!(w, "{k},{v}")?;
        }
        Ok(())
    })?;
    println!(
        "{} rows; grid minimum H2 {:.6e} at z_pl = {}, z_poi = {}; optimum z_pl = {}, z_poi = {:.6}",
        s.surface.len(),
        m.h2,
        m.z_pl,
        m.z_poi,
        s.optimal_z_pl,
        s.optimal_z_poi
    );
    Ok(out)
}
