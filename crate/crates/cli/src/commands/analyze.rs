use std::fmt::Write as _;
use std::io::Write;

use uavpl_core::h2::optimal_placement;
use uavpl_core::linear::{decouple, scaled_weights, transfer_zeros, TransferZeros};
use uavpl_core::vehicle::derive_geometry;
use uavpl_core::zero_dynamics::stability_verdict;
use uavpl_core::{Classification, H2Report, StabilityVerdict};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{metadata, write_header, OutDir};

pub struct Analysis {
    pub alpha: f64,
    pub verdict: StabilityVerdict,
    pub q_hat: [f64; 4],
    pub zeros: [TransferZeros; 4],
    pub h2: H2Report,
}

pub fn classification_name(c: Classification) -> &'static str {
    match c {
        Classification::UnstableZeroDynamics => "unstable",
        Classification::MarginallyStableLinearizedZeroDynamics => "marginal",
        Classification::DegenerateAlphaZero => "degenerate",
    }
}

fn zeros_text(z: &TransferZeros) -> String {
    match *z {
        TransferZeros::NoFiniteZeros => "none".into(),
        TransferZeros::Pair {
            zeros,
            non_minimum_phase,
        } => {
            let kind = if non_minimum_phase {
                "real pair, non-minimum phase"
            } else {
                "imaginary pair"
            };
            format!(
                "{kind} ({:.6}{:+.6}i, {:.6}{:+.6}i)",
                zeros[0].re, zeros[0].im, zeros[1].re, zeros[1].im
            )
        }
    }
}

pub fn analyze(config: &RunConfig) -> Result<Analysis, CliError> {
    let params = config.vehicle.params();
    let weights = config.weights.weights();
    let subs = decouple(&params, &weights)?;
    Ok(Analysis {
        alpha: derive_geometry(&params).alpha,
        verdict: stability_verdict(&params),
        q_hat: scaled_weights(&params, &weights)?,
        zeros: [0, 1, 2, 3].map(|k| transfer_zeros(&subs[k])),
        h2: optimal_placement(&params, &weights)?,
    })
}

pub fn render(a: &Analysis) -> String {
    let mut s = String::new();
    let h = &a.h2;
    let _ = writeln!(s, "alpha (POI above CoG): {:.6} m", a.alpha);
    let _ = writeln!(s, "zero dynamics: {}", classification_name(a.verdict.classification));
    if !a.verdict.eigenvalues.is_empty() {
        let ev: Vec<String> = a
            .verdict
            .eigenvalues
            .iter()
            .map(|e| format!("{:.6}{:+.6}i", e.re, e.im))
            .collect();
        let _ = writeln!(s, "  jacobian eigenvalues: {}", ev.join(", "));
    }
    let _ = writeln!(s, "channels:");
    for k in 0..4 {
        let _ = writeln!(
            s,
            "  {}: q_hat {:.6e}, H2 {:.9e}, zeros: {}",
            k + 1,
            a.q_hat[k],
            h.channel_h2[k],
            zeros_text(&a.zeros[k])
        );
    }
    let _ = writeln!(s, "optimal placement (payload at rotor plane, z_pl = {}):", h.optimal_z_pl);
    for k in 0..2 {
        let _ = writeln!(
            s,
            "  channel {}: alpha* {:.9} (search {:.9}), z_poi* {:.6}, z_poi* with payload fixed {:.6}",
            k + 1,
            h.optimal_alpha[k],
            h.searched_alpha[k],
            h.optimal_z_poi[k],
            h.pinned_z_poi[k]
        );
    }
    let _ = writeln!(
        s,
        "H2(-|alpha|) - H2(|alpha|): {:.6e}, {:.6e}",
        h.above_below_gap[0], h.above_below_gap[1]
    );
    let _ = writeln!(
        s,
        "lateral H2 with unscaled weight in the denominator (diagnostic): {:.9e}, {:.9e}",
        h.raw_denominator_h2[0], h.raw_denominator_h2[1]
    );
    s
}

pub fn run(config: &RunConfig) -> Result<OutDir, CliError> {
    let a = analyze(config)?;
    let meta = metadata(config, "analyze");
    let text = render(&a);
    print!("{text}");

    let mut out = OutDir::create(config)?;
    out.write("analysis.txt", |w| {
        write_header(w, &meta)?;
        w.write_all(text.as_bytes())
    })?;
    let h = &a.h2;
    out.write("analysis.csv", |w| {
        write_header(w, &meta)?;
        writeln!(w, "channel,alpha,classification,q_hat,h2,optimal_alpha,optimal_z_poi,pinned_z_poi,above_below_gap,zeros")?;
        for k in 0..4 {
            let lateral = |v: &[f64; 2]| if k < 2 { v[k].to_string() } else { String::new() };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},\"{}\"",
                k + 1,
                a.alpha,
                classification_name(a.verdict.classification),
                a.q_hat[k],
                h.channel_h2[k],
                lateral(&h.optimal_alpha),
                lateral(&h.optimal_z_poi),
                lateral(&h.pinned_z_poi),
                lateral(&h.above_below_gap),
                zeros_text(&a.zeros[k])
            )?;
        }
        Ok(())
    })?;
    Ok(out)
}
