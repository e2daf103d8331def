use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nalgebra::DMatrix;
use uavpl_core::care::solve_care;
use uavpl_core::h2::{analytical_h2, optimal_placement, search_optimal_alpha, sweep_surface, trace_h2};
use uavpl_core::linear::decouple;
use uavpl_core::riccati::{closed_form_riccati, relative_are_residual};
use uavpl_core::sim::{attitude_offset, simulate};
use uavpl_core::vehicle::nonlinear_derivative;
use uavpl_core::{ControlInput, CostWeights, LinearSubsystem, ModelKind, SimConfig, VehicleParams};

fn lateral() -> LinearSubsystem {
    LinearSubsystem::lateral(1, 0.55, 1.25, 9.81)
}

fn riccati(c: &mut Criterion) {
    let s = lateral();
    let mut g = c.benchmark_group("riccati");
    g.bench_function("closed_form", |b| b.iter(|| closed_form_riccati(black_box(&s))));
    let (bm, q, r) = (
        DMatrix::from_column_slice(4, 1, s.b.as_slice()),
        DMatrix::identity(4, 4) * s.q_hat,
        DMatrix::identity(1, 1),
    );
    g.bench_function("numeric_care", |b| b.iter(|| solve_care(black_box(&s.a), &bm, &q, &r).unwrap()));
    let p = closed_form_riccati(&s).p;
    g.bench_function("residual", |b| b.iter(|| relative_are_residual(black_box(&s), &p)));
    g.finish();
}

fn h2(c: &mut Criterion) {
    let s = lateral();
    let p = closed_form_riccati(&s).p;
    let params = VehicleParams::reference();
    let weights = CostWeights::uniform(5.0);
    let mut g = c.benchmark_group("h2");
    g.bench_function("analytical", |b| b.iter(|| analytical_h2(black_box(&s))));
    g.bench_function("trace", |b| b.iter(|| trace_h2(black_box(&s), &p)));
    g.bench_function("golden_search", |b| b.iter(|| search_optimal_alpha(black_box(1.25), 9.81)));
    g.bench_function("optimal_placement", |b| b.iter(|| optimal_placement(black_box(&params), &weights).unwrap()));
    g.bench_function("decouple", |b| b.iter(|| decouple(black_box(&params), &weights).unwrap()));
    let grid = |lo: f64, hi: f64| (0..=40).map(|i| lo + (hi - lo) * i as f64 / 40.0).collect::<Vec<_>>();
    let (z_pl, z_poi) = (grid(-2.0, 2.0), grid(-2.0, 8.0));
    g.bench_function("sweep_41x41", |b| {
        b.iter(|| sweep_surface(black_box(&params), &weights, 1, &z_pl, &z_poi).unwrap())
    });
    g.finish();
}

fn dynamics(c: &mut Criterion) {
    let params = VehicleParams::reference();
    let weights = CostWeights::uniform(5.0);
    let x = attitude_offset(0.2);
    let u = ControlInput {
        thrust: params.m_tot() * params.g,
        tau_phi: 0.1,
        tau_theta: -0.1,
        tau_psi: 0.0,
    };
    let mut g = c.benchmark_group("dynamics");
    g.bench_function("nonlinear_derivative", |b| {
        b.iter(|| nonlinear_derivative(black_box(&params), &x, &u).unwrap())
    });
    for (name, model) in [("simulate_10s_nonlinear", ModelKind::Nonlinear), ("simulate_10s_linearized", ModelKind::Linearized)] {
        let cfg = SimConfig {
            dt: 0.01,
            horizon: 10.0,
            model,
            ..SimConfig::default()
        };
        g.bench_function(name, |b| {
            b.iter_batched(|| x, |x0| simulate(&params, &weights, &cfg, &x0).unwrap(), BatchSize::SmallInput)
        });
    }
    g.finish();
}

criterion_group!(benches, riccati, h2, dynamics);
criterion_main!(benches);
