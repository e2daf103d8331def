use proptest::prelude::*;
use uavpl_cli::config::{Grid, IntegratorName, ModelName};
use uavpl_cli::RunConfig;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6, -1.0..1.0, Just(0.0), Just(1e-300), Just(-123.456e-7)]
}

fn grid() -> impl Strategy<Value = Grid> {
    prop_oneof![
        prop::collection::vec(finite(), 1..6).prop_map(Grid::Values),
        (finite(), finite(), 1e-3..1.0).prop_map(|(start, stop, step)| Grid::Range { start, stop, step }),
    ]
}

prop_compose! {
    fn config()(
        m in (0.1..10.0, 0.0..5.0),
        r_pl in prop::array::uniform3(finite()),
        r_poi in prop::array::uniform3(finite()),
        q in prop::array::uniform4(1e-3..1e3),
        dt in 1e-4..0.1,
        seed in any::<u64>(),
        adaptive in any::<bool>(),
        models in prop::collection::vec(any::<bool>(), 1..3),
        placements in prop::collection::vec(finite(), 0..4),
        p0 in prop::array::uniform3(finite()),
        z_pl in grid(),
        z_poi in grid(),
        alphas in prop::collection::vec(finite(), 1..4),
        dir in "[a-z][a-z0-9_/]{0,12}",
    ) -> RunConfig {
        let mut c = RunConfig::default();
        c.vehicle.m_uav = m.0;
        c.vehicle.m_pl = m.1;
        c.vehicle.r_pl = r_pl;
        c.vehicle.r_poi = r_poi;
        c.weights.q = q;
        c.sim.dt = dt;
        c.sim.seed = seed;
        c.sim.integrator = if adaptive { IntegratorName::Adaptive } else { IntegratorName::Rk4 };
        c.sim.models = models
            .into_iter()
            .map(|b| if b { ModelName::Nonlinear } else { ModelName::Linearized })
            .collect();
        c.sim.placements = placements;
        c.sim.initial.p_poi = p0;
        c.sweep.z_pl = z_pl;
        c.sweep.z_poi = z_poi;
        c.validate.mc_alphas = alphas;
        c.output.dir = dir.into();
        c
    }
}

proptest! {
    #[test]
    fn toml_round_trip(c in config()) {
        let text = c.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash(), c.hash());
    }
}
