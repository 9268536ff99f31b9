use tfqkd::config::{AxisName, ParamsSection, ProtocolName, RunConfig, SweepSection};

fn full() -> RunConfig {
    let mut c = RunConfig::new(ProtocolName::P2);
    c.seed = 17;
    c.threads = Some(3);
    c.out = Some("rates.csv".into());
    c.system.distance = 412.5;
    c.system.total_pulses = 5e13;
    c.security.eps_sec = 1e-9;
    c.space.mu = [1e-4, 0.5];
    c.optimizer.restarts = 4;
    c.params = Some(ParamsSection { mu: 0.02, p_z: 0.8, nu: 0.1, omega: 0.02, p_nu: 0.3, p_omega: 0.3 });
    c.sweep = Some(SweepSection {
        axis: AxisName::Pulses,
        values: Vec::new(),
        start: Some(1e10),
        stop: Some(1e14),
        points: Some(9),
        log: true,
        misalignment: vec![0.02, 0.15],
    });
    c.validation.sampling_eps = vec![0.3];
    c
}

#[test]
fn round_trip_is_lossless() {
    for c in [RunConfig::new(ProtocolName::P1), full()] {
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c, "{text}");
    }
}

#[test]
fn awkward_floats_survive() {
    let mut c = full();
    c.system.dark_rate = 0.1 + 0.2;
    c.system.fiber_loss = 1.0 / 3.0;
    c.bounds.lambda = f64::MIN_POSITIVE * 3.0;
    let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
    assert_eq!(back.system.dark_rate.to_bits(), c.system.dark_rate.to_bits());
    assert_eq!(back, c);
}

#[test]
fn errors_name_the_field() {
    let e = RunConfig::from_toml("[system]\ndistance = 10.0\n").unwrap_err();
    assert!(e.to_string().contains("protocol"), "{e}");

    let e = RunConfig::from_toml("protocol = \"p3\"").unwrap_err();
    assert!(e.to_string().contains("p3") || e.to_string().contains("variant"), "{e}");

    let c = RunConfig::from_toml("protocol = \"p1\"\n[system]\ndistance = -5.0\n").unwrap();
    let e = c.validate().unwrap_err();
    assert!(e.to_string().contains("system.distance"), "{e}");

    let c = RunConfig::from_toml("protocol = \"p2\"\n[security]\neps_sec = 2.0\n").unwrap();
    let e = c.validate().unwrap_err();
    assert!(e.to_string().contains("security.eps_sec"), "{e}");
}

#[test]
fn sweep_grids() {
    let mut s = full().sweep.unwrap();
    let g = s.grid().unwrap();
    assert_eq!(g.len(), 9);
    assert!((g[0] - 1e10).abs() < 1e-3 && (g[8] / 1e14 - 1.0).abs() < 1e-12);
    assert!((g[4] / 1e12 - 1.0).abs() < 1e-12);

    s.values = vec![100.0];
    assert!(s.grid().is_err());
    s.start = None;
    s.stop = None;
    s.points = None;
    assert_eq!(s.grid().unwrap(), vec![100.0]);
}

#[test]
fn shipped_configs_load() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let c = RunConfig::load(&path).unwrap();
            c.validate().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
