use nonlocal_burgers::diagnostics::compute_series;
use nonlocal_burgers::evolution::{simulate, GridConfig, InitialData, SimulationConfig};

fn series_bytes(cfg: &SimulationConfig) -> Vec<u8> {
    let run = simulate(cfg).unwrap();
    let mut out = Vec::new();
    compute_series(&run).unwrap().write_csv(&mut out).unwrap();
    out
}

#[test]
fn same_config_and_seed_give_identical_series() {
    let mut cfg = SimulationConfig::reference();
    cfg.grid = GridConfig { n: 512, half_length: None };
    cfg.t_final = 20.0;
    cfg.initial = InitialData::RandomBumps {
        count: 5,
        mass: 0.3,
        spread: 8.0,
        width: 1.0,
        seed: None,
    };
    let a = series_bytes(&cfg);
    assert_eq!(a, series_bytes(&cfg));
    cfg.seed += 1;
    assert_ne!(a, series_bytes(&cfg));
}
