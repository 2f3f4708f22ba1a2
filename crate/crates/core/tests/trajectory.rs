use mindlattice::amplitudes::{collapse_full, AmplitudeVector, QuantumDynamics};
use mindlattice::config_state::{evolve_classical, successor_table, DynamicalState, FieldConfiguration, LatticeConfig};
use mindlattice::ensemble::{point_ensemble, push_forward};
use mindlattice::seeding::rng_from_seed;
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    n_sites: usize,
    n_fields: usize,
    half_range: u64,
    neighbor_radius: usize,
    states: Vec<FixtureState>,
}

#[derive(Deserialize)]
struct FixtureState {
    current: Vec<i64>,
    previous: Vec<i64>,
    index: usize,
}

fn fixture() -> (LatticeConfig, Fixture) {
    let f: Fixture = serde_json::from_str(include_str!("fixtures/ring3_excitation.json")).unwrap();
    let cfg = LatticeConfig::new(f.n_sites, f.n_fields, f.half_range, f.states.len() - 1, f.neighbor_radius, 0.0)
        .unwrap();
    (cfg, f)
}

#[test]
fn classical_matches_reference() {
    let (cfg, f) = fixture();
    let start = DynamicalState::excitation(&cfg, 0, 0, 1).unwrap();
    let traj = evolve_classical(&start, f.states.len() - 1);
    assert_eq!(traj.len(), f.states.len());
    for (s, want) in traj.iter().zip(&f.states) {
        assert_eq!(s.current.values(), want.current.as_slice());
        assert_eq!(s.previous.values(), want.previous.as_slice());
        assert_eq!(s.encode(), want.index);
    }
}

#[test]
fn reference_runs_backwards() {
    let (cfg, f) = fixture();
    let last = f.states.last().unwrap();
    let mut s = DynamicalState::new(
        FieldConfiguration::new(&cfg, last.current.clone()).unwrap(),
        FieldConfiguration::new(&cfg, last.previous.clone()).unwrap(),
    )
    .unwrap();
    for want in f.states.iter().rev().skip(1) {
        s = s.step_backward();
        assert_eq!(s.encode(), want.index);
    }
}

#[test]
fn statistical_and_quantum_follow_the_reference() {
    let (cfg, f) = fixture();
    let map = successor_table(&cfg).unwrap();
    let size = cfg.dense_space_size().unwrap();
    let mut e = point_ensemble(f.states[0].index, size).unwrap();
    let dynamics = QuantumDynamics::new(&cfg).unwrap();
    let mut a = AmplitudeVector::delta(f.states[0].index, size).unwrap();
    let mut rng = rng_from_seed(3);
    for want in &f.states[1..] {
        e = push_forward(&e, &map).unwrap();
        assert_eq!(e.support(), vec![want.index]);
        a = dynamics.step(&a).unwrap();
        assert_eq!(collapse_full(&a, &mut rng).0, want.index);
    }
}
