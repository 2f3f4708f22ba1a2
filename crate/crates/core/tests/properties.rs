use mindlattice::amplitudes::{
    collapse_full, collapse_partition, lift, probabilities, AmplitudeVector, BranchSet, Partition, QuantumDynamics,
};
use mindlattice::config_state::{successor_table, DynamicalState, FieldConfiguration, LatticeConfig};
use mindlattice::ensemble::{check_bijection, push_forward, quantize, Ensemble};
use mindlattice::schema::{recall, Pattern, SchemaMemory};
use mindlattice::seeding::rng_from_seed;
use num_complex::Complex64;
use proptest::prelude::*;

/// Lattices whose dynamical space stays small enough to tabulate.
fn small_lattice() -> impl Strategy<Value = LatticeConfig> {
    (1usize..=4, 1usize..=2, 0u64..=2, 1usize..=2, 0.0f64..2.0).prop_filter_map(
        "dense space too large",
        |(n, m, l, r, eps)| {
            let cfg = LatticeConfig::new(n, m, l, 1, r, eps).ok()?;
            (cfg.dynamical_state_count() <= 20_000).then_some(cfg)
        },
    )
}

fn state_in(cfg: LatticeConfig) -> impl Strategy<Value = (LatticeConfig, DynamicalState)> {
    let l = cfg.half_range() as i64;
    let slots = cfg.slots();
    (prop::collection::vec(-l..=l, slots), prop::collection::vec(-l..=l, slots)).prop_map(move |(c, p)| {
        let s = DynamicalState::new(
            FieldConfiguration::new(&cfg, c).unwrap(),
            FieldConfiguration::new(&cfg, p).unwrap(),
        )
        .unwrap();
        (cfg.clone(), s)
    })
}

fn weights(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..=max_len).prop_filter("all zero", |w| w.iter().any(|x| *x > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encode_decode_roundtrip((cfg, s) in small_lattice().prop_flat_map(state_in)) {
        let m = s.encode();
        prop_assert!(m < cfg.dynamical_state_count());
        prop_assert_eq!(DynamicalState::decode(m, &cfg).unwrap(), s.clone());
        let c = s.current.encode();
        prop_assert_eq!(FieldConfiguration::decode(c, &cfg).unwrap(), s.current);
    }

    #[test]
    fn step_is_reversible((_cfg, s) in small_lattice().prop_flat_map(state_in)) {
        prop_assert_eq!(s.step_classical().step_backward(), s.clone());
        prop_assert_eq!(s.step_backward().step_classical(), s);
    }

    #[test]
    fn update_is_local(
        (cfg, s) in small_lattice().prop_flat_map(state_in),
        site_pick in any::<prop::sample::Index>(),
        field_pick in any::<prop::sample::Index>(),
        shift in 1i64..5,
    ) {
        let site = site_pick.index(cfg.n_sites());
        let field = field_pick.index(cfg.n_fields());
        let bumped = cfg.reduce((s.current.get(site, field) + shift) as i128);
        prop_assume!(bumped != s.current.get(site, field));
        let changed = DynamicalState::new(
            s.current.clone().with_value(site, field, bumped).unwrap(),
            s.previous.clone(),
        ).unwrap();
        let (a, b) = (s.step_classical(), changed.step_classical());
        let near = cfg.neighbors(site);
        for i in 0..cfg.n_sites() {
            for j in 0..cfg.n_fields() {
                if j != field || !near.contains(&i) {
                    prop_assert_eq!(a.current.get(i, j), b.current.get(i, j));
                }
            }
        }
    }

    #[test]
    fn successor_table_is_a_bijection(cfg in small_lattice()) {
        let map = successor_table(&cfg).unwrap();
        prop_assert!(check_bijection(&map).is_ok());
    }

    #[test]
    fn lift_then_probabilities_is_identity(w in weights(64), phases in prop::collection::vec(-10.0f64..10.0, 64)) {
        let e = Ensemble::from_weights(&w).unwrap();
        let a = lift(&e, &phases[..w.len()]).unwrap();
        let back = probabilities(&a);
        for (p, q) in e.probabilities().iter().zip(back.probabilities()) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn push_forward_keeps_mass(cfg in small_lattice(), seed in any::<u64>()) {
        use rand::Rng;
        let map = successor_table(&cfg).unwrap();
        let mut rng = rng_from_seed(seed);
        let w: Vec<f64> = (0..map.len()).map(|_| rng.random::<f64>()).collect();
        let e = Ensemble::from_weights(&w).unwrap();
        let pushed = push_forward(&e, &map).unwrap();
        prop_assert!((pushed.total() - 1.0).abs() <= 1e-12);
        let mut a = e.probabilities().to_vec();
        let mut b = pushed.probabilities().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn quantize_is_idempotent_and_normalized(w in weights(20), k in 2usize..40) {
        let e = Ensemble::from_weights(&w).unwrap();
        let q = quantize(&e, k).unwrap();
        prop_assert!((q.total() - 1.0).abs() <= 1e-12);
        for p in q.probabilities() {
            let units = p * (k - 1) as f64;
            prop_assert!((units - units.round()).abs() < 1e-9);
        }
        prop_assert_eq!(quantize(&q, k).unwrap(), q);
    }

    #[test]
    fn unitary_step_keeps_norm(cfg in small_lattice(), w in weights(8), phases in prop::collection::vec(0.0f64..6.3, 8)) {
        let size = cfg.dense_space_size().unwrap();
        let mut moduli = vec![0.0; size];
        let mut ph = vec![0.0; size];
        let total: f64 = w.iter().sum();
        for (i, x) in w.iter().enumerate() {
            moduli[(i * 7919) % size] += x / total;
            ph[(i * 7919) % size] = phases[i];
        }
        let moduli: Vec<f64> = moduli.iter().map(|p| p.sqrt()).collect();
        let a = AmplitudeVector::new(moduli, ph).unwrap();
        let d = QuantumDynamics::new(&cfg).unwrap();
        let next = d.step(&a).unwrap();
        prop_assert!((next.norm_squared() - 1.0).abs() <= 1e-12);
        prop_assert!(next.phases().iter().all(|t| (0.0..std::f64::consts::TAU).contains(t)));
    }

    #[test]
    fn discrete_partition_collapse_is_full_collapse(w in weights(30), seed in any::<u64>()) {
        let e = Ensemble::from_weights(&w).unwrap();
        let a = lift(&e, &vec![0.0; w.len()]).unwrap();
        let (m, post) = collapse_full(&a, &mut rng_from_seed(seed));
        let (label, post2) = collapse_partition(&a, &Partition::discrete(w.len()), &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(m, label);
        prop_assert_eq!(post, post2);
    }

    #[test]
    fn split_keeps_norm(bias in 0.01f64..0.99, rounds in 1usize..6) {
        let f = [("0", Complex64::new(bias.sqrt(), 0.0)), ("1", Complex64::new(0.0, (1.0 - bias).sqrt()))];
        let mut b = BranchSet::delta("");
        for _ in 0..rounds {
            b = b.split(&f).unwrap();
            prop_assert!((b.norm_squared() - 1.0).abs() <= 1e-10);
        }
        prop_assert_eq!(b.len(), 1 << rounds);
    }

    #[test]
    fn facilitation_keeps_symmetry_and_recall_descends(
        seeds in prop::collection::vec(any::<u64>(), 1..4),
        cue_seed in any::<u64>(),
        flips in 0usize..8,
    ) {
        let mut mem = SchemaMemory::new(16, 0.5, 1).unwrap();
        let mut stored = Vec::new();
        for s in &seeds {
            let p = Pattern::random(16, &mut rng_from_seed(*s)).unwrap();
            mem = mem.facilitate(&p, 1).unwrap();
            prop_assert!(mem.is_symmetric_zero_diagonal());
            stored.push(p);
        }
        let cue = stored[0].with_random_flips(flips, &mut rng_from_seed(cue_seed));
        let out = recall(&mem, &cue, 20).unwrap();
        let mut last = out.initial_energy;
        for ev in &out.trace {
            prop_assert!(ev.energy <= last + 1e-9);
            last = ev.energy;
        }
        prop_assert!((last - mem.energy(out.pattern.units())).abs() < 1e-9);
    }
}
