use arbiq::oracle::brute_force_qubo;
use arbiq::quantum::{ace_train, measure, run_circuit, AceConfig, Ansatz, CircuitSpec, Shots};
use arbiq::QuboModel;

fn tv(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x[0] - y[0]).abs() + (x[1] - y[1]).abs())
        .sum::<f64>()
        / 2.0
}

#[test]
fn sampled_distribution_tracks_exact() {
    // Arbitrary fixed angles; any state works, this one is far from uniform.
    let params = vec![0.3, 1.9, 2.8, 0.7, 4.1, 5.5];
    let spec = CircuitSpec::new(3, Ansatz::Circuit2, 2, params).unwrap();
    let state = run_circuit(&spec).unwrap();
    let exact = measure(&state, Shots::Exact, 0).unwrap();
    assert!((exact.total() - 1.0).abs() < 1e-9);
    for seed in 0..5 {
        let sampled = measure(&state, Shots::Sampled(100_000), seed).unwrap();
        let counts = sampled.counts.as_ref().unwrap();
        assert_eq!(counts.iter().map(|c| c[0] + c[1]).sum::<u64>(), 100_000);
        let d = tv(&exact.probs, &sampled.probs);
        assert!(d <= 0.01, "seed {seed}: TV {d}");
    }
    assert!(measure(&state, Shots::Sampled(0), 0).is_err());
}

#[test]
fn sampling_is_seeded() {
    let spec = CircuitSpec::new(4, Ansatz::Circuit1, 1, (0..8).map(|i| i as f64 * 0.4).collect()).unwrap();
    let state = run_circuit(&spec).unwrap();
    let a = measure(&state, Shots::Sampled(4096), 9).unwrap();
    let b = measure(&state, Shots::Sampled(4096), 9).unwrap();
    let c = measure(&state, Shots::Sampled(4096), 10).unwrap();
    assert_eq!(a.counts, b.counts);
    assert_ne!(a.counts, c.counts);
}

/// Four variables with a unique minimum at 1010.
fn toy() -> QuboModel {
    QuboModel::from_terms(
        4,
        vec![-1.0, 0.5, -1.0, 0.5],
        [((0, 1), 2.0), ((1, 2), 2.0), ((2, 3), 2.0), ((0, 2), -0.5)],
        0.0,
    )
    .unwrap()
}

#[test]
fn ace_finds_toy_minimum() {
    let q = toy();
    let (best_x, best_e) = brute_force_qubo(&q).unwrap();
    assert_eq!(best_x, vec![true, false, true, false]);
    for ansatz in [Ansatz::Circuit1, Ansatz::Circuit2] {
        let cfg = AceConfig {
            ansatz,
            ..AceConfig::default()
        };
        let trained = ace_train(&q, &cfg, 5).unwrap();
        assert_eq!(trained.qubits, 3);
        assert_eq!(trained.best_bitstring, best_x, "{ansatz}");
        assert!((trained.best_energy - best_e).abs() < 1e-12);
        assert_eq!(trained.trace.len(), cfg.de.generations + 1);
        assert!(trained.trace.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn ace_trains_with_sampled_shots() {
    let q = toy();
    let cfg = AceConfig {
        shots: Shots::Sampled(2048),
        ..AceConfig::default()
    };
    let a = ace_train(&q, &cfg, 1).unwrap();
    let b = ace_train(&q, &cfg, 1).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.best_bitstring, vec![true, false, true, false]);
    let zero = AceConfig {
        shots: Shots::Sampled(0),
        ..AceConfig::default()
    };
    assert!(ace_train(&q, &zero, 1).is_err());
}
