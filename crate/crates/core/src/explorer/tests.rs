use super::*;
use crate::pcp::{compile, EncodingParams, PcpInstance};

fn solvable() -> PcpInstance {
    PcpInstance::from_pairs(&[("aa", "a"), ("ba", "ab"), ("b", "ab")]).unwrap()
}

fn oracle(x: &PcpInstance, p: EncodingParams, extended: bool, bound: usize) -> TruncatedChain {
    explore(&OracleSource { instance: x, params: p, extended }, bound, DEFAULT_STATE_CAP, false).unwrap()
}

#[test]
fn bound_zero_is_initial_only() {
    let x = solvable();
    let t = oracle(&x, EncodingParams::default(), false, 0);
    assert_eq!(t.num_states(), 1);
    assert_eq!(t.graph.num_edges(), 0);
    assert_eq!(t.frontier, 3);
}

#[test]
fn first_layer_of_solvable_instance() {
    let x = solvable();
    let t = oracle(&x, EncodingParams::default(), false, 1);
    let mut labels: Vec<&str> = t.graph.labels().iter().map(String::as_str).collect();
    labels.sort();
    assert_eq!(
        labels,
        ["B[1]@0:a", "B[1]@1:aa", "B[2]@1:ba", "B[3]@1:b", "F[1]:aa", "F[2]:ba", "F[3]:b", "F[]:"]
    );
    assert!(t.graph.check_symmetric_support().is_none());
}

#[test]
fn parallel_matches_sequential() {
    let x = solvable();
    let enc = compile(&x, &EncodingParams::default(), true).unwrap();
    let src = EncodingSource::new(&enc);
    let a = explore(&src, 3, DEFAULT_STATE_CAP, false).unwrap();
    let b = explore(&src, 3, DEFAULT_STATE_CAP, true).unwrap();
    assert_eq!(a.graph, b.graph);
    assert_eq!(a.edge_rules, b.edge_rules);
}

#[test]
fn state_cap_keeps_partial_chain() {
    let x = solvable();
    let src = OracleSource { instance: &x, params: EncodingParams::default(), extended: false };
    match explore(&src, 4, 10, false) {
        Err(ExploreError::StateCap { cap, partial, .. }) => {
            assert_eq!(cap, 10);
            assert_eq!(partial.num_states(), 10);
            assert!(!partial.complete);
        }
        other => panic!("expected a state-cap error, got {other:?}"),
    }
}

#[test]
fn witness_is_a_restart_cycle() {
    let x = solvable();
    let p = EncodingParams { epsilon: 1.5, e_switch: 1.0, base_rate: 1.0 };
    let t = oracle(&x, p, true, 3);
    let report = check_equilibrium(&t, Some(p.epsilon), 1e-9).unwrap();
    let w = report.witness.expect("solvable instance violates the cycle condition");
    assert!(w.traverses_restart);
    assert!((w.energy_sum - 2.5).abs() < 1e-9);
    assert!(w.cycle.is_cycle());
    assert_eq!(w.steps[0].from, "F[]:");
}

#[test]
fn degenerate_switch_has_no_violation() {
    let x = solvable();
    let p = EncodingParams { epsilon: 1.5, e_switch: -1.5, base_rate: 1.0 };
    let t = oracle(&x, p, true, 3);
    let report = check_equilibrium(&t, Some(p.epsilon), 1e-9).unwrap();
    assert_eq!(report.verdict, "equilibrium");
    assert!(report.max_deviation_from_n_epsilon.unwrap() < 1e-9);
}

#[test]
fn cycles_without_restart_are_neutral() {
    let x = solvable();
    let t = oracle(&x, EncodingParams { epsilon: 0.8, e_switch: 1.0, base_rate: 1.0 }, false, 3);
    let report = check_equilibrium(&t, Some(0.8), 1e-9).unwrap();
    assert_eq!(report.verdict, "equilibrium");
    assert!(report.max_deviation_from_n_epsilon.unwrap() < 1e-9);
}

#[test]
fn tail_bound_matches_direct_sum() {
    for (q, n) in [(0.3, 0), (0.5, 4), (0.9, 10)] {
        let direct: f64 = (n + 1..5000).map(|k| (k as f64 + 1.0) * f64::powi(q, k as i32)).sum();
        let closed = tail_bound(q, n).unwrap();
        assert!((closed - direct).abs() < 1e-9 * direct.max(1.0), "q={q} n={n}");
    }
    assert_eq!(tail_bound(1.0, 3), None);
}

#[test]
fn partition_verdicts() {
    let x = PcpInstance::from_pairs(&[("a", "aa")]).unwrap();
    let t = oracle(&x, EncodingParams { epsilon: 1.0, e_switch: 1.0, base_rate: 1.0 }, false, 4);
    let census = omega_census(&t, 1);
    assert_eq!((census.rows[0].count, census.rows[0].bound), (1, 1.0));
    assert!((0..=4).all(|n| census.count(n) <= n + 1));
    let warm = partition_sum(&census, 4, 1.0, 1, false);
    assert_eq!(warm.verdict, PartitionVerdict::Converges);
    assert_eq!(warm.partial_sums[0], 1.0);
    assert!(warm.partial_sums.windows(2).all(|w| w[0] <= w[1]));
    let cold = partition_sum(&census, 4, 0.0, 1, false);
    assert_eq!(cold.verdict, PartitionVerdict::DivergenceSuspected);
    assert_eq!(cold.tail_bound, None);
    assert_eq!(partition_sum(&census, 4, 1.0, 1, true).verdict, PartitionVerdict::ViolationFound);
    let three = partition_sum(&census, 4, 1.5, 3, false);
    assert!(three.tail_bound.is_some_and(f64::is_finite));
}

#[test]
fn monotone_in_bound() {
    let x = solvable();
    let p = EncodingParams::default();
    let sizes: Vec<usize> = (0..4).map(|n| oracle(&x, p, true, n).num_states()).collect();
    assert!(sizes.windows(2).all(|w| w[0] <= w[1]), "{sizes:?}");
}

#[test]
fn exports() {
    let x = solvable();
    let t = oracle(&x, EncodingParams::default(), false, 1);
    let json = serde_json::to_value(t.to_json()).unwrap();
    assert_eq!(json["num_states"], 8);
    assert_eq!(json["edges"].as_array().unwrap().len(), t.graph.num_edges());
    let dot = t.to_dot();
    assert!(dot.contains("extend_1 dE=1.5000"));
    assert!(dot.starts_with("digraph"));
}
