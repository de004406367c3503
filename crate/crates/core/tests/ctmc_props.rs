mod common;

use common::{potential_graph, stationary_dense};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wegscheider::ctmc::{boltzmann, solve_energy, verify_detailed_balance, EnergySolution, DEFAULT_TOLERANCE};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn potential_graphs_recover_energy(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=50);
        let (g, truth) = potential_graph(&mut rng, n);
        let EnergySolution::Energy(e) = solve_energy(&g, &[], DEFAULT_TOLERANCE).unwrap() else {
            panic!("potential graph reported a violation");
        };
        let offset = e.energy[0] - truth[0];
        for (a, b) in e.energy.iter().zip(&truth) {
            prop_assert!((a - b - offset).abs() < 1e-9);
        }
        let p = boltzmann(&e).p;
        prop_assert!(verify_detailed_balance(&p, &g, 1e-10).unwrap().passed);
        for (a, b) in p.iter().zip(stationary_dense(&g)) {
            prop_assert!((a - b).abs() < 1e-8, "boltzmann {a} vs stationary {b}");
        }
    }

    #[test]
    fn perturbed_cycle_is_caught(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(3..=50);
        let (mut g, _) = potential_graph(&mut rng, n);
        let delta: f64 = rng.gen_range(0.1..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let q = g.rate(0, 1).unwrap();
        g.set_rate(0, 1, q * delta.exp()).unwrap();
        let EnergySolution::Violation(w) = solve_energy(&g, &[], DEFAULT_TOLERANCE).unwrap() else {
            panic!("perturbation went unnoticed");
        };
        prop_assert!(w.is_cycle());
        let w = if w.contains_edge((0, 1)) { w } else { w.reversed() };
        prop_assert!(w.contains_edge((0, 1)));
        prop_assert!((w.energy_sum + delta).abs() < 1e-9);
        prop_assert!((g.path_delta_e(&w.path).unwrap() - w.energy_sum).abs() < 1e-9);
    }

    #[test]
    fn pinning_shifts_energy(seed in any::<u64>(), pin in -5.0..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, _) = potential_graph(&mut rng, 6);
        let free = solve_energy(&g, &[], DEFAULT_TOLERANCE).unwrap();
        let pinned = solve_energy(&g, &[(3, pin)], DEFAULT_TOLERANCE).unwrap();
        let (a, b) = (free.energy().unwrap(), pinned.energy().unwrap());
        prop_assert!((b.energy[3] - pin).abs() < 1e-12);
        let shift = b.energy[0] - a.energy[0];
        for (x, y) in a.energy.iter().zip(&b.energy) {
            prop_assert!((y - x - shift).abs() < 1e-9);
        }
    }
}
