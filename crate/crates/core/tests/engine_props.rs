mod common;

use std::collections::BTreeSet;

use common::{brute_force, encoding_states, isomorphic, random_graph, random_pattern, sigs};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wegscheider::sitegraph::{
    apply_rule, canonical_form, enumerate_transitions, find_embeddings, parse_graph, print_graph, Embedding,
    RateMode,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn embeddings_match_brute_force(seed in any::<u64>()) {
        let sigs = sigs();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, &sigs, 6);
        for _ in 0..5 {
            let p = random_pattern(&mut rng, &sigs, 3);
            let fast: BTreeSet<Vec<usize>> = find_embeddings(&p, &g).into_iter().map(|Embedding(v)| v).collect();
            prop_assert_eq!(fast, brute_force(&p, &g));
        }
    }

    #[test]
    fn canonical_key_survives_relabelling(seed in any::<u64>()) {
        let sigs = sigs();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, &sigs, 8);
        let key = canonical_form(&g);
        let mut perm: Vec<usize> = (0..g.len()).collect();
        for _ in 0..100 {
            perm.shuffle(&mut rng);
            prop_assert_eq!(canonical_form(&g.permuted(&perm)), key.clone());
        }
    }

    #[test]
    fn canonical_key_decides_isomorphism(seed in any::<u64>()) {
        let sigs = sigs();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_graph(&mut rng, &sigs, 4);
        let b = random_graph(&mut rng, &sigs, 4);
        prop_assert_eq!(canonical_form(&a) == canonical_form(&b), isomorphic(&a, &b));
    }

    #[test]
    fn print_parse_roundtrip(seed in any::<u64>()) {
        let sigs = sigs();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, &sigs, 6);
        let text = print_graph(&sigs, &g);
        let back = parse_graph(&sigs, &text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(print_graph(&sigs, &back), text);
    }
}

#[test]
fn reverse_rule_restores_state() {
    let (enc, states) = encoding_states(3);
    let m = &enc.model;
    assert!(states.len() > 100);
    let mut checked = 0;
    for g in &states {
        let key = canonical_form(g);
        for t in enumerate_transitions(g, &m.rules, &m.signatures, RateMode::EmbeddingWeighted).unwrap() {
            let rev = &m.rules[m.rules[t.rule].reverse_of.expect("every rule is paired")];
            let back = find_embeddings(&rev.lhs, &t.successor)
                .iter()
                .map(|e| canonical_form(&apply_rule(rev, e, &t.successor, &m.signatures).unwrap()))
                .any(|k| k == key);
            assert!(back, "{} not undone from {}", m.rules[t.rule].name, print_graph(&m.signatures, g));
            checked += 1;
        }
    }
    assert!(checked > states.len());
}

#[test]
fn encoding_rules_embed_at_most_once() {
    let (enc, states) = encoding_states(3);
    for g in &states {
        for rule in &enc.model.rules {
            assert!(find_embeddings(&rule.lhs, g).len() <= 1, "{} embeds twice", rule.name);
        }
    }
}
