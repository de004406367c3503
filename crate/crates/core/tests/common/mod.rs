#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wegscheider::ctmc::RateGraph;
use wegscheider::pcp::{compile, Encoding, EncodingParams, PcpInstance};
use wegscheider::sitegraph::{
    canonical_form, enumerate_transitions, parse_model, Endpoint, LinkTest, Pattern, RateMode, SiteGraph, Signatures,
    StateTest,
};

pub fn solvable_instance() -> PcpInstance {
    PcpInstance::from_pairs(&[("aa", "a"), ("ba", "ab"), ("b", "ab")]).unwrap()
}

pub fn unsolvable_instance() -> PcpInstance {
    PcpInstance::from_pairs(&[("a", "aa")]).unwrap()
}

pub const SIGS: &str = "%agent: S(l, r, x{*,a,b})\n%agent: T(p, q{u,v})\n";

pub fn sigs() -> Signatures {
    parse_model(SIGS).unwrap().signatures
}

pub fn random_graph(rng: &mut ChaCha8Rng, sigs: &Signatures, max_agents: usize) -> SiteGraph {
    let mut g = SiteGraph::new();
    let n = rng.gen_range(1..=max_agents);
    for _ in 0..n {
        let kind = rng.gen_range(0..sigs.len()) as u16;
        let a = g.add_agent(sigs, kind);
        for (s, decl) in sigs.get(kind).sites.iter().enumerate() {
            if !decl.states.is_empty() {
                g.set_state(Endpoint::new(a, s as u16), rng.gen_range(0..decl.states.len()) as u16);
            }
        }
    }
    let mut ends: Vec<Endpoint> = g
        .agents
        .iter()
        .enumerate()
        .flat_map(|(a, ag)| (0..ag.sites.len()).map(move |s| Endpoint::new(a, s as u16)))
        .collect();
    ends.shuffle(rng);
    let bonds = rng.gen_range(0..=ends.len() / 2);
    for pair in ends.chunks(2).take(bonds) {
        if pair.len() == 2 {
            g.bind(pair[0], pair[1]).unwrap();
        }
    }
    g
}

pub fn random_pattern(rng: &mut ChaCha8Rng, sigs: &Signatures, max_slots: usize) -> Pattern {
    let mut p = Pattern::new();
    let k = rng.gen_range(1..=max_slots);
    for _ in 0..k {
        let kind = rng.gen_range(0..sigs.len()) as u16;
        p.add_agent(sigs, kind);
    }
    for slot in 0..k {
        let kind = p.agents[slot].kind;
        for (s, decl) in sigs.get(kind).sites.iter().enumerate() {
            let s = s as u16;
            if !decl.states.is_empty() && rng.gen_bool(0.4) {
                let st = rng.gen_range(0..decl.states.len()) as u16;
                let test = if rng.gen_bool(0.5) {
                    StateTest::exact(st)
                } else {
                    let other = rng.gen_range(0..decl.states.len()) as u16;
                    StateTest::one_of(vec![st, other])
                };
                p.set_state(slot, s, test);
            }
            if p.site_mut(slot, s).link != LinkTest::Any {
                continue;
            }
            match rng.gen_range(0..4) {
                0 => p.set_free(slot, s),
                1 => p.site_mut(slot, s).link = LinkTest::Bound,
                2 => {
                    let other = rng.gen_range(0..k);
                    let nsites = p.agents[other].sites.len() as u16;
                    let t = rng.gen_range(0..nsites);
                    if (other, t) != (slot, s) && p.site_mut(other, t).link == LinkTest::Any {
                        p.bind(slot, s, other, t);
                    }
                }
                _ => {}
            }
        }
    }
    p
}

pub fn brute_force(p: &Pattern, g: &SiteGraph) -> BTreeSet<Vec<usize>> {
    let mut out = BTreeSet::new();
    let mut img = Vec::new();
    fn go(p: &Pattern, g: &SiteGraph, img: &mut Vec<usize>, out: &mut BTreeSet<Vec<usize>>) {
        if img.len() == p.len() {
            if (0..p.len()).all(|slot| matches(p, g, img, slot)) {
                out.insert(img.clone());
            }
            return;
        }
        for a in 0..g.len() {
            if !img.contains(&a) {
                img.push(a);
                go(p, g, img, out);
                img.pop();
            }
        }
    }
    go(p, g, &mut img, &mut out);
    out
}

pub fn matches(p: &Pattern, g: &SiteGraph, img: &[usize], slot: usize) -> bool {
    let pa = &p.agents[slot];
    let ga = &g.agents[img[slot]];
    pa.kind == ga.kind
        && pa.sites.iter().zip(&ga.sites).all(|(sp, site)| {
            let state_ok = match &sp.state {
                StateTest::Any => true,
                StateTest::In(v) => site.state.is_some_and(|s| v.contains(&s)),
            };
            let link_ok = match sp.link {
                LinkTest::Any => true,
                LinkTest::Free => site.link.is_none(),
                LinkTest::Bound => site.link.is_some(),
                LinkTest::To { slot: o, site: t } => site.link == Some(Endpoint::new(img[o], t)),
            };
            state_ok && link_ok
        })
}

pub fn isomorphic(a: &SiteGraph, b: &SiteGraph) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut perm: Vec<usize> = (0..a.len()).collect();
    permutations(&mut perm, 0, &mut |p| a.permuted(p) == *b)
}

pub fn permutations(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if k == v.len() {
        return f(v);
    }
    for i in k..v.len() {
        v.swap(k, i);
        if permutations(v, k + 1, f) {
            return true;
        }
        v.swap(k, i);
    }
    false
}


/// A connected graph with rates `q_ij = k_ij exp((E_i - E_j) / 2)` for random
/// energies `E` and symmetric prefactors `k`. Always contains the triangle
/// 0-1-2 when `n >= 3`.
pub fn potential_graph(rng: &mut ChaCha8Rng, n: usize) -> (RateGraph, Vec<f64>) {
    let energy: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let mut g = RateGraph::with_states(n);
    let link = |g: &mut RateGraph, i: usize, j: usize, rng: &mut ChaCha8Rng| {
        if i == j || g.rate(i, j).is_some() {
            return;
        }
        let k = rng.gen_range(0.1..5.0);
        g.add_rate(i, j, k * ((energy[i] - energy[j]) / 2.0).exp()).unwrap();
        g.add_rate(j, i, k * ((energy[j] - energy[i]) / 2.0).exp()).unwrap();
    };
    for j in 1..n {
        let i = rng.gen_range(0..j);
        link(&mut g, i, j, rng);
    }
    if n >= 3 {
        link(&mut g, 0, 1, rng);
        link(&mut g, 1, 2, rng);
        link(&mut g, 0, 2, rng);
    }
    for _ in 0..n {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        link(&mut g, i, j, rng);
    }
    (g, energy)
}

/// Stationary distribution of the generator by Gaussian elimination on
/// `pi Q = 0`, `sum pi = 1`.
pub fn stationary_dense(g: &RateGraph) -> Vec<f64> {
    let n = g.num_states();
    let mut a = vec![vec![0.0; n + 1]; n];
    for ((i, j), q) in g.edges() {
        a[j][i] += q;
        a[i][i] -= q;
    }
    a[n - 1].fill(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                let pivot = a[col].clone();
                for (x, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

/// Every reachable state of the extended encoding of the solvable instance with at most
/// `bound` non-dummy indices, keyed canonically.
pub fn encoding_states(bound: usize) -> (Encoding, Vec<SiteGraph>) {
    let enc = compile(&solvable_instance(), &EncodingParams::default(), true).unwrap();
    let m = &enc.model;
    let mut seen = HashMap::new();
    let mut states = vec![enc.initial.clone()];
    seen.insert(canonical_form(&enc.initial), 0);
    let mut queue = VecDeque::from([0]);
    while let Some(i) = queue.pop_front() {
        let g = states[i].clone();
        for t in enumerate_transitions(&g, &m.rules, &m.signatures, RateMode::EmbeddingWeighted).unwrap() {
            if enc.n_value(&t.successor) > bound || seen.contains_key(&t.key) {
                continue;
            }
            seen.insert(t.key, states.len());
            queue.push_back(states.len());
            states.push(t.successor);
        }
    }
    (enc, states)
}
