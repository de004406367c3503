//! Canonical keys for site graphs.
//!
//! A connected site graph is rigid: once one agent is fixed, following sites
//! in signature order numbers every other agent uniquely. The code of a
//! component is therefore the minimum, over candidate roots, of the
//! traversal code from that root; candidates are restricted to the agents
//! of the least frequent local class (kind, states, bound sites), which is
//! preserved by isomorphism. Components in which some class has a single
//! member (every encoding state: the `F`/`B` agent is unique) are coded in
//! linear time.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Serialize, Serializer};

use super::graph::SiteGraph;

/// Isomorphism-invariant key of a site graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(pub Vec<u8>);

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl Serialize for CanonicalKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

const NONE: u32 = u32::MAX;

fn local_class(g: &SiteGraph, a: usize) -> Vec<u32> {
    let ag = &g.agents[a];
    let mut v = Vec::with_capacity(1 + 2 * ag.sites.len());
    v.push(ag.kind as u32);
    for s in &ag.sites {
        v.push(s.state.map_or(NONE, u32::from));
        v.push(s.link.is_some() as u32);
    }
    v
}

fn components(g: &SiteGraph) -> Vec<Vec<usize>> {
    let mut comp = vec![usize::MAX; g.len()];
    let mut out = Vec::new();
    for start in 0..g.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let c = out.len();
        comp[start] = c;
        let mut members = vec![start];
        let mut i = 0;
        while i < members.len() {
            let a = members[i];
            i += 1;
            for s in &g.agents[a].sites {
                if let Some(l) = s.link {
                    if comp[l.agent] == usize::MAX {
                        comp[l.agent] = c;
                        members.push(l.agent);
                    }
                }
            }
        }
        out.push(members);
    }
    out
}

fn code_from(g: &SiteGraph, root: usize, size: usize, number: &mut [u32]) -> Vec<u32> {
    let mut order = Vec::with_capacity(size);
    number[root] = 0;
    order.push(root);
    let mut queue = VecDeque::from([root]);
    while let Some(a) = queue.pop_front() {
        for s in &g.agents[a].sites {
            if let Some(l) = s.link {
                if number[l.agent] == NONE {
                    number[l.agent] = order.len() as u32;
                    order.push(l.agent);
                    queue.push_back(l.agent);
                }
            }
        }
    }
    let mut code = Vec::with_capacity(size * 6);
    for &a in &order {
        let ag = &g.agents[a];
        code.push(ag.kind as u32);
        for s in &ag.sites {
            code.push(s.state.map_or(NONE, u32::from));
            match s.link {
                Some(l) => {
                    code.push(number[l.agent]);
                    code.push(l.site as u32);
                }
                None => {
                    code.push(NONE);
                    code.push(NONE);
                }
            }
        }
    }
    for &a in &order {
        number[a] = NONE;
    }
    code
}

/// Canonical key: isomorphic graphs (same multiset of connected components
/// up to agent renumbering) get equal keys, others distinct ones.
pub fn canonical_form(g: &SiteGraph) -> CanonicalKey {
    let mut number = vec![NONE; g.len()];
    let mut codes: Vec<Vec<u32>> = components(g)
        .into_iter()
        .map(|members| {
            let mut classes: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
            for &a in &members {
                classes.entry(local_class(g, a)).or_default().push(a);
            }
            let roots = classes
                .values()
                .min_by_key(|v| v.len())
                .expect("component is non-empty");
            roots
                .iter()
                .map(|&r| code_from(g, r, members.len(), &mut number))
                .min()
                .expect("at least one root")
        })
        .collect();
    codes.sort();
    let mut bytes = Vec::new();
    for c in codes {
        bytes.extend_from_slice(&(c.len() as u32).to_be_bytes());
        for x in c {
            bytes.extend_from_slice(&x.to_be_bytes());
        }
    }
    CanonicalKey(bytes)
}
