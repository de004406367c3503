use std::collections::VecDeque;

use super::graph::{AgentId, Endpoint, SiteGraph};
use super::signature::{AgentKind, SiteIndex, Signatures, StateIndex};
use super::SiteGraphError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub enum StateTest {
    /// Unconstrained ("don't care, don't write").
    #[default]
    Any,
    /// State must be one of these (sorted, non-empty).
    In(Vec<StateIndex>),
}

impl StateTest {
    pub fn exact(s: StateIndex) -> Self {
        StateTest::In(vec![s])
    }

    pub fn one_of(mut states: Vec<StateIndex>) -> Self {
        states.sort_unstable();
        states.dedup();
        StateTest::In(states)
    }

    pub fn accepts(&self, s: Option<StateIndex>) -> bool {
        match self {
            StateTest::Any => true,
            StateTest::In(set) => s.is_some_and(|v| set.binary_search(&v).is_ok()),
        }
    }

    pub fn single(&self) -> Option<StateIndex> {
        match self {
            StateTest::In(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LinkTest {
    #[default]
    Any,
    Free,
    /// Bound to something not described by the pattern.
    Bound,
    /// Bound to the given site of another pattern slot.
    To { slot: usize, site: SiteIndex },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SitePattern {
    pub state: StateTest,
    pub link: LinkTest,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PatternAgent {
    pub kind: AgentKind,
    pub sites: Vec<SitePattern>,
}

/// A site graph with partially specified sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Pattern {
    pub agents: Vec<PatternAgent>,
}

impl Pattern {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an agent whose sites are all unconstrained.
    pub fn add_agent(&mut self, sigs: &Signatures, kind: AgentKind) -> usize {
        let n = sigs.get(kind).sites.len();
        self.agents.push(PatternAgent { kind, sites: vec![SitePattern::default(); n] });
        self.agents.len() - 1
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn site_mut(&mut self, slot: usize, site: SiteIndex) -> &mut SitePattern {
        &mut self.agents[slot].sites[site as usize]
    }

    pub fn set_state(&mut self, slot: usize, site: SiteIndex, test: StateTest) {
        self.site_mut(slot, site).state = test;
    }

    pub fn set_free(&mut self, slot: usize, site: SiteIndex) {
        self.site_mut(slot, site).link = LinkTest::Free;
    }

    pub fn bind(&mut self, a: usize, sa: SiteIndex, b: usize, sb: SiteIndex) {
        self.site_mut(a, sa).link = LinkTest::To { slot: b, site: sb };
        self.site_mut(b, sb).link = LinkTest::To { slot: a, site: sa };
    }

    pub fn validate(&self, sigs: &Signatures) -> Result<(), SiteGraphError> {
        for (slot, pa) in self.agents.iter().enumerate() {
            if pa.kind as usize >= sigs.len() {
                return Err(SiteGraphError::Invalid(format!("pattern slot {slot} has unknown kind")));
            }
            let sig = sigs.get(pa.kind);
            if pa.sites.len() != sig.sites.len() {
                return Err(SiteGraphError::Invalid(format!("pattern slot {slot} has wrong site count")));
            }
            for (s, sp) in pa.sites.iter().enumerate() {
                if let StateTest::In(set) = &sp.state {
                    let domain = sig.sites[s].states.len();
                    if set.is_empty() || set.iter().any(|&v| v as usize >= domain) {
                        return Err(SiteGraphError::Invalid(format!(
                            "pattern slot {slot} site {s} constrains a state outside its domain"
                        )));
                    }
                }
                if let LinkTest::To { slot: b, site: t } = sp.link {
                    let ok = b < self.agents.len()
                        && (t as usize) < self.agents[b].sites.len()
                        && (b, t) != (slot, s as SiteIndex)
                        && self.agents[b].sites[t as usize].link
                            == (LinkTest::To { slot, site: s as SiteIndex });
                    if !ok {
                        return Err(SiteGraphError::Invalid(format!(
                            "pattern bond at slot {slot} site {s} is not symmetric"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Slot visiting order: breadth-first along pattern bonds, each
    /// connected component started from its lowest slot.
    fn match_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.agents.len()];
        let mut order = Vec::with_capacity(self.agents.len());
        for start in 0..self.agents.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                order.push(u);
                for sp in &self.agents[u].sites {
                    if let LinkTest::To { slot, .. } = sp.link {
                        if !seen[slot] {
                            seen[slot] = true;
                            queue.push_back(slot);
                        }
                    }
                }
            }
        }
        order
    }
}

/// Injective map from pattern slots to graph agents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Embedding(pub Vec<AgentId>);

impl Embedding {
    pub fn agent(&self, slot: usize) -> AgentId {
        self.0[slot]
    }
}

/// Whether graph agent `agent` can stand for pattern `slot`, given the slots
/// assigned so far. Bonds to unassigned slots are checked for site and kind
/// only; the partner check happens when that slot is assigned.
pub(crate) fn slot_matches(
    p: &Pattern,
    slot: usize,
    g: &SiteGraph,
    agent: AgentId,
    assigned: &[Option<AgentId>],
) -> bool {
    let pa = &p.agents[slot];
    let ga = &g.agents[agent];
    if pa.kind != ga.kind {
        return false;
    }
    for (sp, site) in pa.sites.iter().zip(&ga.sites) {
        if !sp.state.accepts(site.state) {
            return false;
        }
        let ok = match sp.link {
            LinkTest::Any => true,
            LinkTest::Free => site.link.is_none(),
            LinkTest::Bound => site.link.is_some(),
            LinkTest::To { slot: other, site: other_site } => match site.link {
                None => false,
                Some(Endpoint { agent: b, site: t }) => {
                    t == other_site
                        && g.agents[b].kind == p.agents[other].kind
                        && if other == slot { b == agent } else { assigned[other].is_none_or(|x| x == b) }
                }
            },
        };
        if !ok {
            return false;
        }
    }
    true
}

/// All embeddings of `p` into `g`, sorted lexicographically by image.
pub fn find_embeddings(p: &Pattern, g: &SiteGraph) -> Vec<Embedding> {
    let order = p.match_order();
    let mut assigned = vec![None; p.len()];
    let mut used = vec![false; g.len()];
    let mut out = Vec::new();
    extend(p, g, &order, 0, &mut assigned, &mut used, &mut out);
    out.sort();
    out
}

fn extend(
    p: &Pattern,
    g: &SiteGraph,
    order: &[usize],
    depth: usize,
    assigned: &mut Vec<Option<AgentId>>,
    used: &mut Vec<bool>,
    out: &mut Vec<Embedding>,
) {
    if depth == order.len() {
        out.push(Embedding(assigned.iter().map(|a| a.expect("all slots assigned")).collect()));
        return;
    }
    let slot = order[depth];
    // A bond to an already assigned slot pins the candidate.
    let forced = p.agents[slot].sites.iter().enumerate().find_map(|(s, sp)| match sp.link {
        LinkTest::To { slot: other, site: t } => assigned[other].map(|b| {
            g.link(Endpoint::new(b, t))
                .filter(|e| e.site as usize == s)
                .map(|e| e.agent)
        }),
        _ => None,
    });
    let candidates: Vec<AgentId> = match forced {
        Some(Some(a)) => vec![a],
        Some(None) => return,
        None => (0..g.len()).collect(),
    };
    for a in candidates {
        if used[a] || !slot_matches(p, slot, g, a, assigned) {
            continue;
        }
        assigned[slot] = Some(a);
        used[a] = true;
        extend(p, g, order, depth + 1, assigned, used, out);
        used[a] = false;
        assigned[slot] = None;
    }
}
