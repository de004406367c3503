use super::signature::{AgentKind, SiteIndex, Signatures, StateIndex};
use super::SiteGraphError;

pub type AgentId = usize;

/// One end of a bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Endpoint {
    pub agent: AgentId,
    pub site: SiteIndex,
}

impl Endpoint {
    pub fn new(agent: AgentId, site: SiteIndex) -> Self {
        Endpoint { agent, site }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Site {
    pub state: Option<StateIndex>,
    pub link: Option<Endpoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Agent {
    pub kind: AgentKind,
    pub sites: Vec<Site>,
}

/// A site graph: agents with per-site internal states and a symmetric
/// partial pairing of sites (bonds).
///
/// Agent ids are positions in `agents`; they carry no meaning beyond the
/// current value, see [`crate::sitegraph::canonical_form`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SiteGraph {
    pub agents: Vec<Agent>,
}

impl SiteGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an agent with every site free and every stateful site at its
    /// first declared state.
    pub fn add_agent(&mut self, sigs: &Signatures, kind: AgentKind) -> AgentId {
        let sites = sigs
            .get(kind)
            .sites
            .iter()
            .map(|d| Site { state: (!d.states.is_empty()).then_some(0), link: None })
            .collect();
        self.agents.push(Agent { kind, sites });
        self.agents.len() - 1
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn site(&self, e: Endpoint) -> &Site {
        &self.agents[e.agent].sites[e.site as usize]
    }

    pub fn link(&self, e: Endpoint) -> Option<Endpoint> {
        self.site(e).link
    }

    pub fn state(&self, e: Endpoint) -> Option<StateIndex> {
        self.site(e).state
    }

    pub fn set_state(&mut self, e: Endpoint, s: StateIndex) {
        self.agents[e.agent].sites[e.site as usize].state = Some(s);
    }

    pub fn bind(&mut self, a: Endpoint, b: Endpoint) -> Result<(), SiteGraphError> {
        if a == b {
            return Err(SiteGraphError::SelfBond);
        }
        for e in [a, b] {
            if e.agent >= self.agents.len() || e.site as usize >= self.agents[e.agent].sites.len() {
                return Err(SiteGraphError::NoSuchEndpoint(e.agent, e.site));
            }
            if self.link(e).is_some() {
                return Err(SiteGraphError::AlreadyBound(e.agent, e.site));
            }
        }
        self.agents[a.agent].sites[a.site as usize].link = Some(b);
        self.agents[b.agent].sites[b.site as usize].link = Some(a);
        Ok(())
    }

    /// Removes the bond between `a` and `b`; fails unless they are bonded to
    /// each other.
    pub fn unbind(&mut self, a: Endpoint, b: Endpoint) -> Result<(), SiteGraphError> {
        if self.link(a) != Some(b) || self.link(b) != Some(a) {
            return Err(SiteGraphError::NotBonded(a.agent, a.site, b.agent, b.site));
        }
        self.agents[a.agent].sites[a.site as usize].link = None;
        self.agents[b.agent].sites[b.site as usize].link = None;
        Ok(())
    }

    /// Removes the listed agents and every bond incident to them, then
    /// renumbers the survivors preserving their relative order.
    pub fn remove_agents(&mut self, doomed: &[AgentId]) {
        if doomed.is_empty() {
            return;
        }
        let mut dead = vec![false; self.agents.len()];
        for &a in doomed {
            dead[a] = true;
        }
        for (a, _) in dead.iter().enumerate().filter(|(_, &d)| d) {
            for s in 0..self.agents[a].sites.len() {
                if let Some(p) = self.agents[a].sites[s].link.take() {
                    self.agents[p.agent].sites[p.site as usize].link = None;
                }
            }
        }
        let mut new_id = vec![usize::MAX; self.agents.len()];
        let mut next = 0;
        for (a, &d) in dead.iter().enumerate() {
            if !d {
                new_id[a] = next;
                next += 1;
            }
        }
        let old = std::mem::take(&mut self.agents);
        self.agents = old
            .into_iter()
            .enumerate()
            .filter(|(a, _)| !dead[*a])
            .map(|(_, mut ag)| {
                for s in &mut ag.sites {
                    if let Some(l) = &mut s.link {
                        l.agent = new_id[l.agent];
                    }
                }
                ag
            })
            .collect();
    }

    /// Bonds as endpoint pairs `(a, b)` with `a < b`, sorted.
    pub fn bonds(&self) -> Vec<(Endpoint, Endpoint)> {
        let mut out = Vec::new();
        for (a, ag) in self.agents.iter().enumerate() {
            for (s, site) in ag.sites.iter().enumerate() {
                let here = Endpoint::new(a, s as SiteIndex);
                if let Some(other) = site.link {
                    if here < other {
                        out.push((here, other));
                    }
                }
            }
        }
        out
    }

    pub fn count_kind(&self, kind: AgentKind) -> usize {
        self.agents.iter().filter(|a| a.kind == kind).count()
    }

    /// Structural validity against the signatures: site counts, state
    /// domains, and bond symmetry.
    pub fn validate(&self, sigs: &Signatures) -> Result<(), SiteGraphError> {
        for (a, ag) in self.agents.iter().enumerate() {
            if ag.kind as usize >= sigs.len() {
                return Err(SiteGraphError::Invalid(format!("agent {a} has unknown kind")));
            }
            let sig = sigs.get(ag.kind);
            if ag.sites.len() != sig.sites.len() {
                return Err(SiteGraphError::Invalid(format!("agent {a} has wrong site count")));
            }
            for (s, site) in ag.sites.iter().enumerate() {
                let domain = sig.sites[s].states.len();
                match site.state {
                    Some(v) if (v as usize) < domain => {}
                    None if domain == 0 => {}
                    _ => {
                        return Err(SiteGraphError::Invalid(format!(
                            "agent {a} site {s} has a state outside its domain"
                        )))
                    }
                }
                if let Some(p) = site.link {
                    let here = Endpoint::new(a, s as SiteIndex);
                    if p == here {
                        return Err(SiteGraphError::SelfBond);
                    }
                    if p.agent >= self.agents.len()
                        || p.site as usize >= self.agents[p.agent].sites.len()
                        || self.link(p) != Some(here)
                    {
                        return Err(SiteGraphError::Invalid(format!(
                            "bond at agent {a} site {s} is not symmetric"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Renumbers agents: agent `a` moves to position `perm[a]`.
    pub fn permuted(&self, perm: &[AgentId]) -> SiteGraph {
        let mut agents = vec![None; self.agents.len()];
        for (a, ag) in self.agents.iter().enumerate() {
            let mut ag = ag.clone();
            for s in &mut ag.sites {
                if let Some(l) = &mut s.link {
                    l.agent = perm[l.agent];
                }
            }
            agents[perm[a]] = Some(ag);
        }
        SiteGraph { agents: agents.into_iter().map(|a| a.expect("perm is a bijection")).collect() }
    }
}
