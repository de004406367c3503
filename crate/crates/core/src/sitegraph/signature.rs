use std::collections::HashMap;

use super::SiteGraphError;

pub type AgentKind = u16;
pub type SiteIndex = u16;
pub type StateIndex = u16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteDecl {
    pub name: String,
    /// Internal-state domain; empty when the site carries no internal state.
    pub states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentSignature {
    pub name: String,
    pub sites: Vec<SiteDecl>,
}

impl AgentSignature {
    pub fn new(name: impl Into<String>) -> Self {
        AgentSignature { name: name.into(), sites: Vec::new() }
    }

    pub fn site(mut self, name: impl Into<String>) -> Self {
        self.sites.push(SiteDecl { name: name.into(), states: Vec::new() });
        self
    }

    pub fn site_with_states<S: Into<String>>(
        mut self,
        name: impl Into<String>,
        states: impl IntoIterator<Item = S>,
    ) -> Self {
        self.sites.push(SiteDecl {
            name: name.into(),
            states: states.into_iter().map(Into::into).collect(),
        });
        self
    }

    pub fn site_index(&self, name: &str) -> Option<SiteIndex> {
        self.sites.iter().position(|s| s.name == name).map(|i| i as SiteIndex)
    }

    pub fn state_index(&self, site: SiteIndex, state: &str) -> Option<StateIndex> {
        self.sites[site as usize]
            .states
            .iter()
            .position(|s| s == state)
            .map(|i| i as StateIndex)
    }
}

/// The agent types of a model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signatures {
    agents: Vec<AgentSignature>,
    by_name: HashMap<String, AgentKind>,
}

impl Signatures {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, sig: AgentSignature) -> Result<AgentKind, SiteGraphError> {
        if self.by_name.contains_key(&sig.name) {
            return Err(SiteGraphError::DuplicateAgent(sig.name));
        }
        for (i, s) in sig.sites.iter().enumerate() {
            if sig.sites[..i].iter().any(|t| t.name == s.name) {
                return Err(SiteGraphError::DuplicateSite { agent: sig.name, site: s.name.clone() });
            }
            for (k, v) in s.states.iter().enumerate() {
                if s.states[..k].contains(v) {
                    return Err(SiteGraphError::DuplicateState {
                        agent: sig.name.clone(),
                        site: s.name.clone(),
                        state: v.clone(),
                    });
                }
            }
        }
        let kind = self.agents.len() as AgentKind;
        self.by_name.insert(sig.name.clone(), kind);
        self.agents.push(sig);
        Ok(kind)
    }

    pub fn kind(&self, name: &str) -> Option<AgentKind> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, kind: AgentKind) -> &AgentSignature {
        &self.agents[kind as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = &AgentSignature> {
        self.agents.iter()
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }
}
