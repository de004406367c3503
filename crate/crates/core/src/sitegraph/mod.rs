//! A small engine for Kappa-style site-graph rewriting: signatures, graphs,
//! patterns with unconstrained sites, embeddings, rule application,
//! transition enumeration, canonical keys and a text format.

mod canon;
mod graph;
mod pattern;
mod rule;
mod signature;
mod syntax;

use thiserror::Error;

pub use canon::{canonical_form, CanonicalKey};
pub use graph::{Agent, AgentId, Endpoint, Site, SiteGraph};
pub use pattern::{find_embeddings, Embedding, LinkTest, Pattern, PatternAgent, SitePattern, StateTest};
pub use rule::{apply_rule, enumerate_transitions, Action, RateMode, Rule, SlotSite, Transition};
pub use signature::{AgentKind, AgentSignature, SiteDecl, SiteIndex, Signatures, StateIndex};
pub use syntax::{
    parse_graph, parse_model, parse_pattern, print_graph, print_model, print_pattern, Model, ParseError,
    ParseErrorKind, REVERSE_SUFFIX,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SiteGraphError {
    #[error("agent {0:?} declared twice")]
    DuplicateAgent(String),
    #[error("site {site:?} declared twice on agent {agent:?}")]
    DuplicateSite { agent: String, site: String },
    #[error("state {state:?} declared twice on {agent}.{site}")]
    DuplicateState { agent: String, site: String, state: String },
    #[error("agent {0} has no site {1}")]
    NoSuchEndpoint(AgentId, SiteIndex),
    #[error("site bonded to itself")]
    SelfBond,
    #[error("agent {0} site {1} is already bound")]
    AlreadyBound(AgentId, SiteIndex),
    #[error("agent {0} site {1} is not bonded to agent {2} site {3}")]
    NotBonded(AgentId, SiteIndex, AgentId, SiteIndex),
    #[error("invalid structure: {0}")]
    Invalid(String),
    #[error("rule {rule:?}: {msg}")]
    BadRule { rule: String, msg: String },
    #[error("rule {rule:?} cannot be applied: {msg}")]
    ActionFailed { rule: String, msg: String },
}
