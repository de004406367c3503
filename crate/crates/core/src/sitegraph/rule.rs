use serde::{Deserialize, Serialize};

use super::canon::{canonical_form, CanonicalKey};
use super::graph::{Endpoint, SiteGraph};
use super::pattern::{find_embeddings, Embedding, LinkTest, Pattern, StateTest};
use super::signature::{AgentKind, SiteIndex, Signatures, StateIndex};
use super::SiteGraphError;

/// A site of a rule slot. Slots `0..lhs.len()` are left-hand-side agents;
/// higher slots are agents created by the rule, in creation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotSite {
    pub slot: usize,
    pub site: SiteIndex,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Unbind(SlotSite, SlotSite),
    Delete(usize),
    Create { kind: AgentKind, states: Vec<Option<StateIndex>> },
    Bind(SlotSite, SlotSite),
    SetState(SlotSite, StateIndex),
}

/// A rewrite rule `lhs -> rhs`.
///
/// Agents are aligned Kappa-style: the longest prefix of `lhs` and `rhs` with
/// equal agent kinds is preserved, the remaining `lhs` agents are deleted and
/// the remaining `rhs` agents created. Sites left unconstrained on a
/// preserved `rhs` agent are left unchanged; on a created agent they are free
/// and at the first state of their domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub lhs: Pattern,
    pub rhs: Pattern,
    pub actions: Vec<Action>,
    pub rate: f64,
    /// Declared energy difference of one application.
    pub delta_e: f64,
    /// Index of the partner rule in the enclosing rule list.
    pub reverse_of: Option<usize>,
}

impl Rule {
    pub fn new(
        name: impl Into<String>,
        lhs: Pattern,
        rhs: Pattern,
        rate: f64,
        delta_e: f64,
        sigs: &Signatures,
    ) -> Result<Rule, SiteGraphError> {
        let name = name.into();
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(SiteGraphError::BadRule { rule: name, msg: format!("rate {rate} must be positive") });
        }
        lhs.validate(sigs)?;
        rhs.validate(sigs)?;
        let actions = diff(&lhs, &rhs, sigs).map_err(|msg| SiteGraphError::BadRule { rule: name.clone(), msg })?;
        Ok(Rule { name, lhs, rhs, actions, rate, delta_e, reverse_of: None })
    }

    /// The rule `rhs -> lhs` with the given rate and opposite energy
    /// difference.
    pub fn reversed(&self, name: impl Into<String>, rate: f64, sigs: &Signatures) -> Result<Rule, SiteGraphError> {
        Rule::new(name, self.rhs.clone(), self.lhs.clone(), rate, -self.delta_e, sigs)
    }

    pub fn preserved(&self) -> usize {
        preserved_prefix(&self.lhs, &self.rhs)
    }
}

fn preserved_prefix(lhs: &Pattern, rhs: &Pattern) -> usize {
    lhs.agents
        .iter()
        .zip(&rhs.agents)
        .take_while(|(a, b)| a.kind == b.kind)
        .count()
}

fn diff(lhs: &Pattern, rhs: &Pattern, sigs: &Signatures) -> Result<Vec<Action>, String> {
    let keep = preserved_prefix(lhs, rhs);
    let created_slot = |r: usize| if r < keep { r } else { lhs.len() + (r - keep) };
    let mut actions = Vec::new();

    // Unbind every lhs bond that does not survive unchanged.
    for (a, pa) in lhs.agents.iter().enumerate() {
        for (s, sp) in pa.sites.iter().enumerate() {
            let s = s as SiteIndex;
            let LinkTest::To { slot: b, site: t } = sp.link else {
                if a < keep && matches!(sp.link, LinkTest::Any | LinkTest::Bound) {
                    let after = rhs.agents[a].sites[s as usize].link;
                    if after != LinkTest::Any && after != sp.link {
                        return Err(format!(
                            "slot {a} site {s}: an unconstrained or wildcard-bound site cannot change binding"
                        ));
                    }
                }
                continue;
            };
            if (a, s) > (b, t) {
                continue;
            }
            let unchanged = |x: usize, y: SiteIndex| {
                let after = rhs.agents[x].sites[y as usize].link;
                after == LinkTest::Any || after == lhs.agents[x].sites[y as usize].link
            };
            if !(a < keep && b < keep && unchanged(a, s) && unchanged(b, t)) {
                actions.push(Action::Unbind(SlotSite { slot: a, site: s }, SlotSite { slot: b, site: t }));
            }
        }
    }
    for slot in keep..lhs.len() {
        actions.push(Action::Delete(slot));
    }
    for r in keep..rhs.len() {
        let pa = &rhs.agents[r];
        let sig = sigs.get(pa.kind);
        let mut states = Vec::with_capacity(pa.sites.len());
        for (s, sp) in pa.sites.iter().enumerate() {
            let domain = &sig.sites[s].states;
            states.push(match (&sp.state, domain.is_empty()) {
                (_, true) => None,
                (StateTest::Any, false) => Some(0),
                (test, false) => Some(test.single().ok_or_else(|| {
                    format!("created slot {r} site {s} needs a single internal state")
                })?),
            });
            match sp.link {
                LinkTest::Free | LinkTest::Any | LinkTest::To { .. } => {}
                LinkTest::Bound => {
                    return Err(format!("created slot {r} site {s} cannot be bound to an unspecified partner"))
                }
            }
        }
        actions.push(Action::Create { kind: pa.kind, states });
    }
    for (a, pa) in rhs.agents.iter().enumerate() {
        for (s, sp) in pa.sites.iter().enumerate() {
            let s = s as SiteIndex;
            if let LinkTest::To { slot: b, site: t } = sp.link {
                if (a, s) > (b, t) {
                    continue;
                }
                let existed = a < keep && b < keep && lhs.agents[a].sites[s as usize].link == sp.link;
                if !existed {
                    actions.push(Action::Bind(
                        SlotSite { slot: created_slot(a), site: s },
                        SlotSite { slot: created_slot(b), site: t },
                    ));
                }
            }
        }
    }
    for a in 0..keep {
        for (s, (before, after)) in lhs.agents[a].sites.iter().zip(&rhs.agents[a].sites).enumerate() {
            match &after.state {
                StateTest::Any => {}
                t if *t == before.state => {}
                t => match t.single() {
                    Some(v) => actions.push(Action::SetState(SlotSite { slot: a, site: s as SiteIndex }, v)),
                    None => return Err(format!("slot {a} site {s}: a state set cannot be written")),
                },
            }
        }
    }
    Ok(actions)
}

/// Applies `rule` at `emb`. Created agents are appended; deleted agents are
/// removed with all their bonds and the survivors renumbered.
pub fn apply_rule(rule: &Rule, emb: &Embedding, g: &SiteGraph, sigs: &Signatures) -> Result<SiteGraph, SiteGraphError> {
    let mut out = g.clone();
    let mut slots: Vec<usize> = emb.0.clone();
    let mut doomed = Vec::new();
    let fail = |msg: String| SiteGraphError::ActionFailed { rule: rule.name.clone(), msg };
    for action in &rule.actions {
        match action {
            Action::Unbind(a, b) => {
                let (ea, eb) = (Endpoint::new(slots[a.slot], a.site), Endpoint::new(slots[b.slot], b.site));
                out.unbind(ea, eb).map_err(|e| fail(e.to_string()))?;
            }
            Action::Delete(slot) => doomed.push(slots[*slot]),
            Action::Create { kind, states } => {
                let id = out.add_agent(sigs, *kind);
                for (site, st) in out.agents[id].sites.iter_mut().zip(states) {
                    site.state = *st;
                }
                slots.push(id);
            }
            Action::Bind(a, b) => {
                let (ea, eb) = (Endpoint::new(slots[a.slot], a.site), Endpoint::new(slots[b.slot], b.site));
                out.bind(ea, eb).map_err(|e| fail(e.to_string()))?;
            }
            Action::SetState(a, v) => out.set_state(Endpoint::new(slots[a.slot], a.site), *v),
        }
    }
    out.remove_agents(&doomed);
    debug_assert!(out.validate(sigs).is_ok(), "rule {} broke graph validity", rule.name);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// Propensity of a rule is its rate times its number of embeddings.
    #[default]
    EmbeddingWeighted,
    /// Propensity of a rule is its rate whenever it has an embedding.
    UnitRate,
}

impl std::str::FromStr for RateMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "embedding_weighted" | "embedding-weighted" | "weighted" => Ok(RateMode::EmbeddingWeighted),
            "unit_rate" | "unit-rate" | "unit" => Ok(RateMode::UnitRate),
            _ => Err(format!("unknown rate mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub rule: usize,
    pub embedding: Embedding,
    pub successor: SiteGraph,
    pub key: CanonicalKey,
    pub rate: f64,
}

/// One entry per `(rule, embedding)`, in rule order then embedding order. In
/// unit-rate mode only the first embedding of each rule is kept.
pub fn enumerate_transitions(
    g: &SiteGraph,
    rules: &[Rule],
    sigs: &Signatures,
    mode: RateMode,
) -> Result<Vec<Transition>, SiteGraphError> {
    let mut out = Vec::new();
    for (r, rule) in rules.iter().enumerate() {
        let mut embs = find_embeddings(&rule.lhs, g);
        if mode == RateMode::UnitRate {
            embs.truncate(1);
        }
        for embedding in embs {
            let successor = apply_rule(rule, &embedding, g, sigs)?;
            let key = canonical_form(&successor);
            out.push(Transition { rule: r, embedding, successor, key, rate: rule.rate });
        }
    }
    Ok(out)
}
