use std::fmt::Write;

use super::oracle::{AbstractState, Mode};
use super::{EncodingParams, ParamWarning, PcpError, PcpInstance, RuleKind, RuleRole};
use crate::sitegraph::{parse_model, print_model, AgentKind, Endpoint, Model, SiteGraph, SiteIndex};

const KIND_F: AgentKind = 0;
const KIND_B: AgentKind = 1;
const KIND_S: AgentKind = 2;
const KIND_I: AgentKind = 3;
const SITE_S: SiteIndex = 0;
const SITE_I: SiteIndex = 1;
const SITE_L: SiteIndex = 0;
const SITE_R: SiteIndex = 1;
const SITE_X: SiteIndex = 2;

/// A compiled instance: the rule model plus the role of every rule.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub instance: PcpInstance,
    pub params: EncodingParams,
    pub extended: bool,
    pub model: Model,
    /// `roles[r]` is the family and direction of `model.rules[r]`.
    pub roles: Vec<RuleRole>,
    pub initial: SiteGraph,
    pub warnings: Vec<ParamWarning>,
}

/// Builds the encoding of `x`. With `extended`, the erase and restart rules
/// are included.
pub fn compile(x: &PcpInstance, params: &EncodingParams, extended: bool) -> Result<Encoding, PcpError> {
    let warnings = params.validate(x)?;
    let text = model_text(x, params, extended);
    let model = parse_model(&text)?;
    let roles = model
        .rules
        .iter()
        .map(|r| RuleRole::parse(&r.name).expect("generated rule names follow the role scheme"))
        .collect();
    let initial = model.graph("initial").expect("generated model declares the initial state").clone();
    Ok(Encoding { instance: x.clone(), params: *params, extended, model, roles, initial, warnings })
}

fn idx_set(n: usize) -> String {
    (1..=n).map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

/// Created `S` agents spelling `word`: the first bound on `l` to `left`, the
/// last with `x` bound to `x_label` and `r` free.
fn s_chain(x: &PcpInstance, word: &[usize], left: u32, x_label: u32, next: &mut u32) -> String {
    let mut parts = Vec::new();
    let mut l = left;
    for (k, &c) in word.iter().enumerate() {
        let sym = x.alphabet()[c];
        if k + 1 == word.len() {
            parts.push(format!("S(l^{l}, r, x{{{sym}}}^{x_label})"));
        } else {
            let r = *next;
            *next += 1;
            parts.push(format!("S(l^{l}, r^{r}, x{{{sym}}})"));
            l = r;
        }
    }
    parts.join(", ")
}

fn rule_sides(x: &PcpInstance, kind: RuleKind) -> (String, String) {
    let n = x.len();
    let all = idx_set(n);
    let mut next = 10;
    match kind {
        RuleKind::Extend(i) => {
            let chain = s_chain(x, x.top(i), 3, 5, &mut next);
            (
                "S(r, x^1), I(r, x^2), F(s^1, i^2)".into(),
                format!("S(r^3, x), I(r^4, x), F(s^5, i^6), {chain}, I(l^4, r, x{{{i}}}^6)"),
            )
        }
        RuleKind::Switch => (
            format!("S(x^1), I(r, x{{{all}}}^2), F(s^1, i^2)"),
            format!("S(x^1), I(r, x{{{all}}}^2), B(s^1, i^2)"),
        ),
        RuleKind::Consume(i) => {
            let chain = s_chain(x, x.bottom(i), 1, 4, &mut next);
            (
                format!("S(r^1, x), I(r^2, x), I(l^2, x{{{i}}}^3), B(s^4, i^3), {chain}"),
                format!("S(r, x^4), I(r^2, x^3), I(l^2, x{{{i}}}), B(s^4, i^3)"),
            )
        }
        RuleKind::Erase(j) => (
            format!("S(r, x{{*}}^1), I(r^3, x{{*}}^2), I(l^4, x{{{all}}}), B(s^1, i^2), I(l^3, r^4, x{{{j}}})"),
            format!("S(r, x{{*}}^1), I(r^4, x{{*}}^2), I(l^4, x{{{all}}}), B(s^1, i^2)"),
        ),
        RuleKind::Restart(j) => (
            format!("S(r, x{{*}}^1), I(r^3, x{{*}}^2), B(s^1, i^2), I(l^3, r, x{{{j}}})"),
            "S(r, x{*}^1), I(r, x{*}^2), F(s^1, i^2)".into(),
        ),
    }
}

fn model_text(x: &PcpInstance, params: &EncodingParams, extended: bool) -> String {
    let symbols: Vec<String> = x.alphabet().iter().map(|c| c.to_string()).collect();
    let mut out = String::new();
    let _ = writeln!(out, "%agent: F(s, i)");
    let _ = writeln!(out, "%agent: B(s, i)");
    let _ = writeln!(out, "%agent: S(l, r, x{{*,{}}})", symbols.join(","));
    let _ = writeln!(out, "%agent: I(l, r, x{{*,{}}})", idx_set(x.len()));
    let _ = writeln!(out, "%init: initial S(l, r, x{{*}}^1), I(l, r, x{{*}}^2), F(s^1, i^2)");
    for kind in RuleKind::all(x.len(), extended) {
        let (lhs, rhs) = rule_sides(x, kind);
        let fwd = RuleRole { kind, reverse: false };
        let bwd = RuleRole { kind, reverse: true };
        let _ = writeln!(
            out,
            "%rule: {kind} {lhs} -> {rhs} @ {:?}, {:?} dE {:?}",
            fwd.rate(params),
            bwd.rate(params),
            kind.delta_e(params)
        );
    }
    out
}

impl Encoding {
    pub fn model_text(&self) -> String {
        print_model(&self.model)
    }

    /// Number of non-dummy `I` agents.
    pub fn n_value(&self, g: &SiteGraph) -> usize {
        g.agents
            .iter()
            .filter(|a| a.kind == KIND_I && a.sites[SITE_X as usize].state != Some(0))
            .count()
    }

    /// The site graph of an abstract state.
    pub fn realize(&self, s: &AbstractState) -> SiteGraph {
        let sigs = &self.model.signatures;
        let mut g = SiteGraph::new();
        let mut chain_end = g.add_agent(sigs, KIND_S);
        for &c in &s.chain {
            let a = g.add_agent(sigs, KIND_S);
            g.set_state(Endpoint::new(a, SITE_X), c as u16 + 1);
            g.bind(Endpoint::new(chain_end, SITE_R), Endpoint::new(a, SITE_L)).expect("fresh sites");
            chain_end = a;
        }
        let mut log_agents = vec![g.add_agent(sigs, KIND_I)];
        for &i in &s.log {
            let a = g.add_agent(sigs, KIND_I);
            g.set_state(Endpoint::new(a, SITE_X), i as u16);
            let prev = *log_agents.last().expect("dummy present");
            g.bind(Endpoint::new(prev, SITE_R), Endpoint::new(a, SITE_L)).expect("fresh sites");
            log_agents.push(a);
        }
        let ptr = g.add_agent(sigs, if s.mode == Mode::F { KIND_F } else { KIND_B });
        g.bind(Endpoint::new(ptr, SITE_S), Endpoint::new(chain_end, SITE_X)).expect("fresh sites");
        g.bind(Endpoint::new(ptr, SITE_I), Endpoint::new(log_agents[s.pos], SITE_X)).expect("fresh sites");
        g
    }

    /// Reads an abstract state back from a site graph; `None` if the graph
    /// does not have the shape of an encoding state.
    pub fn decode(&self, g: &SiteGraph) -> Option<AbstractState> {
        let mut ptrs = (0..g.len()).filter(|&a| matches!(g.agents[a].kind, KIND_F | KIND_B));
        let ptr = ptrs.next()?;
        if ptrs.next().is_some() {
            return None;
        }
        let mode = if g.agents[ptr].kind == KIND_F { Mode::F } else { Mode::B };
        let state = |a: usize| g.state(Endpoint::new(a, SITE_X));

        let end = g.link(Endpoint::new(ptr, SITE_S)).filter(|e| e.site == SITE_X)?.agent;
        if g.agents[end].kind != KIND_S || g.link(Endpoint::new(end, SITE_R)).is_some() {
            return None;
        }
        let mut chain = Vec::new();
        let mut a = end;
        while let Some(e) = g.link(Endpoint::new(a, SITE_L)) {
            chain.push(state(a)?.checked_sub(1)? as usize);
            a = e.agent;
            if e.site != SITE_R || g.agents[a].kind != KIND_S || chain.len() > g.len() {
                return None;
            }
        }
        if state(a)? != 0 {
            return None;
        }
        chain.reverse();

        let cur = g.link(Endpoint::new(ptr, SITE_I)).filter(|e| e.site == SITE_X)?.agent;
        if g.agents[cur].kind != KIND_I {
            return None;
        }
        let mut a = cur;
        let mut pos = 0;
        while let Some(e) = g.link(Endpoint::new(a, SITE_L)) {
            a = e.agent;
            pos += 1;
            if e.site != SITE_R || g.agents[a].kind != KIND_I || pos > g.len() {
                return None;
            }
        }
        if state(a)? != 0 {
            return None;
        }
        let mut log = Vec::new();
        while let Some(e) = g.link(Endpoint::new(a, SITE_R)) {
            a = e.agent;
            if e.site != SITE_L || g.agents[a].kind != KIND_I || log.len() > g.len() {
                return None;
            }
            let i = state(a)? as usize;
            if i == 0 {
                return None;
            }
            log.push(i);
        }
        if (mode == Mode::F && pos != log.len()) || g.len() != chain.len() + log.len() + 3 {
            return None;
        }
        Some(AbstractState { mode, log, pos, chain })
    }
}
