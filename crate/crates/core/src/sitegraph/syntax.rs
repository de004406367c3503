//! Line-oriented text format for models.
//!
//! ```text
//! # comment
//! %agent: S(l, r, x{*,a,b})
//! %init: start S(l, r, x{*}^1), F(s^1)
//! %rule: grow F(s^1), S(x^1) -> F(s^2), S(x^1, r^3), S(l^3, x{a}^2) @ 1.0, 4.48 dE 1.5
//! ```
//!
//! Inside an agent, a site is written `name` followed by optional
//! modifiers: an internal state `_v` or `{v}` (a set `{v,w}` in patterns),
//! and a link `^n` (bond label, used exactly twice per expression), `^_`
//! (bound to anything) or `^?` (link unconstrained). In a pattern a bare
//! site name means the site is free, and unmentioned sites are
//! unconstrained. In an `%init` graph, unmentioned sites are free and at the
//! first state of their domain.
//!
//! A rule with two rates defines a reversible pair: `name` with the first
//! rate and `name.rev` with the second. `dE` defaults to `ln(k_back/k_fwd)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::graph::{Endpoint, SiteGraph};
use super::pattern::{LinkTest, Pattern, StateTest};
use super::rule::Rule;
use super::signature::{AgentSignature, SiteIndex, Signatures, StateIndex};
use super::SiteGraphError;

pub const REVERSE_SUFFIX: &str = ".rev";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("unknown site {site:?} of agent {agent:?}")]
    UnknownSite { agent: String, site: String },
    #[error("unknown state {state:?} of site {site:?}")]
    UnknownState { site: String, state: String },
    #[error("bond label {0} is used only once")]
    DanglingBond(u32),
    #[error("bond label {0} is used more than twice")]
    OverusedBond(u32),
    #[error("site {0:?} is repeated")]
    RepeatedSite(String),
    #[error("{0}")]
    Syntax(String),
    #[error("{0}")]
    Semantic(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

/// Parsed model: signatures, named graphs and rules.
#[derive(Debug, Clone, Default)]
pub struct Model {
    pub signatures: Signatures,
    pub graphs: Vec<(String, SiteGraph)>,
    pub rules: Vec<Rule>,
}

impl Model {
    pub fn graph(&self, name: &str) -> Option<&SiteGraph> {
        self.graphs.iter().find(|(n, _)| n == name).map(|(_, g)| g)
    }

    pub fn rule_index(&self, name: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.name == name)
    }

    /// Appends a reversible pair and links the two rules.
    pub fn push_pair(&mut self, fwd: Rule, bwd: Rule) -> (usize, usize) {
        let i = self.rules.len();
        self.rules.push(Rule { reverse_of: Some(i + 1), ..fwd });
        self.rules.push(Rule { reverse_of: Some(i), ..bwd });
        (i, i + 1)
    }
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col0: usize,
}

impl Cursor {
    fn new(src: &str, line: usize, col0: usize) -> Self {
        Cursor { chars: src.chars().collect(), pos: 0, line, col0 }
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { line: self.line, col: self.col0 + self.pos + 1, kind }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(ParseErrorKind::Syntax(format!("expected {c:?}"))))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(ParseErrorKind::Syntax("expected a name".into())));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    /// State names: alphanumerics and `*`; no whitespace inside.
    fn state_name(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        while self.pos < self.chars.len()
            && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '*')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(ParseErrorKind::Syntax("expected a state name".into())));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum RawLink {
    Free,
    Label(u32),
    Wildcard,
    Any,
}

#[derive(Debug)]
struct RawSite {
    name: String,
    states: Option<Vec<String>>,
    link: RawLink,
    col: usize,
}

#[derive(Debug)]
struct RawAgent {
    name: String,
    sites: Vec<RawSite>,
    col: usize,
}

fn parse_raw_expr(c: &mut Cursor) -> Result<Vec<RawAgent>, ParseError> {
    let mut agents = Vec::new();
    if c.at_end() {
        return Ok(agents);
    }
    loop {
        c.skip_ws();
        let col = c.pos;
        let name = c.ident()?;
        c.expect('(')?;
        let mut sites = Vec::new();
        if !c.eat(')') {
            loop {
                c.skip_ws();
                let col = c.pos;
                let site = c.ident()?;
                let mut states = None;
                let mut link = RawLink::Free;
                let mut seen_link = false;
                loop {
                    match c.chars.get(c.pos) {
                        Some('_') if states.is_none() => {
                            c.pos += 1;
                            states = Some(vec![c.state_name()?]);
                        }
                        Some('{') if states.is_none() => {
                            c.pos += 1;
                            let mut v = vec![];
                            loop {
                                c.skip_ws();
                                v.push(c.state_name()?);
                                if c.eat('}') {
                                    break;
                                }
                                c.expect(',')?;
                            }
                            states = Some(v);
                        }
                        Some('^') if !seen_link => {
                            c.pos += 1;
                            seen_link = true;
                            link = match c.chars.get(c.pos) {
                                Some('_') => {
                                    c.pos += 1;
                                    RawLink::Wildcard
                                }
                                Some('?') => {
                                    c.pos += 1;
                                    RawLink::Any
                                }
                                Some(d) if d.is_ascii_digit() => {
                                    let start = c.pos;
                                    while c.pos < c.chars.len() && c.chars[c.pos].is_ascii_digit() {
                                        c.pos += 1;
                                    }
                                    let s: String = c.chars[start..c.pos].iter().collect();
                                    RawLink::Label(s.parse().map_err(|_| {
                                        c.err(ParseErrorKind::Syntax("bond label too large".into()))
                                    })?)
                                }
                                _ => return Err(c.err(ParseErrorKind::Syntax("expected bond label".into()))),
                            };
                        }
                        _ => break,
                    }
                }
                if !seen_link {
                    link = RawLink::Free;
                }
                sites.push(RawSite { name: site, states, link, col });
                if c.eat(')') {
                    break;
                }
                c.expect(',')?;
            }
        }
        agents.push(RawAgent { name, sites, col });
        if !c.eat(',') {
            break;
        }
    }
    Ok(agents)
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Graph,
    Pattern,
}

/// A mentioned site: (site index, states, link).
type ResolvedSite = (SiteIndex, Option<Vec<StateIndex>>, RawLink);

struct Resolved {
    kinds: Vec<u16>,
    /// Per agent, per mentioned site.
    sites: Vec<Vec<ResolvedSite>>,
    /// Bond label -> the two endpoints.
    bonds: BTreeMap<u32, Vec<(usize, SiteIndex)>>,
}

fn resolve(raw: &[RawAgent], sigs: &Signatures, c: &Cursor, mode: Mode) -> Result<Resolved, ParseError> {
    let at = |col: usize, kind| ParseError { line: c.line, col: c.col0 + col + 1, kind };
    let mut kinds = Vec::new();
    let mut sites = Vec::new();
    let mut bonds: BTreeMap<u32, Vec<(usize, SiteIndex)>> = BTreeMap::new();
    for (a, ra) in raw.iter().enumerate() {
        let kind = sigs.kind(&ra.name).ok_or_else(|| at(ra.col, ParseErrorKind::UnknownAgent(ra.name.clone())))?;
        let sig = sigs.get(kind);
        let mut these = Vec::new();
        for rs in &ra.sites {
            let s = sig.site_index(&rs.name).ok_or_else(|| {
                at(rs.col, ParseErrorKind::UnknownSite { agent: ra.name.clone(), site: rs.name.clone() })
            })?;
            if these.iter().any(|(t, _, _)| *t == s) {
                return Err(at(rs.col, ParseErrorKind::RepeatedSite(rs.name.clone())));
            }
            let states = match &rs.states {
                None => None,
                Some(names) => {
                    if mode == Mode::Graph && names.len() != 1 {
                        return Err(at(rs.col, ParseErrorKind::Semantic("a graph site needs exactly one state".into())));
                    }
                    let mut v = Vec::new();
                    for n in names {
                        v.push(sig.state_index(s, n).ok_or_else(|| {
                            at(rs.col, ParseErrorKind::UnknownState { site: rs.name.clone(), state: n.clone() })
                        })?);
                    }
                    Some(v)
                }
            };
            if mode == Mode::Graph && matches!(rs.link, RawLink::Wildcard | RawLink::Any) {
                return Err(at(rs.col, ParseErrorKind::Semantic("wildcard links are only allowed in patterns".into())));
            }
            if let RawLink::Label(l) = rs.link {
                let ends = bonds.entry(l).or_default();
                if ends.len() == 2 {
                    return Err(at(rs.col, ParseErrorKind::OverusedBond(l)));
                }
                ends.push((a, s));
            }
            these.push((s, states, rs.link.clone()));
        }
        kinds.push(kind);
        sites.push(these);
    }
    for (&l, ends) in &bonds {
        if ends.len() != 2 {
            let (a, _) = ends[0];
            return Err(at(raw[a].col, ParseErrorKind::DanglingBond(l)));
        }
        if ends[0] == ends[1] {
            return Err(at(raw[ends[0].0].col, ParseErrorKind::Semantic("site bonded to itself".into())));
        }
    }
    Ok(Resolved { kinds, sites, bonds })
}

fn build_graph(r: &Resolved, sigs: &Signatures) -> SiteGraph {
    let mut g = SiteGraph::new();
    for (a, &kind) in r.kinds.iter().enumerate() {
        let id = g.add_agent(sigs, kind);
        for (s, states, _) in &r.sites[a] {
            if let Some(v) = states {
                g.agents[id].sites[*s as usize].state = Some(v[0]);
            }
        }
    }
    for ends in r.bonds.values() {
        g.bind(Endpoint::new(ends[0].0, ends[0].1), Endpoint::new(ends[1].0, ends[1].1))
            .expect("bond labels resolved to distinct free endpoints");
    }
    g
}

fn build_pattern(r: &Resolved, sigs: &Signatures) -> Pattern {
    let mut p = Pattern::new();
    for (a, &kind) in r.kinds.iter().enumerate() {
        let slot = p.add_agent(sigs, kind);
        for (s, states, link) in &r.sites[a] {
            if let Some(v) = states {
                p.set_state(slot, *s, StateTest::one_of(v.clone()));
            }
            p.site_mut(slot, *s).link = match link {
                RawLink::Free => LinkTest::Free,
                RawLink::Wildcard => LinkTest::Bound,
                RawLink::Any => LinkTest::Any,
                RawLink::Label(_) => LinkTest::Any,
            };
        }
    }
    for ends in r.bonds.values() {
        p.bind(ends[0].0, ends[0].1, ends[1].0, ends[1].1);
    }
    p
}

fn expr_cursor(text: &str, line: usize, col0: usize) -> Cursor {
    Cursor::new(text, line, col0)
}

fn finish<T>(c: &mut Cursor, v: T) -> Result<T, ParseError> {
    if c.at_end() {
        Ok(v)
    } else {
        Err(c.err(ParseErrorKind::Syntax("unexpected trailing input".into())))
    }
}

/// Parses a site-graph expression such as `S(l,r^1,x_a),S(l^1,r,x_b)`.
pub fn parse_graph(sigs: &Signatures, text: &str) -> Result<SiteGraph, ParseError> {
    let mut c = expr_cursor(text, 1, 0);
    let raw = parse_raw_expr(&mut c)?;
    let raw = finish(&mut c, raw)?;
    Ok(build_graph(&resolve(&raw, sigs, &c, Mode::Graph)?, sigs))
}

/// Parses a pattern expression.
pub fn parse_pattern(sigs: &Signatures, text: &str) -> Result<Pattern, ParseError> {
    let mut c = expr_cursor(text, 1, 0);
    let raw = parse_raw_expr(&mut c)?;
    let raw = finish(&mut c, raw)?;
    Ok(build_pattern(&resolve(&raw, sigs, &c, Mode::Pattern)?, sigs))
}

fn parse_agent_decl(c: &mut Cursor) -> Result<AgentSignature, ParseError> {
    let name = c.ident()?;
    let mut sig = AgentSignature::new(name);
    c.expect('(')?;
    if c.eat(')') {
        return Ok(sig);
    }
    loop {
        let site = c.ident()?;
        let mut states = Vec::new();
        if c.chars.get(c.pos) == Some(&'{') {
            c.pos += 1;
            loop {
                c.skip_ws();
                states.push(c.state_name()?);
                if c.eat('}') {
                    break;
                }
                c.expect(',')?;
            }
        }
        sig = sig.site_with_states(site, states);
        if c.eat(')') {
            break;
        }
        c.expect(',')?;
    }
    Ok(sig)
}

fn parse_number(tok: &str, line: usize, col: usize) -> Result<f64, ParseError> {
    tok.parse::<f64>().map_err(|_| ParseError {
        line,
        col,
        kind: ParseErrorKind::Syntax(format!("expected a number, found {tok:?}")),
    })
}

fn sem(line: usize, col: usize, e: SiteGraphError) -> ParseError {
    ParseError { line, col, kind: ParseErrorKind::Semantic(e.to_string()) }
}

/// Parses a whole model.
pub fn parse_model(text: &str) -> Result<Model, ParseError> {
    let mut model = Model::default();
    for (ln, raw_line) in text.lines().enumerate() {
        let line = ln + 1;
        let trimmed = raw_line.trim_start();
        let indent = raw_line.len() - trimmed.len();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((directive, rest)) = trimmed.split_once(':') else {
            return Err(ParseError { line, col: indent + 1, kind: ParseErrorKind::Syntax("expected a %directive:".into()) });
        };
        let rest_col = indent + directive.len() + 1;
        match directive {
            "%agent" => {
                let mut c = Cursor::new(rest, line, rest_col);
                let sig = parse_agent_decl(&mut c)?;
                let sig = finish(&mut c, sig)?;
                model.signatures.add(sig).map_err(|e| sem(line, rest_col + 1, e))?;
            }
            "%init" => {
                let body = rest.trim_start();
                let body_col = rest_col + (rest.len() - body.len());
                let (name, expr) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
                let expr_col = body_col + name.len() + 1;
                let mut c = Cursor::new(expr, line, expr_col);
                let raw = parse_raw_expr(&mut c)?;
                let raw = finish(&mut c, raw)?;
                let g = build_graph(&resolve(&raw, &model.signatures, &c, Mode::Graph)?, &model.signatures);
                model.graphs.push((name.to_string(), g));
            }
            "%rule" => parse_rule_line(&mut model, rest, line, rest_col)?,
            other => {
                return Err(ParseError {
                    line,
                    col: indent + 1,
                    kind: ParseErrorKind::Syntax(format!("unknown directive {other:?}")),
                })
            }
        }
    }
    Ok(model)
}

fn parse_rule_line(model: &mut Model, rest: &str, line: usize, rest_col: usize) -> Result<(), ParseError> {
    let body = rest.trim_start();
    let body_col = rest_col + (rest.len() - body.len());
    let (name, after_name) = body.split_once(char::is_whitespace).ok_or(ParseError {
        line,
        col: body_col + 1,
        kind: ParseErrorKind::Syntax("expected a rule name and body".into()),
    })?;
    let after_col = body_col + name.len() + 1;
    let arrow = after_name.find("->").ok_or(ParseError {
        line,
        col: after_col + 1,
        kind: ParseErrorKind::Syntax("expected '->'".into()),
    })?;
    let at = after_name.find('@').ok_or(ParseError {
        line,
        col: after_col + 1,
        kind: ParseErrorKind::Syntax("expected '@'".into()),
    })?;
    if at < arrow {
        return Err(ParseError { line, col: after_col + at + 1, kind: ParseErrorKind::Syntax("'@' before '->'".into()) });
    }
    let sigs = &model.signatures;
    let pattern_at = |text: &str, col: usize| -> Result<Pattern, ParseError> {
        let mut c = Cursor::new(text, line, col);
        let raw = parse_raw_expr(&mut c)?;
        let raw = finish(&mut c, raw)?;
        Ok(build_pattern(&resolve(&raw, sigs, &c, Mode::Pattern)?, sigs))
    };
    let lhs = pattern_at(&after_name[..arrow], after_col)?;
    let rhs = pattern_at(&after_name[arrow + 2..at], after_col + arrow + 2)?;

    let rates_col = after_col + at + 1;
    let rates_text = &after_name[at + 1..];
    let (rates_part, de_part) = match rates_text.find("dE") {
        Some(i) => (&rates_text[..i], Some(&rates_text[i + 2..])),
        None => (rates_text, None),
    };
    let rates: Vec<f64> = rates_part
        .split(',')
        .map(|t| parse_number(t.trim(), line, rates_col))
        .collect::<Result<_, _>>()?;
    let delta_e = de_part.map(|t| parse_number(t.trim(), line, rates_col)).transpose()?;
    match rates.as_slice() {
        [kf] => {
            let r = Rule::new(name, lhs, rhs, *kf, delta_e.unwrap_or(0.0), sigs).map_err(|e| sem(line, body_col + 1, e))?;
            model.rules.push(r);
        }
        [kf, kb] => {
            let de = delta_e.unwrap_or_else(|| kb.ln() - kf.ln());
            let fwd = Rule::new(name, lhs, rhs, *kf, de, sigs).map_err(|e| sem(line, body_col + 1, e))?;
            let bwd = fwd
                .reversed(format!("{name}{REVERSE_SUFFIX}"), *kb, sigs)
                .map_err(|e| sem(line, body_col + 1, e))?;
            model.push_pair(fwd, bwd);
        }
        _ => {
            return Err(ParseError {
                line,
                col: rates_col,
                kind: ParseErrorKind::Syntax("expected one or two rates".into()),
            })
        }
    }
    Ok(())
}

fn write_states(out: &mut String, sig: &AgentSignature, site: usize, states: &[StateIndex]) {
    out.push('{');
    for (k, &v) in states.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&sig.sites[site].states[v as usize]);
    }
    out.push('}');
}

/// Prints a graph; every site is written out.
pub fn print_graph(sigs: &Signatures, g: &SiteGraph) -> String {
    let mut labels: BTreeMap<(usize, SiteIndex), u32> = BTreeMap::new();
    for (next, (a, b)) in (1..).zip(g.bonds()) {
        labels.insert((a.agent, a.site), next);
        labels.insert((b.agent, b.site), next);
    }
    let mut out = String::new();
    for (a, ag) in g.agents.iter().enumerate() {
        if a > 0 {
            out.push_str(", ");
        }
        let sig = sigs.get(ag.kind);
        out.push_str(&sig.name);
        out.push('(');
        for (s, site) in ag.sites.iter().enumerate() {
            if s > 0 {
                out.push(',');
            }
            out.push_str(&sig.sites[s].name);
            if let Some(v) = site.state {
                write_states(&mut out, sig, s, &[v]);
            }
            if let Some(l) = labels.get(&(a, s as SiteIndex)) {
                let _ = write!(out, "^{l}");
            }
        }
        out.push(')');
    }
    out
}

/// Prints a pattern; unconstrained sites are omitted.
pub fn print_pattern(sigs: &Signatures, p: &Pattern) -> String {
    let mut labels: BTreeMap<(usize, SiteIndex), u32> = BTreeMap::new();
    let mut next = 1;
    for (a, pa) in p.agents.iter().enumerate() {
        for (s, sp) in pa.sites.iter().enumerate() {
            if let LinkTest::To { slot, site } = sp.link {
                if !labels.contains_key(&(a, s as SiteIndex)) {
                    labels.insert((a, s as SiteIndex), next);
                    labels.insert((slot, site), next);
                    next += 1;
                }
            }
        }
    }
    let mut out = String::new();
    for (a, pa) in p.agents.iter().enumerate() {
        if a > 0 {
            out.push_str(", ");
        }
        let sig = sigs.get(pa.kind);
        out.push_str(&sig.name);
        out.push('(');
        let mut first = true;
        for (s, sp) in pa.sites.iter().enumerate() {
            if sp.state == StateTest::Any && sp.link == LinkTest::Any {
                continue;
            }
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&sig.sites[s].name);
            if let StateTest::In(v) = &sp.state {
                write_states(&mut out, sig, s, v);
            }
            match sp.link {
                LinkTest::Free => {}
                LinkTest::Bound => out.push_str("^_"),
                LinkTest::Any => out.push_str("^?"),
                LinkTest::To { .. } => {
                    let _ = write!(out, "^{}", labels[&(a, s as SiteIndex)]);
                }
            }
        }
        out.push(')');
    }
    out
}

fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

/// Prints a whole model. Reversible pairs are printed once, under the name
/// of the first rule of the pair.
pub fn print_model(m: &Model) -> String {
    let sigs = &m.signatures;
    let mut out = String::new();
    for sig in sigs.iter() {
        out.push_str("%agent: ");
        out.push_str(&sig.name);
        out.push('(');
        for (s, d) in sig.sites.iter().enumerate() {
            if s > 0 {
                out.push_str(", ");
            }
            out.push_str(&d.name);
            if !d.states.is_empty() {
                let _ = write!(out, "{{{}}}", d.states.join(","));
            }
        }
        out.push_str(")\n");
    }
    for (name, g) in &m.graphs {
        let _ = writeln!(out, "%init: {name} {}", print_graph(sigs, g));
    }
    for (i, r) in m.rules.iter().enumerate() {
        let lhs = print_pattern(sigs, &r.lhs);
        let rhs = print_pattern(sigs, &r.rhs);
        match r.reverse_of {
            Some(j) if j < i => continue,
            Some(j) => {
                let _ = writeln!(
                    out,
                    "%rule: {} {lhs} -> {rhs} @ {}, {} dE {}",
                    r.name,
                    fmt_num(r.rate),
                    fmt_num(m.rules[j].rate),
                    fmt_num(r.delta_e)
                );
            }
            None => {
                let _ = writeln!(out, "%rule: {} {lhs} -> {rhs} @ {} dE {}", r.name, fmt_num(r.rate), fmt_num(r.delta_e));
            }
        }
    }
    out
}
