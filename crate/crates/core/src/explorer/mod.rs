//! Bounded breadth-first exploration of the component of the initial state.
//!
//! States whose non-dummy index count exceeds the bound are dropped
//! together with every edge touching them, so the truncated chain keeps
//! symmetric support.

mod analysis;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::hash::Hash;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use analysis::{
    check_equilibrium, forward_region, omega_census, omega_census_forward, partition_sum, tail_bound, CensusRow, CheckReport, EquilibriumReport, OmegaCensus,
    PartitionReport, PartitionVerdict, WitnessReport, WitnessStep, SOUNDNESS_NOTE,
};

use crate::ctmc::{CtmcError, Edge, RateGraph, StateId};
use crate::pcp::{is_success, oracle_transitions, AbstractState, Encoding, EncodingParams, Mode, PcpError, PcpInstance};
use crate::sitegraph::{canonical_form, enumerate_transitions, print_graph, CanonicalKey, RateMode, SiteGraph, SiteGraphError};

/// Default limit on the number of explored states.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("state cap {cap} reached with {frontier} states still queued")]
    StateCap { cap: usize, frontier: usize, partial: Box<TruncatedChain> },
    #[error(transparent)]
    Engine(#[from] SiteGraphError),
    #[error(transparent)]
    Pcp(#[from] PcpError),
    #[error(transparent)]
    Ctmc(#[from] CtmcError),
    #[error("state {0} does not decode as an encoding state")]
    Undecodable(String),
}

/// One labelled move out of a state.
#[derive(Debug, Clone)]
pub struct Step<S> {
    pub label: String,
    pub target: S,
    pub rate: f64,
}

/// Anything that can enumerate the moves of a CTMC from an initial state.
pub trait TransitionSource: Sync {
    type State: Clone + Send + Sync;
    type Key: Clone + Eq + Hash + Send + Sync;

    fn initial(&self) -> Self::State;
    fn key(&self, s: &Self::State) -> Self::Key;
    fn steps(&self, s: &Self::State) -> Result<Vec<Step<Self::State>>, ExploreError>;
    /// Human-readable state name, unique per key.
    fn describe(&self, s: &Self::State) -> String;

    /// Non-dummy index count; the exploration bound applies to it.
    fn n_value(&self, _s: &Self::State) -> usize {
        0
    }

    fn is_success(&self, _s: &Self::State) -> bool {
        false
    }

    /// `B` with an empty chain away from the dummy index.
    fn is_anomaly(&self, _s: &Self::State) -> bool {
        false
    }
}

fn anomalous(s: &AbstractState) -> bool {
    s.mode == Mode::B && s.pos > 0 && s.chain.is_empty()
}

/// Moves computed by the site-graph engine on a compiled encoding.
pub struct EncodingSource<'a> {
    pub encoding: &'a Encoding,
    pub rate_mode: RateMode,
}

#[derive(Debug, Clone)]
pub struct EncodedState {
    pub graph: SiteGraph,
    pub key: CanonicalKey,
}

impl<'a> EncodingSource<'a> {
    pub fn new(encoding: &'a Encoding) -> Self {
        EncodingSource { encoding, rate_mode: RateMode::EmbeddingWeighted }
    }
}

impl TransitionSource for EncodingSource<'_> {
    type State = EncodedState;
    type Key = CanonicalKey;

    fn initial(&self) -> EncodedState {
        let graph = self.encoding.initial.clone();
        EncodedState { key: canonical_form(&graph), graph }
    }

    fn key(&self, s: &EncodedState) -> CanonicalKey {
        s.key.clone()
    }

    fn n_value(&self, s: &EncodedState) -> usize {
        self.encoding.n_value(&s.graph)
    }

    fn steps(&self, s: &EncodedState) -> Result<Vec<Step<EncodedState>>, ExploreError> {
        let m = &self.encoding.model;
        Ok(enumerate_transitions(&s.graph, &m.rules, &m.signatures, self.rate_mode)?
            .into_iter()
            .map(|t| Step {
                label: m.rules[t.rule].name.clone(),
                target: EncodedState { graph: t.successor, key: t.key },
                rate: t.rate,
            })
            .collect())
    }

    fn describe(&self, s: &EncodedState) -> String {
        match self.encoding.decode(&s.graph) {
            Some(a) => a.describe(&self.encoding.instance),
            None => print_graph(&self.encoding.model.signatures, &s.graph),
        }
    }

    fn is_success(&self, s: &EncodedState) -> bool {
        self.encoding.decode(&s.graph).is_some_and(|a| is_success(&a))
    }

    fn is_anomaly(&self, s: &EncodedState) -> bool {
        self.encoding.decode(&s.graph).is_some_and(|a| anomalous(&a))
    }
}

/// Moves computed directly on words and index lists.
pub struct OracleSource<'a> {
    pub instance: &'a PcpInstance,
    pub params: EncodingParams,
    pub extended: bool,
}

impl TransitionSource for OracleSource<'_> {
    type State = AbstractState;
    type Key = AbstractState;

    fn initial(&self) -> AbstractState {
        AbstractState::initial()
    }

    fn key(&self, s: &AbstractState) -> AbstractState {
        s.clone()
    }

    fn n_value(&self, s: &AbstractState) -> usize {
        s.n_value()
    }

    fn steps(&self, s: &AbstractState) -> Result<Vec<Step<AbstractState>>, ExploreError> {
        Ok(oracle_transitions(self.instance, &self.params, self.extended, s)?
            .into_iter()
            .map(|t| Step { label: t.role.to_string(), target: t.successor, rate: t.rate })
            .collect())
    }

    fn describe(&self, s: &AbstractState) -> String {
        s.describe(self.instance)
    }

    fn is_success(&self, s: &AbstractState) -> bool {
        is_success(s)
    }

    fn is_anomaly(&self, s: &AbstractState) -> bool {
        anomalous(s)
    }
}

/// The explored part of the initial component.
#[derive(Debug, Clone)]
pub struct TruncatedChain {
    pub bound: usize,
    /// Aggregated rates; state labels are the sources' descriptions.
    pub graph: RateGraph,
    pub n_values: Vec<usize>,
    /// Rule names behind every directed edge, sorted.
    pub edge_rules: BTreeMap<Edge, Vec<String>>,
    pub successes: Vec<StateId>,
    pub anomalies: Vec<StateId>,
    /// Distinct states beyond the bound adjacent to explored ones.
    pub frontier: usize,
    /// False when exploration stopped at the state cap.
    pub complete: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainStateJson {
    pub id: StateId,
    pub label: String,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainEdgeJson {
    pub from: StateId,
    pub to: StateId,
    pub rate: f64,
    pub delta_e: f64,
    pub rules: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainJson {
    pub bound: usize,
    pub complete: bool,
    pub frontier: usize,
    pub num_states: usize,
    pub num_edges: usize,
    pub states: Vec<ChainStateJson>,
    pub edges: Vec<ChainEdgeJson>,
    pub successes: Vec<StateId>,
    pub anomalies: Vec<StateId>,
}

impl TruncatedChain {
    pub fn num_states(&self) -> usize {
        self.graph.num_states()
    }

    pub fn to_json(&self) -> ChainJson {
        let states = (0..self.num_states())
            .map(|id| ChainStateJson { id, label: self.graph.label(id).to_string(), n: self.n_values[id] })
            .collect();
        let edges = self
            .graph
            .edges()
            .map(|((from, to), rate)| ChainEdgeJson {
                from,
                to,
                rate,
                delta_e: self.graph.edge_delta_e(from, to).unwrap_or(f64::NAN),
                rules: self.edge_rules.get(&(from, to)).cloned().unwrap_or_default(),
            })
            .collect();
        ChainJson {
            bound: self.bound,
            complete: self.complete,
            frontier: self.frontier,
            num_states: self.num_states(),
            num_edges: self.graph.num_edges(),
            states,
            edges,
            successes: self.successes.clone(),
            anomalies: self.anomalies.clone(),
        }
    }

    /// Graphviz rendering; each edge is labelled with its rules and `ΔE`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph chain {\n");
        for (id, label) in self.graph.labels().iter().enumerate() {
            let shape = if self.successes.contains(&id) { "doublecircle" } else { "ellipse" };
            let _ = writeln!(out, "  {id} [label={label:?}, shape={shape}];");
        }
        for ((i, j), _) in self.graph.edges() {
            let de = self.graph.edge_delta_e(i, j).unwrap_or(f64::NAN);
            let rules = self.edge_rules.get(&(i, j)).map(|r| r.join(",")).unwrap_or_default();
            let _ = writeln!(out, "  {i} -> {j} [label=\"{rules} dE={de:.4}\"];");
        }
        out.push_str("}\n");
        out
    }

    /// `(from, to, rule)` triples over state descriptions, sorted; equal for
    /// isomorphic chains regardless of state numbering.
    pub fn labelled_edges(&self) -> Vec<(String, String, String)> {
        let mut out: Vec<_> = self
            .edge_rules
            .iter()
            .flat_map(|(&(i, j), rules)| {
                rules.iter().map(move |r| (self.graph.label(i).to_string(), self.graph.label(j).to_string(), r.clone()))
            })
            .collect();
        out.sort();
        out
    }
}

/// Explores every state reachable from the initial one through states with
/// at most `bound` non-dummy indices. State ids follow breadth-first
/// discovery order; `parallel` expands each layer on the rayon pool without
/// changing the result.
pub fn explore<T: TransitionSource>(
    source: &T,
    bound: usize,
    state_cap: usize,
    parallel: bool,
) -> Result<TruncatedChain, ExploreError> {
    let init = source.initial();
    let mut index: HashMap<T::Key, StateId> = HashMap::new();
    let mut states: Vec<T::State> = Vec::new();
    let mut graph = RateGraph::new(Vec::new());
    let mut n_values = Vec::new();
    let mut edge_rules: BTreeMap<Edge, Vec<String>> = BTreeMap::new();
    let mut beyond: HashMap<T::Key, ()> = HashMap::new();

    index.insert(source.key(&init), 0);
    graph.add_state(source.describe(&init));
    n_values.push(source.n_value(&init));
    states.push(init);

    let mut layer: Vec<StateId> = vec![0];
    let mut complete = true;
    while !layer.is_empty() {
        let expand = |&id: &StateId| source.steps(&states[id]);
        let results: Vec<Result<Vec<Step<T::State>>, ExploreError>> = if parallel {
            layer.par_iter().map(expand).collect()
        } else {
            layer.iter().map(expand).collect()
        };
        let mut next = Vec::new();
        let mut expanded = 0;
        for (&from, steps) in layer.iter().zip(results) {
            expanded += 1;
            for step in steps? {
                let key = source.key(&step.target);
                let to = match index.get(&key) {
                    Some(&to) => to,
                    None => {
                        if source.n_value(&step.target) > bound {
                            beyond.insert(key, ());
                            continue;
                        }
                        if states.len() >= state_cap {
                            complete = false;
                            continue;
                        }
                        let to = states.len();
                        index.insert(key, to);
                        graph.add_state(source.describe(&step.target));
                        n_values.push(source.n_value(&step.target));
                        states.push(step.target);
                        next.push(to);
                        to
                    }
                };
                if to == from {
                    continue;
                }
                graph.add_rate(from, to, step.rate)?;
                edge_rules.entry((from, to)).or_default().push(step.label);
            }
        }
        debug_assert_eq!(expanded, layer.len());
        layer = next;
        if !complete {
            break;
        }
    }
    for rules in edge_rules.values_mut() {
        rules.sort();
    }
    let successes = (0..states.len()).filter(|&i| source.is_success(&states[i])).collect();
    let anomalies = (0..states.len()).filter(|&i| source.is_anomaly(&states[i])).collect();
    let chain = TruncatedChain { bound, graph, n_values, edge_rules, successes, anomalies, frontier: beyond.len(), complete };
    if complete {
        Ok(chain)
    } else {
        let frontier = layer.len();
        Err(ExploreError::StateCap { cap: state_cap, frontier, partial: Box::new(chain) })
    }
}

#[cfg(test)]
mod tests;
