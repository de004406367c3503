//! Finite continuous-time Markov chains with symmetric support: energy
//! differences, the cycle-consistency (Wegscheider) solve, Boltzmann
//! distributions and detailed-balance verification.
//!
//! Sign convention: for an edge `(i, j)` the energy difference is
//! `ΔE(i, j) = E(j) - E(i) = ln(q_ji / q_ij)`, so lower energy means more
//! probable at equilibrium.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tolerance on cycle energy sums.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

pub type StateId = usize;
pub type Edge = (StateId, StateId);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CtmcError {
    #[error("state {0} is not part of the graph")]
    UnknownState(StateId),
    #[error("self-loop on state {0}")]
    SelfLoop(StateId),
    #[error("rate {rate} on edge ({from}, {to}) is not strictly positive and finite")]
    InvalidRate { from: StateId, to: StateId, rate: f64 },
    #[error("edge ({0}, {1}) is missing")]
    MissingEdge(StateId, StateId),
    #[error("path is not contiguous at position {0}")]
    NonContiguousPath(usize),
    #[error("support is not symmetric: edge ({0}, {1}) has no reverse")]
    AsymmetricSupport(StateId, StateId),
    #[error("states {0} and {1} pin the same connected component")]
    PinConflict(StateId, StateId),
    #[error("distribution has {got} states, graph has {expected}")]
    StateMismatch { expected: usize, got: usize },
    #[error("duplicate state label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown state label {0:?}")]
    UnknownLabel(String),
    #[error("malformed rate graph json: {0}")]
    Json(String),
}

/// Sparse transition graph with strictly positive rates.
///
/// Parallel transitions between the same pair of states are aggregated by
/// [`RateGraph::add_rate`]; the stored rate is their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct RateGraph {
    labels: Vec<String>,
    edges: BTreeMap<Edge, f64>,
    adjacency: Vec<BTreeSet<StateId>>,
}

impl RateGraph {
    pub fn new(labels: Vec<String>) -> Self {
        let adjacency = vec![BTreeSet::new(); labels.len()];
        RateGraph { labels, edges: BTreeMap::new(), adjacency }
    }

    /// Graph with `n` states labelled `s0, s1, ...`.
    pub fn with_states(n: usize) -> Self {
        Self::new((0..n).map(|i| format!("s{i}")).collect())
    }

    pub fn add_state(&mut self, label: impl Into<String>) -> StateId {
        self.labels.push(label.into());
        self.adjacency.push(BTreeSet::new());
        self.labels.len() - 1
    }

    /// Adds `rate` to the rate of `from -> to`.
    pub fn add_rate(&mut self, from: StateId, to: StateId, rate: f64) -> Result<(), CtmcError> {
        for s in [from, to] {
            if s >= self.labels.len() {
                return Err(CtmcError::UnknownState(s));
            }
        }
        if from == to {
            return Err(CtmcError::SelfLoop(from));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(CtmcError::InvalidRate { from, to, rate });
        }
        *self.edges.entry((from, to)).or_insert(0.0) += rate;
        self.adjacency[from].insert(to);
        self.adjacency[to].insert(from);
        Ok(())
    }

    /// Overwrites the rate of an existing edge.
    pub fn set_rate(&mut self, from: StateId, to: StateId, rate: f64) -> Result<(), CtmcError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(CtmcError::InvalidRate { from, to, rate });
        }
        match self.edges.get_mut(&(from, to)) {
            Some(r) => {
                *r = rate;
                Ok(())
            }
            None => Err(CtmcError::MissingEdge(from, to)),
        }
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, s: StateId) -> &str {
        &self.labels[s]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rate(&self, from: StateId, to: StateId) -> Option<f64> {
        self.edges.get(&(from, to)).copied()
    }

    /// Directed edges in `(from, to)` lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.edges.iter().map(|(&e, &r)| (e, r))
    }

    /// Neighbours in either direction, ascending.
    pub fn neighbours(&self, s: StateId) -> impl Iterator<Item = StateId> + '_ {
        self.adjacency[s].iter().copied()
    }

    /// First edge (in iteration order) whose reverse is absent.
    pub fn check_symmetric_support(&self) -> Option<Edge> {
        self.edges
            .keys()
            .find(|&&(i, j)| !self.edges.contains_key(&(j, i)))
            .copied()
    }

    /// `ΔE(i, j) = ln(q_ji / q_ij)`.
    pub fn edge_delta_e(&self, i: StateId, j: StateId) -> Result<f64, CtmcError> {
        let fwd = self.rate(i, j).ok_or(CtmcError::MissingEdge(i, j))?;
        let bwd = self.rate(j, i).ok_or(CtmcError::MissingEdge(j, i))?;
        Ok(bwd.ln() - fwd.ln())
    }

    /// Sum of `ΔE` along a contiguous path.
    pub fn path_delta_e(&self, path: &[Edge]) -> Result<f64, CtmcError> {
        let mut sum = 0.0;
        for (k, &(i, j)) in path.iter().enumerate() {
            if k > 0 && path[k - 1].1 != i {
                return Err(CtmcError::NonContiguousPath(k));
            }
            sum += self.edge_delta_e(i, j)?;
        }
        Ok(sum)
    }

    pub fn to_json(&self) -> RateGraphJson {
        RateGraphJson {
            states: self.labels.clone(),
            edges: self
                .edges()
                .map(|((i, j), rate)| EdgeJson {
                    from: self.labels[i].clone(),
                    to: self.labels[j].clone(),
                    rate,
                })
                .collect(),
        }
    }

    pub fn from_json(json: &RateGraphJson) -> Result<Self, CtmcError> {
        let mut index = HashMap::new();
        for (i, l) in json.states.iter().enumerate() {
            if index.insert(l.as_str(), i).is_some() {
                return Err(CtmcError::DuplicateLabel(l.clone()));
            }
        }
        let lookup = |l: &str| index.get(l).copied().ok_or_else(|| CtmcError::UnknownLabel(l.into()));
        let mut g = RateGraph::new(json.states.clone());
        for e in &json.edges {
            g.add_rate(lookup(&e.from)?, lookup(&e.to)?, e.rate)?;
        }
        Ok(g)
    }

    pub fn from_json_str(s: &str) -> Result<Self, CtmcError> {
        let json: RateGraphJson = serde_json::from_str(s).map_err(|e| CtmcError::Json(e.to_string()))?;
        Self::from_json(&json)
    }

    /// Graphviz rendering; each edge is labelled with its rate and, when the
    /// reverse edge exists, its `ΔE`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph ctmc {\n");
        for (i, l) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "  {i} [label={:?}];", l);
        }
        for ((i, j), rate) in self.edges() {
            match self.edge_delta_e(i, j) {
                Ok(de) => {
                    let _ = writeln!(out, "  {i} -> {j} [label=\"q={rate:.6} dE={de:.6}\"];");
                }
                Err(_) => {
                    let _ = writeln!(out, "  {i} -> {j} [label=\"q={rate:.6}\"];");
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateGraphJson {
    pub states: Vec<String>,
    pub edges: Vec<EdgeJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub from: String,
    pub to: String,
    pub rate: f64,
}

/// A solution of `E(i) - E(j) = ln(q_ij / q_ji)` on every edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyAssignment {
    pub energy: Vec<f64>,
    /// Component index of every state.
    pub component: Vec<usize>,
    /// Reference state of every component (the pinned one, or the BFS root).
    pub reference: Vec<StateId>,
    /// Spanning-forest edges as `(parent, child)`.
    pub tree_edges: Vec<Edge>,
}

impl EnergyAssignment {
    pub fn num_components(&self) -> usize {
        self.reference.len()
    }
}

/// A cycle whose energy differences do not sum to zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleWitness {
    pub path: Vec<Edge>,
    pub energy_sum: f64,
}

impl CycleWitness {
    pub fn is_cycle(&self) -> bool {
        match (self.path.first(), self.path.last()) {
            (Some(first), Some(last)) => {
                last.1 == first.0 && self.path.windows(2).all(|w| w[0].1 == w[1].0)
            }
            _ => false,
        }
    }

    /// Same cycle traversed in the opposite direction.
    pub fn reversed(&self) -> CycleWitness {
        CycleWitness {
            path: self.path.iter().rev().map(|&(i, j)| (j, i)).collect(),
            energy_sum: -self.energy_sum,
        }
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        self.path.contains(&e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EnergySolution {
    Energy(EnergyAssignment),
    Violation(CycleWitness),
}

impl EnergySolution {
    pub fn energy(&self) -> Option<&EnergyAssignment> {
        match self {
            EnergySolution::Energy(e) => Some(e),
            EnergySolution::Violation(_) => None,
        }
    }

    pub fn witness(&self) -> Option<&CycleWitness> {
        match self {
            EnergySolution::Violation(w) => Some(w),
            EnergySolution::Energy(_) => None,
        }
    }
}

struct Forest {
    parent: Vec<Option<StateId>>,
    depth: Vec<usize>,
    component: Vec<usize>,
    roots: Vec<StateId>,
    order: Vec<StateId>,
}

fn spanning_forest(g: &RateGraph) -> Forest {
    let n = g.num_states();
    let mut parent = vec![None; n];
    let mut depth = vec![0; n];
    let mut component = vec![usize::MAX; n];
    let mut roots = Vec::new();
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for root in 0..n {
        if component[root] != usize::MAX {
            continue;
        }
        let c = roots.len();
        roots.push(root);
        component[root] = c;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for v in g.neighbours(u) {
                if component[v] == usize::MAX {
                    component[v] = c;
                    parent[v] = Some(u);
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    Forest { parent, depth, component, roots, order }
}

/// Tree edges `(parent, child)` of the breadth-first spanning forest used by
/// [`solve_energy`].
pub fn spanning_forest_edges(g: &RateGraph) -> Vec<Edge> {
    let f = spanning_forest(g);
    f.order
        .iter()
        .filter_map(|&v| f.parent[v].map(|p| (p, v)))
        .collect()
}

/// Solves for an energy function, or returns a cycle violating the
/// cycle condition.
///
/// A breadth-first spanning forest is grown from the lowest-indexed state of
/// every component; energies are accumulated along tree paths and every
/// non-tree edge is then checked. The first fundamental cycle whose energy
/// sum exceeds `tol` in magnitude is returned as the witness, oriented along
/// the non-tree edge `(i, j)` with `i < j`.
///
/// `pins` fixes the energy of at most one state per component; other
/// components are pinned to 0 at their root.
pub fn solve_energy(
    g: &RateGraph,
    pins: &[(StateId, f64)],
    tol: f64,
) -> Result<EnergySolution, CtmcError> {
    if let Some((i, j)) = g.check_symmetric_support() {
        return Err(CtmcError::AsymmetricSupport(i, j));
    }
    let forest = spanning_forest(g);
    let n = g.num_states();

    let mut energy = vec![0.0; n];
    for &v in &forest.order {
        if let Some(p) = forest.parent[v] {
            energy[v] = energy[p] + g.edge_delta_e(p, v)?;
        }
    }

    let mut reference = forest.roots.clone();
    let mut pinned: Vec<Option<StateId>> = vec![None; reference.len()];
    let mut shift = vec![0.0; reference.len()];
    for &(s, value) in pins {
        if s >= n {
            return Err(CtmcError::UnknownState(s));
        }
        let c = forest.component[s];
        if let Some(prev) = pinned[c] {
            return Err(CtmcError::PinConflict(prev, s));
        }
        pinned[c] = Some(s);
        reference[c] = s;
        shift[c] = value - energy[s];
    }
    for (v, e) in energy.iter_mut().enumerate() {
        *e += shift[forest.component[v]];
    }

    let tree: BTreeSet<Edge> = forest
        .order
        .iter()
        .filter_map(|&v| forest.parent[v].map(|p| (p.min(v), p.max(v))))
        .collect();
    for ((i, j), _) in g.edges() {
        if i > j || tree.contains(&(i, j)) {
            continue;
        }
        let residual = energy[i] + g.edge_delta_e(i, j)? - energy[j];
        if residual.abs() > tol {
            let path = fundamental_cycle(&forest, i, j);
            let energy_sum = g.path_delta_e(&path)?;
            if energy_sum.abs() > tol {
                return Ok(EnergySolution::Violation(CycleWitness { path, energy_sum }));
            }
        }
    }

    let tree_edges = forest
        .order
        .iter()
        .filter_map(|&v| forest.parent[v].map(|p| (p, v)))
        .collect();
    Ok(EnergySolution::Energy(EnergyAssignment {
        energy,
        component: forest.component,
        reference,
        tree_edges,
    }))
}

/// Cycle `i -> j`, then up the tree from `j` to the common ancestor and down
/// to `i`.
fn fundamental_cycle(f: &Forest, i: StateId, j: StateId) -> Vec<Edge> {
    let (mut a, mut b) = (j, i);
    let mut up = Vec::new();
    let mut down = Vec::new();
    while a != b {
        if f.depth[a] >= f.depth[b] {
            let p = f.parent[a].expect("non-root above common ancestor");
            up.push((a, p));
            a = p;
        } else {
            let p = f.parent[b].expect("non-root above common ancestor");
            down.push((p, b));
            b = p;
        }
    }
    let mut path = vec![(i, j)];
    path.extend(up);
    path.extend(down.into_iter().rev());
    path
}

/// Boltzmann distribution `p(i) = exp(-E(i)) / Z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    pub p: Vec<f64>,
    /// `Σ exp(-(E(i) - shift))`; the partition function is `z_shifted · exp(-shift)`.
    pub z_shifted: f64,
    /// The minimum energy, subtracted before exponentiation.
    pub shift: f64,
}

impl Distribution {
    /// `Z = Σ exp(-E(i))`. May overflow to infinity for very negative energies.
    pub fn z(&self) -> f64 {
        self.z_shifted * (-self.shift).exp()
    }

    pub fn ln_z(&self) -> f64 {
        self.z_shifted.ln() - self.shift
    }
}

pub fn boltzmann(e: &EnergyAssignment) -> Distribution {
    boltzmann_from_energies(&e.energy)
}

/// Energies are shifted by their minimum so that the largest weight is 1.
pub fn boltzmann_from_energies(energy: &[f64]) -> Distribution {
    let shift = energy.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if shift.is_finite() { shift } else { 0.0 };
    let weights: Vec<f64> = energy.iter().map(|&e| (-(e - shift)).exp()).collect();
    let z_shifted: f64 = weights.iter().sum();
    Distribution {
        p: weights.iter().map(|w| w / z_shifted).collect(),
        z_shifted,
        shift,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub max_residual: f64,
    pub worst_edge: Option<Edge>,
    pub passed: bool,
}

/// Checks `p(i) q_ij = p(j) q_ji` on every edge.
pub fn verify_detailed_balance(
    p: &[f64],
    g: &RateGraph,
    tol: f64,
) -> Result<BalanceReport, CtmcError> {
    if p.len() != g.num_states() {
        return Err(CtmcError::StateMismatch { expected: g.num_states(), got: p.len() });
    }
    let mut max_residual = 0.0;
    let mut worst_edge = None;
    for ((i, j), q_ij) in g.edges() {
        let q_ji = g.rate(j, i).unwrap_or(0.0);
        let r = (p[i] * q_ij - p[j] * q_ji).abs();
        if worst_edge.is_none() || r > max_residual {
            max_residual = r;
            worst_edge = Some((i, j));
        }
    }
    Ok(BalanceReport { max_residual, worst_edge, passed: max_residual <= tol })
}
