use std::fmt::Write as _;

use serde::Serialize;

use super::{explore, EncodingSource, ExploreError, TruncatedChain};
use crate::ctmc::{solve_energy, CycleWitness, EnergySolution, StateId};
use crate::pcp::{compile, EncodingParams, PcpInstance, PcpInstanceJson, RuleKind, RuleRole};

pub const SOUNDNESS_NOTE: &str = "A violation found in the truncated chain is a violation of the full chain. \
Absence of a violation only covers cycles through states within the bound; the bounded check stands in \
for an undecidable question and says nothing beyond the bound.";

#[derive(Debug, Clone, Serialize)]
pub struct WitnessStep {
    pub from: String,
    pub to: String,
    pub rules: Vec<String>,
    pub delta_e: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub energy_sum: f64,
    /// Whether some step is a forward restart rule.
    pub traverses_restart: bool,
    pub steps: Vec<WitnessStep>,
    #[serde(skip)]
    pub cycle: CycleWitness,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    /// `"equilibrium"` or `"violation"`.
    pub verdict: String,
    pub num_states: usize,
    pub num_edges: usize,
    /// Energies with the initial state at 0, when no violation was found.
    pub energy: Option<Vec<f64>>,
    /// `max |E(x) - n(x) * epsilon - c|` for the best constant `c`.
    pub max_deviation_from_n_epsilon: Option<f64>,
    pub witness: Option<WitnessReport>,
    /// States reachable from the initial one without a reverse restart move.
    pub forward_region_states: usize,
    /// The deviation above restricted to the forward region.
    pub max_deviation_forward_region: Option<f64>,
    pub success_states: Vec<String>,
    /// Checking states with an empty chain away from the dummy index.
    pub anomalies: Vec<String>,
    pub soundness_note: &'static str,
}

impl EquilibriumReport {
    pub fn is_violation(&self) -> bool {
        self.witness.is_some()
    }
}

fn is_restart(rule: &str) -> Option<bool> {
    RuleRole::parse(rule).and_then(|r| matches!(r.kind, RuleKind::Restart(_)).then_some(!r.reverse))
}

/// Energy solve on the truncated chain. A witness is oriented so that restart
/// rules run forwards and rotated to start at the initial state when it lies
/// on the cycle.
pub fn check_equilibrium(
    t: &TruncatedChain,
    epsilon: Option<f64>,
    tol: f64,
) -> Result<EquilibriumReport, ExploreError> {
    let label = |s: StateId| t.graph.label(s).to_string();
    let mut report = EquilibriumReport {
        verdict: String::new(),
        num_states: t.graph.num_states(),
        num_edges: t.graph.num_edges(),
        energy: None,
        max_deviation_from_n_epsilon: None,
        witness: None,
        forward_region_states: 0,
        max_deviation_forward_region: None,
        success_states: t.successes.iter().map(|&s| label(s)).collect(),
        anomalies: t.anomalies.iter().map(|&s| label(s)).collect(),
        soundness_note: SOUNDNESS_NOTE,
    };
    let region = forward_region(t);
    report.forward_region_states = region.iter().filter(|&&r| r).count();
    match solve_energy(&t.graph, &[(0, 0.0)], tol)? {
        EnergySolution::Energy(e) => {
            report.verdict = "equilibrium".into();
            if let Some(eps) = epsilon {
                let d: Vec<f64> = e.energy.iter().zip(&t.n_values).map(|(&en, &n)| en - n as f64 * eps).collect();
                report.max_deviation_from_n_epsilon = Some(half_range(d.iter().copied()));
                let inside = d.iter().zip(&region).filter(|(_, &r)| r).map(|(&v, _)| v);
                report.max_deviation_forward_region = Some(half_range(inside));
            }
            report.energy = Some(e.energy);
        }
        EnergySolution::Violation(w) => {
            report.verdict = "violation".into();
            report.witness = Some(orient_witness(t, w)?);
        }
    }
    Ok(report)
}

fn half_range(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        0.0
    } else {
        (hi - lo) / 2.0
    }
}

/// Marks the states reachable from the initial state along edges that carry
/// at least one rule other than a reverse restart.
pub fn forward_region(t: &TruncatedChain) -> Vec<bool> {
    let n = t.graph.num_states();
    let mut seen = vec![false; n];
    if n == 0 {
        return seen;
    }
    seen[0] = true;
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        for j in t.graph.neighbours(i) {
            let usable = t.edge_rules.get(&(i, j)).into_iter().flatten().any(|r| is_restart(r) != Some(false));
            if usable && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

fn orient_witness(t: &TruncatedChain, w: CycleWitness) -> Result<WitnessReport, ExploreError> {
    let restart_dir = |cycle: &CycleWitness| -> (bool, bool) {
        let mut fwd = false;
        let mut bwd = false;
        for e in &cycle.path {
            for r in t.edge_rules.get(e).into_iter().flatten() {
                match is_restart(r) {
                    Some(true) => fwd = true,
                    Some(false) => bwd = true,
                    None => {}
                }
            }
        }
        (fwd, bwd)
    };
    let mut cycle = w;
    let (fwd, bwd) = restart_dir(&cycle);
    if bwd && !fwd {
        cycle = cycle.reversed();
    }
    if let Some(start) = cycle.path.iter().position(|e| e.0 == 0) {
        cycle.path.rotate_left(start);
    }
    cycle.energy_sum = t.graph.path_delta_e(&cycle.path)?;
    let steps = cycle
        .path
        .iter()
        .map(|&(i, j)| {
            Ok(WitnessStep {
                from: t.graph.label(i).to_string(),
                to: t.graph.label(j).to_string(),
                rules: t.edge_rules.get(&(i, j)).cloned().unwrap_or_default(),
                delta_e: t.graph.edge_delta_e(i, j)?,
            })
        })
        .collect::<Result<Vec<_>, ExploreError>>()?;
    let traverses_restart = restart_dir(&cycle).0;
    Ok(WitnessReport { energy_sum: cycle.energy_sum, traverses_restart, steps, cycle })
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusRow {
    pub n: usize,
    pub count: usize,
    /// `(n + 1) * |X|^n`.
    pub bound: f64,
    pub exceeds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaCensus {
    pub rows: Vec<CensusRow>,
    pub any_exceeds: bool,
}

impl OmegaCensus {
    pub fn count(&self, n: usize) -> usize {
        self.rows.get(n).map_or(0, |r| r.count)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,count,bound,exceeds\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.n, r.count, r.bound, r.exceeds);
        }
        out
    }
}

/// Explored states per non-dummy index count, against `(n + 1) |X|^n`.
pub fn omega_census(t: &TruncatedChain, num_pairs: usize) -> OmegaCensus {
    census_of(t, num_pairs, |_| true)
}

/// The census restricted to [`forward_region`].
pub fn omega_census_forward(t: &TruncatedChain, num_pairs: usize) -> OmegaCensus {
    let region = forward_region(t);
    census_of(t, num_pairs, |s| region[s])
}

fn census_of(t: &TruncatedChain, num_pairs: usize, keep: impl Fn(StateId) -> bool) -> OmegaCensus {
    let top = t.n_values.iter().copied().max().unwrap_or(0).max(t.bound);
    let mut counts = vec![0usize; top + 1];
    for (s, &n) in t.n_values.iter().enumerate() {
        if keep(s) {
            counts[n] += 1;
        }
    }
    let rows: Vec<CensusRow> = counts
        .into_iter()
        .enumerate()
        .map(|(n, count)| {
            let bound = (n as f64 + 1.0) * (num_pairs as f64).powi(n as i32);
            CensusRow { n, count, bound, exceeds: count as f64 > bound }
        })
        .collect();
    let any_exceeds = rows.iter().any(|r| r.exceeds);
    OmegaCensus { rows, any_exceeds }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionVerdict {
    Converges,
    DivergenceSuspected,
    ViolationFound,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionReport {
    pub epsilon: f64,
    /// `S_k = sum_{n <= k} |Omega_n| e^{-n epsilon}` for `k = 0..=N`.
    pub partial_sums: Vec<f64>,
    /// `sum_{n > N} (n + 1) |X|^n e^{-n epsilon}`; `None` when infinite.
    pub tail_bound: Option<f64>,
    pub verdict: PartitionVerdict,
}

/// `sum_{n > N} (n + 1) q^n` in closed form, `None` for `q >= 1`.
pub fn tail_bound(q: f64, bound: usize) -> Option<f64> {
    if q >= 1.0 {
        return None;
    }
    let n = bound as f64;
    let t = ((n + 2.0) * q.powf(n + 1.0) - (n + 1.0) * q.powf(n + 2.0)) / (1.0 - q).powi(2);
    Some(t.max(0.0))
}

pub fn partition_sum(census: &OmegaCensus, bound: usize, epsilon: f64, num_pairs: usize, violation: bool) -> PartitionReport {
    let mut partial_sums = Vec::with_capacity(bound + 1);
    let mut s = 0.0;
    for n in 0..=bound {
        s += census.count(n) as f64 * (-(n as f64) * epsilon).exp();
        partial_sums.push(s);
    }
    let q = num_pairs as f64 * (-epsilon).exp();
    let tail = tail_bound(q, bound);
    let verdict = if violation {
        PartitionVerdict::ViolationFound
    } else if tail.is_some() {
        PartitionVerdict::Converges
    } else {
        PartitionVerdict::DivergenceSuspected
    };
    PartitionReport { epsilon, partial_sums, tail_bound: tail, verdict }
}

/// Everything `check` reports for one instance.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub instance: PcpInstanceJson,
    pub params: EncodingParams,
    pub bound: usize,
    pub frontier: usize,
    pub equilibrium: EquilibriumReport,
    pub census: OmegaCensus,
    pub census_forward_region: OmegaCensus,
    pub partition: PartitionReport,
}

impl CheckReport {
    /// Compiles the extended encoding, explores it to `bound` and runs the
    /// equilibrium, census and partition analyses.
    pub fn run(
        x: &PcpInstance,
        params: &EncodingParams,
        bound: usize,
        state_cap: usize,
        parallel: bool,
        tol: f64,
    ) -> Result<(CheckReport, TruncatedChain), ExploreError> {
        let enc = compile(x, params, true)?;
        let t = explore(&EncodingSource::new(&enc), bound, state_cap, parallel)?;
        let equilibrium = check_equilibrium(&t, Some(params.epsilon), tol)?;
        let census = omega_census(&t, x.len());
        let census_forward_region = omega_census_forward(&t, x.len());
        let partition = partition_sum(&census, bound, params.epsilon, x.len(), equilibrium.is_violation());
        let report = CheckReport {
            instance: x.to_json(),
            params: *params,
            bound,
            frontier: t.frontier,
            equilibrium,
            census,
            census_forward_region,
            partition,
        };
        Ok((report, t))
    }
}
