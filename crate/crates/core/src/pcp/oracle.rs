//! Direct model of the encoding on words and index lists, independent of the
//! site-graph engine.

use std::fmt;

use serde::Serialize;

use super::{EncodingParams, PcpError, PcpInstance, RuleKind, RuleRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Mode {
    F,
    B,
}

/// An encoding state: pointer mode, logged indices, pointer position on the
/// log (`0` is the dummy index) and the word currently on the chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AbstractState {
    pub mode: Mode,
    pub log: Vec<usize>,
    pub pos: usize,
    pub chain: Vec<usize>,
}

impl AbstractState {
    pub fn initial() -> Self {
        AbstractState { mode: Mode::F, log: Vec::new(), pos: 0, chain: Vec::new() }
    }

    /// Number of non-dummy indices.
    pub fn n_value(&self) -> usize {
        self.log.len()
    }

    /// Structural sanity: indices and symbols in range, `pos <= |log|`, and
    /// `F` sits at the end of the log.
    pub fn validate(&self, x: &PcpInstance) -> Result<(), PcpError> {
        let bad = |msg: &str| Err(PcpError::InvalidState(format!("{}: {msg}", self.describe(x))));
        if self.log.iter().any(|&i| i == 0 || i > x.len()) {
            return bad("log index out of range");
        }
        if self.chain.iter().any(|&c| c >= x.alphabet().len()) {
            return Err(PcpError::InvalidState("chain symbol outside the alphabet".into()));
        }
        if self.pos > self.log.len() {
            return bad("position beyond the log");
        }
        if self.mode == Mode::F && self.pos != self.log.len() {
            return bad("F must sit at the last index");
        }
        Ok(())
    }

    pub fn describe(&self, x: &PcpInstance) -> String {
        let log: Vec<String> = self.log.iter().map(|i| i.to_string()).collect();
        match self.mode {
            Mode::F => format!("F[{}]:{}", log.join(","), x.spell(&self.chain)),
            Mode::B => format!("B[{}]@{}:{}", log.join(","), self.pos, x.spell(&self.chain)),
        }
    }
}

impl fmt::Display for AbstractState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}@{}:{:?}", self.mode, self.log, self.pos, self.chain)
    }
}

/// Checking finished: `B` at the dummy index with an empty chain.
pub fn is_success(s: &AbstractState) -> bool {
    s.mode == Mode::B && s.pos == 0 && s.chain.is_empty()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleTransition {
    pub role: RuleRole,
    pub successor: AbstractState,
    pub rate: f64,
}

/// All single-rule moves out of `s`, in model rule order.
pub fn oracle_transitions(
    x: &PcpInstance,
    params: &EncodingParams,
    extended: bool,
    s: &AbstractState,
) -> Result<Vec<OracleTransition>, PcpError> {
    s.validate(x)?;
    let mut out = Vec::new();
    let m = s.log.len();
    let mut push = |kind, reverse, successor| {
        let role = RuleRole { kind, reverse };
        out.push(OracleTransition { role, successor, rate: role.rate(params) });
    };
    for kind in RuleKind::all(x.len(), extended) {
        match (kind, s.mode) {
            (RuleKind::Extend(i), Mode::F) => {
                let mut t = s.clone();
                t.log.push(i);
                t.pos += 1;
                t.chain.extend_from_slice(x.top(i));
                push(kind, false, t);
                if s.log.last() == Some(&i) && s.chain.ends_with(x.top(i)) {
                    let mut t = s.clone();
                    t.log.pop();
                    t.pos -= 1;
                    t.chain.truncate(s.chain.len() - x.top(i).len());
                    push(kind, true, t);
                }
            }
            (RuleKind::Switch, Mode::F) if m > 0 => {
                push(kind, false, AbstractState { mode: Mode::B, ..s.clone() });
            }
            (RuleKind::Switch, Mode::B) if m > 0 && s.pos == m => {
                push(kind, true, AbstractState { mode: Mode::F, ..s.clone() });
            }
            (RuleKind::Consume(i), Mode::B) => {
                let k = s.pos;
                if k >= 1 && s.log[k - 1] == i && s.chain.ends_with(x.bottom(i)) {
                    let mut t = s.clone();
                    t.pos -= 1;
                    t.chain.truncate(s.chain.len() - x.bottom(i).len());
                    push(kind, false, t);
                }
                if k < m && s.log[k] == i {
                    let mut t = s.clone();
                    t.pos += 1;
                    t.chain.extend_from_slice(x.bottom(i));
                    push(kind, true, t);
                }
            }
            (RuleKind::Erase(j), Mode::B) if is_success(s) => {
                if m >= 2 && s.log[0] == j {
                    let mut t = s.clone();
                    t.log.remove(0);
                    push(kind, false, t);
                }
                if m >= 1 {
                    let mut t = s.clone();
                    t.log.insert(0, j);
                    push(kind, true, t);
                }
            }
            (RuleKind::Restart(j), Mode::B) if is_success(s) && s.log == [j] => {
                push(kind, false, AbstractState::initial());
            }
            (RuleKind::Restart(j), Mode::F) if s.log.is_empty() && s.chain.is_empty() => {
                let t = AbstractState { mode: Mode::B, log: vec![j], pos: 0, chain: Vec::new() };
                push(kind, true, t);
            }
            _ => {}
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solvable() -> PcpInstance {
        PcpInstance::from_pairs(&[("aa", "a"), ("ba", "ab"), ("b", "ab")]).unwrap()
    }

    fn walk(x: &PcpInstance, p: &EncodingParams, s: &AbstractState, name: &str) -> AbstractState {
        let role = RuleRole::parse(name).unwrap();
        oracle_transitions(x, p, true, s)
            .unwrap()
            .into_iter()
            .find(|t| t.role == role)
            .unwrap_or_else(|| panic!("{name} not enabled in {}", s.describe(x)))
            .successor
    }

    #[test]
    fn counts_near_start() {
        let x = solvable();
        let p = EncodingParams::default();
        let s0 = AbstractState::initial();
        assert_eq!(oracle_transitions(&x, &p, false, &s0).unwrap().len(), 3);
        assert_eq!(oracle_transitions(&x, &p, true, &s0).unwrap().len(), 6);
        let s1 = walk(&x, &p, &s0, "extend_1");
        assert_eq!(s1.describe(&x), "F[1]:aa");
        // Three extensions, the undo, and the switch.
        assert_eq!(oracle_transitions(&x, &p, false, &s1).unwrap().len(), 5);
    }

    #[test]
    fn solution_run_reaches_success_and_restarts() {
        let x = solvable();
        let p = EncodingParams::default();
        let mut s = AbstractState::initial();
        for name in ["extend_1", "extend_2", "extend_3", "switch", "consume_3", "consume_2", "consume_1"] {
            s = walk(&x, &p, &s, name);
        }
        assert!(is_success(&s));
        assert_eq!(s.describe(&x), "B[1,2,3]@0:");
        s = walk(&x, &p, &s, "erase_1");
        s = walk(&x, &p, &s, "erase_2");
        assert_eq!(s.log, [3]);
        s = walk(&x, &p, &s, "restart_3");
        assert_eq!(s, AbstractState::initial());
    }

    #[test]
    fn moves_are_reversible() {
        let x = solvable();
        let p = EncodingParams { epsilon: 1.5, e_switch: 0.7, base_rate: 1.0 };
        let mut frontier = vec![AbstractState::initial()];
        let mut seen = std::collections::HashSet::new();
        while let Some(s) = frontier.pop() {
            if !seen.insert(s.clone()) || s.n_value() > 3 {
                continue;
            }
            for t in oracle_transitions(&x, &p, true, &s).unwrap() {
                let back = RuleRole { reverse: !t.role.reverse, ..t.role };
                let undo: Vec<_> = oracle_transitions(&x, &p, true, &t.successor)
                    .unwrap()
                    .into_iter()
                    .filter(|u| u.role == back && u.successor == s)
                    .collect();
                assert_eq!(undo.len(), 1, "{} --{}--> {}", s.describe(&x), t.role, t.successor.describe(&x));
                assert!((t.rate * undo[0].rate - p.base_rate.powi(2) * t.role.kind.delta_e(&p).exp()).abs() < 1e-9);
                frontier.push(t.successor);
            }
        }
        assert!(seen.len() > 20);
    }

    #[test]
    fn checked_state_only_erases() {
        let x = solvable();
        let p = EncodingParams::default();
        let done = AbstractState { mode: Mode::B, log: vec![1, 2, 3], pos: 0, chain: vec![] };
        assert!(is_success(&done));
        let roles: Vec<String> =
            oracle_transitions(&x, &p, true, &done).unwrap().iter().map(|t| t.role.to_string()).collect();
        assert!(roles.contains(&"erase_1".to_string()));
        assert!(!roles.iter().any(|r| r.starts_with("consume") && !r.ends_with(".rev")));
        let fresh = AbstractState { mode: Mode::B, log: vec![1], pos: 1, chain: x.top(1).to_vec() };
        assert!(!is_success(&fresh));
        assert!(!is_success(&AbstractState { mode: Mode::F, ..done.clone() }));
    }

    #[test]
    fn rejects_invalid_states() {
        let x = solvable();
        let p = EncodingParams::default();
        let bad_index = AbstractState { mode: Mode::B, log: vec![4], pos: 0, chain: vec![] };
        assert!(oracle_transitions(&x, &p, false, &bad_index).is_err());
        let bad_pos = AbstractState { mode: Mode::F, log: vec![1], pos: 0, chain: vec![] };
        assert!(oracle_transitions(&x, &p, false, &bad_pos).is_err());
    }
}
