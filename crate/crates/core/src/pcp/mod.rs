//! Reversible site-graph encoding of Post correspondence instances.
//!
//! A state holds a pointer agent `F` (building) or `B` (checking), a chain of
//! `S` agents spelling a word and a chain of `I` agents logging the indices
//! chosen so far. Both chains start with a dummy agent in state `*`. The
//! pointer's `s` site binds the `x` site of the current last `S`, its `i` site
//! the `x` site of the current `I`.
//!
//! In `F` mode `extend_i` appends `u_i` and logs `i`. `switch` turns `F` into
//! `B` at the last logged index. In `B` mode `consume_i` removes `v_i` from
//! the end of the chain and steps back one index, so the chain empties
//! exactly at the dummy index when the logged sequence is a solution.
//! The extended encoding adds `erase_j`, which forgets the oldest logged
//! index once checking is complete, and `restart_j`, which returns the last
//! remaining index to the initial state.

mod compile;
mod instance;
mod oracle;
mod solver;

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

pub use compile::{compile, Encoding};
pub use instance::{EncodingParams, ParamWarning, PcpInstance, PcpInstanceJson};
pub use oracle::{is_success, oracle_transitions, AbstractState, Mode, OracleTransition};
pub use solver::solve_pcp_bounded;

use crate::sitegraph::{ParseError, REVERSE_SUFFIX};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PcpError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid state {0}")]
    InvalidState(String),
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("generated model does not parse: {0}")]
    Model(#[from] ParseError),
}

/// The rule families of the encoding. Indices are 1-based pair indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    Extend(usize),
    Switch,
    Consume(usize),
    Erase(usize),
    Restart(usize),
}

impl RuleKind {
    /// Energy change of the forward direction.
    pub fn delta_e(self, params: &EncodingParams) -> f64 {
        match self {
            RuleKind::Extend(_) => params.epsilon,
            RuleKind::Switch | RuleKind::Consume(_) => 0.0,
            RuleKind::Erase(_) => -params.epsilon,
            RuleKind::Restart(_) => params.e_switch,
        }
    }

    /// Every rule family for an instance with `n` pairs, in model order.
    pub fn all(n: usize, extended: bool) -> Vec<RuleKind> {
        let mut out: Vec<RuleKind> = (1..=n).map(RuleKind::Extend).collect();
        out.push(RuleKind::Switch);
        out.extend((1..=n).map(RuleKind::Consume));
        if extended {
            out.extend((1..=n).map(RuleKind::Erase));
            out.extend((1..=n).map(RuleKind::Restart));
        }
        out
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleKind::Extend(i) => write!(f, "extend_{i}"),
            RuleKind::Switch => write!(f, "switch"),
            RuleKind::Consume(i) => write!(f, "consume_{i}"),
            RuleKind::Erase(i) => write!(f, "erase_{i}"),
            RuleKind::Restart(i) => write!(f, "restart_{i}"),
        }
    }
}

/// A directed rule: a family and a direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleRole {
    pub kind: RuleKind,
    pub reverse: bool,
}

impl RuleRole {
    pub fn delta_e(self, params: &EncodingParams) -> f64 {
        let d = self.kind.delta_e(params);
        if self.reverse {
            -d
        } else {
            d
        }
    }

    /// `base_rate` forwards, `base_rate * e^dE` backwards.
    pub fn rate(self, params: &EncodingParams) -> f64 {
        if self.reverse {
            params.base_rate * self.kind.delta_e(params).exp()
        } else {
            params.base_rate
        }
    }

    pub fn parse(name: &str) -> Option<RuleRole> {
        let (base, reverse) = match name.strip_suffix(REVERSE_SUFFIX) {
            Some(b) => (b, true),
            None => (name, false),
        };
        let kind = if base == "switch" {
            RuleKind::Switch
        } else {
            let (family, idx) = base.rsplit_once('_')?;
            let i: usize = idx.parse().ok().filter(|&i| i >= 1)?;
            match family {
                "extend" => RuleKind::Extend(i),
                "consume" => RuleKind::Consume(i),
                "erase" => RuleKind::Erase(i),
                "restart" => RuleKind::Restart(i),
                _ => return None,
            }
        };
        Some(RuleRole { kind, reverse })
    }
}

impl fmt::Display for RuleRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if self.reverse {
            f.write_str(REVERSE_SUFFIX)?;
        }
        Ok(())
    }
}

impl Serialize for RuleRole {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
