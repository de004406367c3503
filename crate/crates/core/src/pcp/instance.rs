use serde::{Deserialize, Serialize};

use super::PcpError;

/// A Post correspondence instance: pairs `(u_i, v_i)` of non-empty words.
/// Pair indices are 1-based throughout, as in index sequences and logs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcpInstance {
    alphabet: Vec<char>,
    /// Words as symbol indices into `alphabet`.
    pairs: Vec<(Vec<usize>, Vec<usize>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcpInstanceJson {
    pub alphabet: Vec<String>,
    pub pairs: Vec<(String, String)>,
}

impl PcpInstance {
    pub fn new(alphabet: &[char], pairs: &[(&str, &str)]) -> Result<Self, PcpError> {
        let json = PcpInstanceJson {
            alphabet: alphabet.iter().map(|c| c.to_string()).collect(),
            pairs: pairs.iter().map(|(u, v)| (u.to_string(), v.to_string())).collect(),
        };
        Self::from_json(&json)
    }

    /// Instance whose alphabet is the set of symbols used, in order of first
    /// appearance.
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Result<Self, PcpError> {
        let mut alphabet = Vec::new();
        for (u, v) in pairs {
            for c in u.chars().chain(v.chars()) {
                if !alphabet.contains(&c) {
                    alphabet.push(c);
                }
            }
        }
        Self::new(&alphabet, pairs)
    }

    pub fn from_json(json: &PcpInstanceJson) -> Result<Self, PcpError> {
        let mut alphabet = Vec::new();
        for s in &json.alphabet {
            let mut chars = s.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(PcpError::InvalidInstance(format!("symbol {s:?} is not a single character")));
            };
            if !c.is_ascii_alphanumeric() {
                return Err(PcpError::InvalidInstance(format!("symbol {c:?} must be an ASCII letter or digit")));
            }
            if alphabet.contains(&c) {
                return Err(PcpError::InvalidInstance(format!("symbol {c:?} listed twice")));
            }
            alphabet.push(c);
        }
        if alphabet.is_empty() {
            return Err(PcpError::InvalidInstance("alphabet is empty".into()));
        }
        if json.pairs.is_empty() {
            return Err(PcpError::InvalidInstance("instance has no pairs".into()));
        }
        let word = |w: &str, i: usize| -> Result<Vec<usize>, PcpError> {
            if w.is_empty() {
                return Err(PcpError::InvalidInstance(format!("pair {i} has an empty word")));
            }
            w.chars()
                .map(|c| {
                    alphabet.iter().position(|&a| a == c).ok_or_else(|| {
                        PcpError::InvalidInstance(format!("pair {i} uses symbol {c:?} outside the alphabet"))
                    })
                })
                .collect()
        };
        let pairs = json
            .pairs
            .iter()
            .enumerate()
            .map(|(k, (u, v))| Ok((word(u, k + 1)?, word(v, k + 1)?)))
            .collect::<Result<_, PcpError>>()?;
        Ok(PcpInstance { alphabet, pairs })
    }

    pub fn from_json_str(s: &str) -> Result<Self, PcpError> {
        let json: PcpInstanceJson = serde_json::from_str(s).map_err(|e| PcpError::Json(e.to_string()))?;
        Self::from_json(&json)
    }

    pub fn to_json(&self) -> PcpInstanceJson {
        PcpInstanceJson {
            alphabet: self.alphabet.iter().map(|c| c.to_string()).collect(),
            pairs: self.pairs.iter().map(|(u, v)| (self.spell(u), self.spell(v))).collect(),
        }
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    /// Number of pairs, `|X|`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `u_i` for 1-based `i`.
    pub fn top(&self, i: usize) -> &[usize] {
        &self.pairs[i - 1].0
    }

    /// `v_i` for 1-based `i`.
    pub fn bottom(&self, i: usize) -> &[usize] {
        &self.pairs[i - 1].1
    }

    pub fn spell(&self, word: &[usize]) -> String {
        word.iter().map(|&s| self.alphabet[s]).collect()
    }

    pub fn top_concat(&self, seq: &[usize]) -> Vec<usize> {
        seq.iter().flat_map(|&i| self.top(i).iter().copied()).collect()
    }

    pub fn bottom_concat(&self, seq: &[usize]) -> Vec<usize> {
        seq.iter().flat_map(|&i| self.bottom(i).iter().copied()).collect()
    }

    pub fn is_solution(&self, seq: &[usize]) -> bool {
        !seq.is_empty()
            && seq.iter().all(|&i| (1..=self.len()).contains(&i))
            && self.top_concat(seq) == self.bottom_concat(seq)
    }
}

/// Energy scheme of the encoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingParams {
    /// Energy quantum per non-dummy index.
    pub epsilon: f64,
    /// Energy difference of the restart (second switch) rules.
    pub e_switch: f64,
    /// Forward rate of every rule pair.
    #[serde(default = "default_base_rate")]
    pub base_rate: f64,
}

fn default_base_rate() -> f64 {
    1.0
}

impl Default for EncodingParams {
    fn default() -> Self {
        EncodingParams { epsilon: 1.5, e_switch: 1.0, base_rate: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamWarning {
    /// `e_switch = -epsilon`: restart rules become consistent with the
    /// index-count energy, so no cycle can violate the cycle condition.
    DegenerateSwitch,
    /// `epsilon <= ln |X|`: the partition-function tail bound diverges.
    NoTailBound { epsilon: f64, ln_pairs: f64 },
}

impl std::fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamWarning::DegenerateSwitch => f.write_str("e_switch = -epsilon: no cycle can violate the cycle condition"),
            ParamWarning::NoTailBound { epsilon, ln_pairs } => {
                write!(f, "epsilon {epsilon} <= ln |X| = {ln_pairs:.4}: no finite tail bound")
            }
        }
    }
}

impl EncodingParams {
    pub fn from_json_str(s: &str) -> Result<Self, PcpError> {
        serde_json::from_str(s).map_err(|e| PcpError::Json(e.to_string()))
    }

    pub fn validate(&self, x: &PcpInstance) -> Result<Vec<ParamWarning>, PcpError> {
        if !self.epsilon.is_finite() || !self.e_switch.is_finite() {
            return Err(PcpError::InvalidParams("epsilon and e_switch must be finite".into()));
        }
        if !(self.base_rate > 0.0 && self.base_rate.is_finite()) {
            return Err(PcpError::InvalidParams("base_rate must be positive and finite".into()));
        }
        let mut warnings = Vec::new();
        if (self.e_switch + self.epsilon).abs() <= 1e-12 {
            warnings.push(ParamWarning::DegenerateSwitch);
        }
        let ln_pairs = (x.len() as f64).ln();
        if self.epsilon <= ln_pairs {
            warnings.push(ParamWarning::NoTailBound { epsilon: self.epsilon, ln_pairs });
        }
        Ok(warnings)
    }
}
