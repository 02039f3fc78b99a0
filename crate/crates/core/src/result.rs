use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::state::ActivationState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mbed,
    Fbed,
    Mlbed,
    #[serde(rename = "outdegree")]
    OutDegree,
    Random,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Mbed,
        Algorithm::Fbed,
        Algorithm::Mlbed,
        Algorithm::OutDegree,
        Algorithm::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Mbed => "mbed",
            Algorithm::Fbed => "fbed",
            Algorithm::Mlbed => "mlbed",
            Algorithm::OutDegree => "outdegree",
            Algorithm::Random => "random",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown algorithm `{s}`")))
    }
}

/// A chosen effector set together with the objective value the detector
/// optimised. The meaning of `score` depends on the algorithm: `g_k(S)` for
/// the distance-based detectors, log-likelihood for MLBED, the summed
/// active out-degree for OutDegree and zero for Random.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectorResult {
    pub members: Vec<NodeId>,
    pub budget: usize,
    pub algorithm: Algorithm,
    pub score: f64,
    /// Set when the selected set explains the state with probability zero.
    pub zero_likelihood: bool,
    pub note: Option<String>,
}

impl EffectorResult {
    pub(crate) fn new(mut members: Vec<NodeId>, algorithm: Algorithm, score: f64) -> Self {
        members.sort_unstable();
        EffectorResult {
            budget: members.len(),
            members,
            algorithm,
            score,
            zero_likelihood: false,
            note: None,
        }
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Checks `members ⊆ X1`, distinctness and `|members| = budget`.
    pub fn is_feasible_for(&self, state: &ActivationState) -> bool {
        let mut sorted = self.members.clone();
        sorted.sort_unstable();
        sorted.dedup();
        sorted.len() == self.members.len()
            && self.members.len() == self.budget
            && self.members.iter().all(|&u| state.is_active(u))
    }
}

/// Validates `1 <= budget <= N1`.
pub(crate) fn check_budget(state: &ActivationState, budget: usize) -> Result<()> {
    let n1 = state.active_count();
    if budget == 0 {
        return Err(Error::invalid("budget must be at least 1"));
    }
    if budget > n1 {
        return Err(Error::invalid(format!(
            "budget {budget} exceeds the number of active nodes {n1}"
        )));
    }
    Ok(())
}
