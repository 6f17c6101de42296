//! The per-agent decision procedure.
//!
//! Given its (already updated) context belief, an agent walks its ranked
//! practices: practices it cannot perform are skipped, practices the context
//! rules out are discarded as [`DiscardReason::ContextInappropriate`], and the
//! rest are checked against the neighbours' current performances in both
//! directions. The first practice that passes is performed. With probability
//! `epsilon` the agent instead overrides both filters and performs its
//! highest-ranked performable practice.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::context::Belief;
use crate::practice::{DisturbanceMatrix, Endowment, Model, PracticeIx};
use crate::rng::Pcg32;
use crate::topology::AgentIx;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateOrdering {
    /// Descending preference weight, ties by ascending practice id.
    #[default]
    WeightThenId,
}

fn default_epsilon() -> f64 {
    0.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionParams {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub ordering: CandidateOrdering,
}

impl Default for DecisionParams {
    fn default() -> Self {
        DecisionParams {
            epsilon: default_epsilon(),
            ordering: CandidateOrdering::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiscardReason {
    NotPerformable,
    ContextInappropriate,
    DisturbsOther,
    DisturbedByOther,
}

impl DiscardReason {
    pub const ALL: [DiscardReason; 4] = [
        DiscardReason::NotPerformable,
        DiscardReason::ContextInappropriate,
        DiscardReason::DisturbsOther,
        DiscardReason::DisturbedByOther,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DiscardReason::NotPerformable => "NotPerformable",
            DiscardReason::ContextInappropriate => "ContextInappropriate",
            DiscardReason::DisturbsOther => "DisturbsOther",
            DiscardReason::DisturbedByOther => "DisturbedByOther",
        }
    }

    /// True for the two reasons produced by a failed disturbance check.
    pub fn is_disturbance(self) -> bool {
        matches!(
            self,
            DiscardReason::DisturbsOther | DiscardReason::DisturbedByOther
        )
    }
}

impl fmt::Display for DiscardReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiscardReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DiscardReason::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown discard reason `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Perform(PracticeIx),
    Idle,
}

impl Action {
    pub fn practice(self) -> Option<PracticeIx> {
        match self {
            Action::Perform(p) => Some(p),
            Action::Idle => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub action: Action,
    pub override_used: bool,
    pub trace: Vec<(PracticeIx, DiscardReason)>,
}

/// Outcome of checking one practice against the neighbours' performances.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckResult {
    pub disturbs: Vec<(AgentIx, PracticeIx)>,
    pub disturbed_by: Vec<(AgentIx, PracticeIx)>,
}

impl CheckResult {
    pub fn ok(&self) -> bool {
        self.disturbs.is_empty() && self.disturbed_by.is_empty()
    }
}

/// `neighbours` lists only performing neighbours; idle ones have no entry.
pub fn disturbance_check(
    practice: PracticeIx,
    neighbours: &[(AgentIx, PracticeIx)],
    matrix: &DisturbanceMatrix,
) -> CheckResult {
    let mut result = CheckResult::default();
    for &(agent, theirs) in neighbours {
        if matrix.get(practice, theirs) {
            result.disturbs.push((agent, theirs));
        }
        if matrix.get(theirs, practice) {
            result.disturbed_by.push((agent, theirs));
        }
    }
    result
}

/// Static decision-relevant side of an agent: what it can draw on and how it
/// ranks practices.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentProfile {
    pub endowment: Endowment,
    ranking: Vec<PracticeIx>,
}

impl AgentProfile {
    /// `weights` overrides the registry preference weight per practice.
    pub fn new(
        model: &Model,
        endowment: Endowment,
        weights: &BTreeMap<PracticeIx, f64>,
        ordering: CandidateOrdering,
    ) -> Self {
        let weight = |p: PracticeIx| {
            weights
                .get(&p)
                .copied()
                .unwrap_or_else(|| model.practice(p).weight)
        };
        let mut ranking: Vec<PracticeIx> = (0..model.practices().len() as u32)
            .map(PracticeIx)
            .collect();
        match ordering {
            // Index order is id order, so a stable sort on weight alone
            // leaves ties in ascending id.
            CandidateOrdering::WeightThenId => {
                ranking.sort_by(|&a, &b| weight(b).total_cmp(&weight(a)))
            }
        }
        AgentProfile { endowment, ranking }
    }

    /// Every practice, best first.
    pub fn ranking(&self) -> &[PracticeIx] {
        &self.ranking
    }
}

/// Candidates in ranked order, plus the practices filtered out on the way.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CandidateSet {
    pub candidates: Vec<PracticeIx>,
    pub rejected: Vec<(PracticeIx, DiscardReason)>,
}

/// Performable practices that the believed context allows (no filter when
/// the belief is Unknown), in ranked order.
pub fn candidate_set(model: &Model, profile: &AgentProfile, belief: Belief) -> CandidateSet {
    let mut set = CandidateSet::default();
    for &p in profile.ranking() {
        match screen(model, profile, belief, p) {
            None => set.candidates.push(p),
            Some(reason) => set.rejected.push((p, reason)),
        }
    }
    set
}

fn screen(
    model: &Model,
    profile: &AgentProfile,
    belief: Belief,
    p: PracticeIx,
) -> Option<DiscardReason> {
    if !model.performable(&profile.endowment, p) {
        return Some(DiscardReason::NotPerformable);
    }
    match belief.context {
        Some(c) if !model.context(c).is_appropriate(p) => Some(DiscardReason::ContextInappropriate),
        _ => None,
    }
}

/// Decision for a given uniform draw in `[0, 1)`.
///
/// The trace lists, in ranked order, every performable practice examined
/// before the chosen one (all of them when idle). Practices the agent cannot
/// perform are not traced; they would repeat identically every tick.
pub fn decide_with_draw(
    model: &Model,
    profile: &AgentProfile,
    belief: Belief,
    neighbours: &[(AgentIx, PracticeIx)],
    params: &DecisionParams,
    draw: f64,
) -> Decision {
    if draw < params.epsilon {
        let first = profile
            .ranking()
            .iter()
            .copied()
            .find(|&p| model.performable(&profile.endowment, p));
        return match first {
            Some(p) => Decision {
                action: Action::Perform(p),
                override_used: true,
                trace: Vec::new(),
            },
            None => Decision {
                action: Action::Idle,
                override_used: false,
                trace: Vec::new(),
            },
        };
    }

    let mut trace = Vec::new();
    for &p in profile.ranking() {
        match screen(model, profile, belief, p) {
            Some(DiscardReason::NotPerformable) => continue,
            Some(reason) => {
                trace.push((p, reason));
                continue;
            }
            None => {}
        }
        let check = disturbance_check(p, neighbours, model.matrix());
        if check.ok() {
            return Decision {
                action: Action::Perform(p),
                override_used: false,
                trace,
            };
        }
        let reason = if check.disturbs.is_empty() {
            DiscardReason::DisturbedByOther
        } else {
            DiscardReason::DisturbsOther
        };
        trace.push((p, reason));
    }
    Decision {
        action: Action::Idle,
        override_used: false,
        trace,
    }
}

/// Draws exactly one uniform value from `rng` and decides.
pub fn decide(
    model: &Model,
    profile: &AgentProfile,
    belief: Belief,
    neighbours: &[(AgentIx, PracticeIx)],
    params: &DecisionParams,
    rng: &mut Pcg32,
) -> Decision {
    let draw = rng.next_f64();
    decide_with_draw(model, profile, belief, neighbours, params, draw)
}
