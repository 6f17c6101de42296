//! Context interpretation by individual agents and group-level consensus.

use thiserror::Error;

use crate::practice::{ContextIx, Model, PracticeIx};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContextError {
    #[error("observation contains unknown practice index {0}")]
    UnknownPractice(u32),
    #[error("consensus of an empty population is undefined")]
    NoBeliefs,
}

/// An agent's reading of its situation. `context == None` is the Unknown belief.
/// `score` is the match fraction of the inference that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Belief {
    pub context: Option<ContextIx>,
    pub score: f64,
}

impl Belief {
    pub const UNKNOWN: Belief = Belief {
        context: None,
        score: 0.0,
    };

    pub fn new(context: ContextIx, score: f64) -> Self {
        Belief {
            context: Some(context),
            score,
        }
    }
}

impl Default for Belief {
    fn default() -> Self {
        Belief::UNKNOWN
    }
}

/// Scores every context by the fraction of observed performances it deems
/// appropriate and returns the best one. Ties keep `previous` if it is among
/// the maximisers, otherwise the smallest context id wins. An empty
/// observation (or a model without contexts) returns `previous` unchanged.
pub fn infer_context(
    model: &Model,
    observation: &[PracticeIx],
    previous: Belief,
) -> Result<Belief, ContextError> {
    let n_practices = model.practices().len();
    if let Some(bad) = observation.iter().find(|p| p.index() >= n_practices) {
        return Err(ContextError::UnknownPractice(bad.0));
    }
    if observation.is_empty() || model.contexts().is_empty() {
        return Ok(previous);
    }

    // Counts share the denominator, so compare integers, not fractions.
    let mut best_count = 0usize;
    let mut best: Option<ContextIx> = None;
    let mut previous_count = None;
    for (i, ctx) in model.contexts().iter().enumerate() {
        let c = ContextIx(i as u32);
        let count = observation
            .iter()
            .filter(|&&p| ctx.is_appropriate(p))
            .count();
        if previous.context == Some(c) {
            previous_count = Some(count);
        }
        if best.is_none() || count > best_count {
            best = Some(c);
            best_count = count;
        }
    }

    let winner = match previous_count {
        Some(count) if count == best_count => previous.context,
        _ => best,
    };
    Ok(Belief {
        context: winner,
        score: best_count as f64 / observation.len() as f64,
    })
}

/// Share of agents holding the modal belief (Unknown counts as a value).
pub fn consensus_index(beliefs: &[Belief]) -> Result<f64, ContextError> {
    if beliefs.is_empty() {
        return Err(ContextError::NoBeliefs);
    }
    let mut values: Vec<Option<ContextIx>> = beliefs.iter().map(|b| b.context).collect();
    values.sort_unstable();
    let modal = values
        .chunk_by(|a, b| a == b)
        .map(<[_]>::len)
        .max()
        .unwrap_or(0);
    Ok(modal as f64 / beliefs.len() as f64)
}

/// First tick `t` such that every value in `series[t..t + window]` is at
/// least `threshold`. NaN entries never qualify.
///
/// Expects `threshold` in `(0, 1]` and `window >= 1`.
pub fn time_to_consensus(series: &[f64], threshold: f64, window: usize) -> Option<usize> {
    debug_assert!(window >= 1);
    let mut run = 0usize;
    for (t, &v) in series.iter().enumerate() {
        if v >= threshold {
            run += 1;
            if run >= window {
                return Some(t + 1 - window);
            }
        } else {
            run = 0;
        }
    }
    None
}
