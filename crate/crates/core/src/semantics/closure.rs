use crate::model::{Pha, TAU};

use super::successors::{discrete_successors, SuccessorDistribution};
use super::State;

/// Result of [`weak_closure`].
#[derive(Debug, Clone, PartialEq)]
pub struct Closure {
    /// States reached by τ-chains, the source first.
    pub states: Vec<State>,
    pub distributions: Vec<SuccessorDistribution>,
    /// Some τ-successor beyond the depth bound was not explored.
    pub truncated: bool,
}

/// Default τ-chain depth: enough to walk through every copy of a split mode.
pub fn default_depth(pha: &Pha) -> usize {
    2 * pha.modes.len()
}

/// Successor distributions under `action` of every state reachable from `state` by at
/// most `depth` τ-steps.
pub fn weak_closure(pha: &Pha, state: &State, action: &str, depth: usize) -> Closure {
    let mut states = vec![state.clone()];
    let mut frontier = vec![state.clone()];
    let mut truncated = false;
    for level in 0..=depth {
        let mut next = Vec::new();
        for s in &frontier {
            for d in discrete_successors(pha, s, TAU) {
                for (t, _) in &d.weights {
                    if !states.iter().any(|k| k.approx_eq(t)) && !next.iter().any(|k: &State| k.approx_eq(t)) {
                        next.push(t.clone());
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        if level == depth {
            truncated = true;
            break;
        }
        states.extend(next.iter().cloned());
        frontier = next;
    }
    let distributions = states
        .iter()
        .flat_map(|s| discrete_successors(pha, s, action))
        .collect();
    Closure {
        states,
        distributions,
        truncated,
    }
}
