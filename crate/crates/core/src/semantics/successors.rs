use std::fmt;

use crate::geometry::fmt_num;
use crate::model::{star_substitute, Pha, StarValuation};

use super::State;

/// `μ_a^⟨d_i⟩`: the distribution over successor states obtained from one distribution
/// and one choice of post element per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessorDistribution {
    pub source: State,
    pub action: String,
    /// Index of the originating distribution in `pha.transitions`.
    pub transition: usize,
    /// The chosen post element of every outcome, in outcome order.
    pub combination: Vec<StarValuation>,
    /// Successor states with their aggregated probabilities.
    pub weights: Vec<(State, f64)>,
}

impl SuccessorDistribution {
    pub fn mass(&self) -> f64 {
        self.weights.iter().map(|(_, p)| p).sum()
    }

    pub fn weight_of(&self, state: &State) -> f64 {
        self.weights
            .iter()
            .filter(|(s, _)| s.approx_eq(state))
            .map(|(_, p)| p)
            .sum()
    }
}

impl fmt::Display for SuccessorDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .weights
            .iter()
            .map(|(s, p)| format!("{s} ↦ {}", fmt_num(*p)))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// All successor distributions of `state` under `action`.
///
/// Every enabled distribution contributes one result per combination of post elements.
/// An outcome whose landing valuation violates the postcondition or the target invariant
/// contributes no weight; combinations left with no weight at all are dropped.
pub fn discrete_successors(pha: &Pha, state: &State, action: &str) -> Vec<SuccessorDistribution> {
    let mut out = Vec::new();
    for (k, t) in pha.transitions_from(&state.mode, action) {
        if !t.pre.holds(&state.valuation) {
            continue;
        }
        let sizes: Vec<usize> = t.outcomes.iter().map(|o| o.post.len()).collect();
        if sizes.contains(&0) {
            continue;
        }
        let mut idx = vec![0usize; sizes.len()];
        loop {
            let mut weights: Vec<(State, f64)> = Vec::new();
            let mut combination = Vec::with_capacity(idx.len());
            for (o, &i) in t.outcomes.iter().zip(&idx) {
                let d = &o.post[i];
                combination.push(d.clone());
                let Ok(landing) = star_substitute(d, &state.valuation) else {
                    continue;
                };
                let admissible = t.pos_for(&o.target).holds(&landing)
                    && pha
                        .mode(&o.target)
                        .is_some_and(|m| m.invariant.holds(&landing));
                if !admissible {
                    continue;
                }
                let next = State::new(o.target.clone(), landing);
                match weights.iter_mut().find(|(s, _)| *s == next) {
                    Some((_, p)) => *p += o.prob,
                    None => weights.push((next, o.prob)),
                }
            }
            if !weights.is_empty() {
                out.push(SuccessorDistribution {
                    source: state.clone(),
                    action: action.to_string(),
                    transition: k,
                    combination,
                    weights,
                });
            }
            // odometer over the post sets
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < sizes[pos] {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }
    out
}
