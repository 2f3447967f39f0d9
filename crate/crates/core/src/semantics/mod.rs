//! Executable semantics: discrete and flow successors, weak τ-closure, trace sampling,
//! and sampling-based checks of the relations produced by the transformations.

use std::fmt;

use crate::model::{Pha, Valuation};

mod check_clock;
mod check_split;
mod checks;
mod closure;
mod flow_step;
mod safety;
mod sample;
mod successors;

pub use check_clock::check_clock_bisim;
pub use check_split::{check_split_sim, SimMode};
pub use checks::{CheckConfig, CheckReport, Counterexample, Verdict};
pub use closure::{default_depth, weak_closure, Closure};
pub use flow_step::{flow_successor, path_horizon, Reach, Trajectory};
pub use safety::{box_reachability, check_safety_bounded, BoxReachability, SafetyEstimate};
pub use sample::{
    sample_trace, sample_trace_from, Choice, Scheduler, Step, Trace, TraceConfig, UniformScheduler,
};
pub use successors::{discrete_successors, SuccessorDistribution};

/// A mode together with a valuation.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub mode: String,
    pub valuation: Valuation,
}

impl State {
    pub fn new(mode: impl Into<String>, valuation: Valuation) -> Self {
        State {
            mode: mode.into(),
            valuation,
        }
    }

    /// The valuation satisfies the mode's invariant.
    pub fn is_valid(&self, pha: &Pha) -> bool {
        pha.mode(&self.mode)
            .is_some_and(|m| m.invariant.holds(&self.valuation))
    }

    pub fn approx_eq(&self, other: &State) -> bool {
        self.mode == other.mode && self.valuation.approx_eq(&other.valuation)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.mode, self.valuation)
    }
}
