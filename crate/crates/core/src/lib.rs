//! Probabilistic hybrid automata with clock-translation, splitting and linear
//! phase-portrait approximation, plus sampling-based checks of the resulting
//! bisimulation and simulation relations.

pub mod clock;
pub mod dot;
pub mod error;
pub mod flow;
pub mod format;
pub mod geometry;
pub mod model;
pub mod predicate;
pub mod semantics;
pub mod split;

pub use error::{Error, Result};
pub use flow::{check_solvable, solve_flow, Direction, FlowSolution, SolutionKind, SolvabilityReport};
pub use geometry::{Interval, Rectangle, TOL};
pub use model::{
    post_project, star_substitute, validate, validate_with, AffineFlow, Diagnostic, Edge, FlowSpec,
    Ha, Mode, Outcome, Pha, ProbTransition, StarValuation, StarValue, ValidateOptions, Valuation,
    VarFlow, TAU,
};
pub use predicate::{alpha_transform, bound_flow, translate_predicate, Atom, CmpOp, Predicate};
pub use dot::export_dot;
pub use semantics::State;
