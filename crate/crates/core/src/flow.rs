//! Closed-form solutions of `ẏ = a·y + b`, their inverses, and the solvability check.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::geometry::{Interval, TOL};
use crate::model::{post_project, Pha, StarValue, VarFlow};

/// Shape of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolutionKind {
    /// `a ≠ 0` and `a·c + b ≠ 0`.
    ExpMonotone,
    /// `a = 0`, `b ≠ 0`.
    LinearMonotone,
    /// `a·c + b = 0`: the solution stays at `c`.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Increasing,
    Decreasing,
    Stationary,
}

/// The solution `g_c` of `ẏ = a·y + b, y(0) = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSolution {
    a: f64,
    b: f64,
    c: f64,
    kind: SolutionKind,
    direction: Direction,
}

/// Solve the initial-value problem.
pub fn solve_flow(a: f64, b: f64, c: f64) -> FlowSolution {
    let slope = a * c + b;
    let kind = if slope.abs() <= TOL * (1.0 + c.abs()) || slope == 0.0 {
        SolutionKind::Constant
    } else if a == 0.0 {
        SolutionKind::LinearMonotone
    } else {
        SolutionKind::ExpMonotone
    };
    let direction = match kind {
        SolutionKind::Constant => Direction::Stationary,
        _ if slope > 0.0 => Direction::Increasing,
        _ => Direction::Decreasing,
    };
    FlowSolution {
        a,
        b,
        c,
        kind,
        direction,
    }
}

impl FlowSolution {
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn start(&self) -> f64 {
        self.c
    }
    pub fn kind(&self) -> SolutionKind {
        self.kind
    }
    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Limit of `g(t)` as `t → ∞`: `-b/a` when it converges, `±∞` otherwise.
    pub fn limit(&self) -> f64 {
        match (self.kind, self.direction) {
            (SolutionKind::Constant, _) => self.c,
            (SolutionKind::ExpMonotone, _) if self.a < 0.0 => -self.b / self.a,
            (_, Direction::Increasing) => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        }
    }

    /// `g(t)`; `t` must be non-negative.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::Domain(format!("negative time {t}")));
        }
        Ok(self.at(t))
    }

    /// `g(t)` without the domain check.
    pub fn at(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.c;
        }
        match self.kind {
            SolutionKind::Constant => self.c,
            SolutionKind::LinearMonotone => self.c + self.b * t,
            SolutionKind::ExpMonotone => {
                let r = self.b / self.a;
                (self.c + r) * (self.a * t).exp() - r
            }
        }
    }

    /// The unique `t ≥ 0` with `g(t) = l`, if any. Returns exactly `0.0` when `l` is
    /// within tolerance of the starting value.
    pub fn invert(&self, l: f64) -> Option<f64> {
        if (l - self.c).abs() <= TOL {
            return Some(0.0);
        }
        let t = match self.kind {
            SolutionKind::Constant => return None,
            SolutionKind::LinearMonotone => (l - self.c) / self.b,
            SolutionKind::ExpMonotone => {
                let r = self.b / self.a;
                let arg = (l + r) / (self.c + r);
                if arg <= 0.0 || !arg.is_finite() {
                    return None;
                }
                arg.ln() / self.a
            }
        };
        if t.is_finite() && t >= 0.0 {
            Some(t)
        } else {
            None
        }
    }

    /// Times `t ≥ 0` with `g(t) ∈ target`; an interval because `g` is monotone.
    pub fn times_in(&self, target: &Interval) -> Option<Interval> {
        let all_time = || Interval::new(0.0, f64::INFINITY, true, false);
        if self.kind == SolutionKind::Constant {
            return if target.contains(self.c) { all_time() } else { None };
        }
        let increasing = self.direction == Direction::Increasing;
        // entry side is the bound the trajectory approaches first
        let (entry, entry_closed, exit, exit_closed) = if increasing {
            (target.lower(), target.lower_closed(), target.upper(), target.upper_closed())
        } else {
            (target.upper(), target.upper_closed(), target.lower(), target.lower_closed())
        };
        let (t0, t0_closed) = if target.contains(self.c) {
            (0.0, true)
        } else {
            let before_entry = if increasing {
                self.c <= entry + TOL
            } else {
                self.c >= entry - TOL
            };
            if !before_entry || !entry.is_finite() {
                return None;
            }
            (self.invert(entry)?, entry_closed)
        };
        let (t1, t1_closed) = match exit.is_finite().then(|| self.invert(exit)).flatten() {
            Some(t) => (t, exit_closed),
            None => (f64::INFINITY, false),
        };
        Interval::new(t0, t1, t0_closed, t1_closed)
    }

    /// Largest time the trajectory can stay inside `target`, starting inside it.
    pub fn exit_time(&self, target: &Interval) -> Option<f64> {
        let times = self.times_in(target)?;
        (times.lower() == 0.0 && times.lower_closed()).then(|| times.upper())
    }
}

/// Result of [`check_solvable`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolvabilityReport {
    pub variable: String,
    pub solvable: bool,
    pub reasons: Vec<String>,
    /// `D_v(x)` for every mode (possibly empty); empty map when unsolvable.
    pub starting_values: BTreeMap<String, Vec<f64>>,
}

impl SolvabilityReport {
    pub fn starting_values_of(&self, mode: &str) -> &[f64] {
        self.starting_values
            .get(mode)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn into_result(self) -> Result<Self> {
        if self.solvable {
            Ok(self)
        } else {
            Err(Error::Unsolvable {
                variable: self.variable,
                reasons: self.reasons,
            })
        }
    }
}

/// Bound on `|D_v(x)|` summed over modes.
pub const MAX_STARTING_VALUES: usize = 10_000;

/// Decide whether `x` is solvable in `pha` and compute its starting values.
pub fn check_solvable(pha: &Pha, x: &str) -> SolvabilityReport {
    let mut reasons = Vec::new();
    if !pha.has_var(x) {
        reasons.push(format!("unknown variable `{x}`"));
        return report(x, reasons, BTreeMap::new());
    }

    let mut affine = BTreeMap::new();
    for m in &pha.modes {
        match m.flow.get(x) {
            Some(VarFlow::Affine(f)) => {
                affine.insert(m.name.as_str(), *f);
            }
            Some(VarFlow::Rect(i)) => reasons.push(format!(
                "mode `{}`: flow of `{x}` is rectangular ({x}' in {i}), not an affine equation",
                m.name
            )),
            None => reasons.push(format!("mode `{}`: no flow for `{x}`", m.name)),
        }
    }

    let mut seeds: Vec<(String, f64)> = Vec::new();
    for m in &pha.modes {
        for b in m.init.boxes() {
            let iv = b.get(x);
            if iv.is_point() && iv.lower().is_finite() {
                seeds.push((m.name.clone(), iv.lower()));
            } else {
                reasons.push(format!(
                    "mode `{}`: initial values of `{x}` form the set {iv}, not finitely many points",
                    m.name
                ));
            }
        }
    }

    // star-edges (source → target) along which starting values propagate
    let mut star_edges: Vec<(String, String)> = Vec::new();
    for (k, t) in pha.transitions.iter().enumerate() {
        for (j, o) in t.outcomes.iter().enumerate() {
            let locus = format!("transition #{k} ({} --{}-->) outcome {j}", t.source, t.action);
            let projected = match post_project(&o.post, x) {
                Ok(p) => p,
                Err(e) => {
                    reasons.push(format!("{locus}: {e}"));
                    continue;
                }
            };
            match projected.as_slice() {
                [StarValue::Value(r)] => seeds.push((o.target.clone(), *r)),
                [StarValue::Star] => {
                    let same = match (affine.get(t.source.as_str()), affine.get(o.target.as_str())) {
                        (Some(f), Some(g)) => f.same_as(g),
                        _ => false,
                    };
                    if same {
                        star_edges.push((t.source.clone(), o.target.clone()));
                    } else {
                        reasons.push(format!(
                            "{locus}: star across differing flows of `{x}` (`{}` to `{}`)",
                            t.source, o.target
                        ));
                    }
                }
                other => reasons.push(format!(
                    "{locus}: non-singleton post projection {{{}}} for `{x}`",
                    other.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
                )),
            }
        }
    }

    if !reasons.is_empty() {
        return report(x, reasons, BTreeMap::new());
    }

    let mut values: BTreeMap<String, Vec<f64>> =
        pha.modes.iter().map(|m| (m.name.clone(), Vec::new())).collect();
    let mut queue: VecDeque<(String, f64)> = seeds.into_iter().collect();
    let mut total = 0usize;
    while let Some((mode, c)) = queue.pop_front() {
        let entry = values.entry(mode.clone()).or_default();
        if entry.iter().any(|v| (v - c).abs() <= TOL) {
            continue;
        }
        entry.push(c);
        total += 1;
        if total > MAX_STARTING_VALUES {
            reasons.push(format!(
                "more than {MAX_STARTING_VALUES} starting values; fixpoint computation abandoned"
            ));
            return report(x, reasons, BTreeMap::new());
        }
        for (s, t) in &star_edges {
            if *s == mode {
                queue.push_back((t.clone(), c));
            }
        }
    }
    for v in values.values_mut() {
        v.sort_by(f64::total_cmp);
    }
    report(x, reasons, values)
}

fn report(x: &str, reasons: Vec<String>, starting_values: BTreeMap<String, Vec<f64>>) -> SolvabilityReport {
    SolvabilityReport {
        variable: x.to_string(),
        solvable: reasons.is_empty(),
        reasons,
        starting_values,
    }
}
