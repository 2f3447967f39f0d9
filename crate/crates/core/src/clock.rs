//! Clock-translation: replace a solvable variable `x` by a clock `t_x` that measures the
//! time since `x` last took a known starting value.
//!
//! Every mode `v` is copied once per starting value `c ∈ D_v(x)`, atoms over `x` become
//! atoms over `t_x`, numeric resets of `x` become resets of the clock to 0, and stable
//! (`*`) outcomes keep both the clock and the starting value.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::flow::{check_solvable, solve_flow, FlowSolution, SolutionKind, SolvabilityReport};
use crate::geometry::{fmt_num, TOL};
use crate::model::{
    post_project, Edge, Ha, Mode, Outcome, Pha, ProbTransition, StarValuation, StarValue,
    Valuation, VarFlow,
};
use crate::predicate::{translate_predicate, CmpOp, Predicate};

/// Name of a translated copy, e.g. `(ON,2)`.
pub fn copy_name(mode: &str, start: f64) -> String {
    format!("({mode},{})", fmt_num(start))
}

/// One translated mode `(v, c)` with the coefficients of `x`'s flow in `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockCopy {
    pub mode: String,
    pub original: String,
    pub start: f64,
    pub a: f64,
    pub b: f64,
}

impl ClockCopy {
    pub fn solution(&self) -> FlowSolution {
        solve_flow(self.a, self.b, self.start)
    }
}

/// Correspondence between a translation and its source, sufficient to rebuild η.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationWitness {
    pub variable: String,
    pub clock: String,
    pub copies: Vec<ClockCopy>,
}

impl TranslationWitness {
    pub fn copy(&self, mode: &str) -> Option<&ClockCopy> {
        self.copies.iter().find(|c| c.mode == mode)
    }

    pub fn copies_of<'a>(&'a self, original: &'a str) -> impl Iterator<Item = &'a ClockCopy> + 'a {
        self.copies.iter().filter(move |c| c.original == original)
    }

    /// η: `((v,c), a) ↦ (v, a')` with `a'(x) = g_c(a(t_x))` and `t_x` dropped.
    pub fn eta(&self, mode: &str, valuation: &Valuation) -> Option<(String, Valuation)> {
        let copy = self.copy(mode)?;
        let t = valuation.get(&self.clock)?;
        if t < -TOL {
            return None;
        }
        let mut out = valuation.clone();
        out.remove(&self.clock);
        out.set(&self.variable, copy.solution().at(t.max(0.0)));
        Some((copy.original.clone(), out))
    }
}

/// Options for [`clock_translate_pha_with`].
#[derive(Debug, Clone, Default)]
pub struct ClockOptions {
    /// Name of the clock; defaults to `t_<x>`.
    pub clock: Option<String>,
    /// Keep copies whose translated invariant is `false` (and outcomes into them).
    pub keep_empty_copies: bool,
}

/// Composite label `a#k#j` of the underlying automaton: action, transition index,
/// outcome index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CompositeLabel {
    pub action: String,
    pub transition: usize,
    pub outcome: usize,
}

impl CompositeLabel {
    pub fn encode(&self) -> String {
        format!("{}#{}#{}", self.action, self.transition, self.outcome)
    }

    pub fn decode(label: &str) -> Option<CompositeLabel> {
        let mut parts = label.rsplitn(3, '#');
        let outcome = parts.next()?.parse().ok()?;
        let transition = parts.next()?.parse().ok()?;
        let action = parts.next()?.to_string();
        Some(CompositeLabel {
            action,
            transition,
            outcome,
        })
    }
}

/// The non-probabilistic automaton obtained by giving every `(μ, target, post)` its own
/// edge.
#[derive(Debug, Clone, PartialEq)]
pub struct UnderlyingHa {
    pub ha: Ha,
    pub labels: Vec<CompositeLabel>,
}

pub fn underlying_ha(pha: &Pha) -> UnderlyingHa {
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    for (k, t) in pha.transitions.iter().enumerate() {
        for (j, o) in t.outcomes.iter().enumerate() {
            let label = CompositeLabel {
                action: t.action.clone(),
                transition: k,
                outcome: j,
            };
            edges.push(Edge {
                source: t.source.clone(),
                label: label.encode(),
                target: o.target.clone(),
                pre: t.pre.clone(),
                reset: o.post.clone(),
                pos: t.pos_for(&o.target).clone(),
            });
            labels.push(label);
        }
    }
    UnderlyingHa {
        ha: Ha {
            variables: pha.variables.clone(),
            actions: labels.iter().map(CompositeLabel::encode).collect(),
            modes: pha.modes.clone(),
            edges,
        },
        labels,
    }
}

/// Translate `x` in a PHA, building the lifted distributions `ν_μ` directly.
pub fn clock_translate_pha(pha: &Pha, x: &str) -> Result<(Pha, TranslationWitness)> {
    clock_translate_pha_with(pha, x, &ClockOptions::default())
}

pub fn clock_translate_pha_with(
    pha: &Pha,
    x: &str,
    opts: &ClockOptions,
) -> Result<(Pha, TranslationWitness)> {
    let report = check_solvable(pha, x).into_result()?;
    translate(pha, &report, opts)
}

/// Translate `x` in a non-probabilistic automaton using a precomputed solvability report.
pub fn clock_translate_ha(ha: &Ha, x: &str, report: &SolvabilityReport) -> Result<(Ha, TranslationWitness)> {
    if report.variable != x {
        return Err(Error::Model(format!(
            "solvability report is for `{}`, not `{x}`",
            report.variable
        )));
    }
    if !report.solvable {
        return Err(Error::Unsolvable {
            variable: x.to_string(),
            reasons: report.reasons.clone(),
        });
    }
    let (pha, witness) = translate(&ha.to_dirac_pha(), report, &ClockOptions::default())?;
    let edges = pha
        .transitions
        .iter()
        .map(|t| {
            let o = &t.outcomes[0];
            Edge {
                source: t.source.clone(),
                label: t.action.clone(),
                target: o.target.clone(),
                pre: t.pre.clone(),
                reset: o.post.clone(),
                pos: t.pos_for(&o.target).clone(),
            }
        })
        .collect();
    Ok((
        Ha {
            variables: pha.variables,
            actions: pha.actions,
            modes: pha.modes,
            edges,
        },
        witness,
    ))
}

/// Symbolic form of `g_c⁻¹(l)` when all quantities are small integers, e.g. `ln(3/2)`.
fn symbolic_time(a: f64, b: f64, c: f64, l: f64) -> Option<String> {
    let int = |v: f64| (v.fract() == 0.0 && v.abs() < 1e9).then_some(v as i64);
    if a == 0.0 {
        return None;
    }
    let (start, end) = (a * c + b, a * l + b);
    let (mut num, mut den) = if a < 0.0 { (start, end) } else { (end, start) };
    if num < 0.0 && den < 0.0 {
        num = -num;
        den = -den;
    }
    let (mut n, mut d) = (int(num)?, int(den)?);
    if n <= 0 || d <= 0 || n <= d {
        return None;
    }
    let g = gcd(n, d);
    n /= g;
    d /= g;
    let log = if d == 1 {
        format!("ln({n})")
    } else {
        format!("ln({n}/{d})")
    };
    Some(match a.abs() {
        s if s == 1.0 => log,
        s => format!("{log}/{}", fmt_num(s)),
    })
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

struct Translator<'a> {
    x: &'a str,
    clock: String,
    symbols: BTreeMap<u64, String>,
}

impl Translator<'_> {
    fn predicate(&mut self, p: &Predicate, copy: &ClockCopy, is_invariant: bool) -> Predicate {
        let g = copy.solution();
        for l in p.constants_for(self.x) {
            if let Some(t) = g.invert(l) {
                if let Some(sym) = symbolic_time(copy.a, copy.b, copy.start, l) {
                    self.symbols.insert(t.to_bits(), sym);
                }
            }
        }
        translate_predicate(p, self.x, copy.start, &g, &self.clock, is_invariant)
    }

    /// Rendering with symbolic constants, when any were used.
    fn note(&self, p: &Predicate) -> Option<String> {
        let mut any = false;
        p.visit_atoms(&mut |a| any |= self.symbols.contains_key(&a.value.to_bits()));
        any.then(|| {
            p.render_with(&|v| {
                self.symbols
                    .get(&v.to_bits())
                    .cloned()
                    .unwrap_or_else(|| fmt_num(v))
            })
        })
    }
}

fn translate(pha: &Pha, report: &SolvabilityReport, opts: &ClockOptions) -> Result<(Pha, TranslationWitness)> {
    let x = report.variable.as_str();
    let clock = opts.clock.clone().unwrap_or_else(|| format!("t_{x}"));
    if pha.has_var(&clock) {
        return Err(Error::Model(format!(
            "clock name `{clock}` clashes with an existing variable"
        )));
    }
    let mut tr = Translator {
        x,
        clock: clock.clone(),
        symbols: BTreeMap::new(),
    };

    let mut copies = Vec::new();
    let mut modes = Vec::new();
    for m in &pha.modes {
        let Some(VarFlow::Affine(f)) = m.flow.get(x) else {
            return Err(Error::Unsolvable {
                variable: x.to_string(),
                reasons: vec![format!("mode `{}`: flow of `{x}` is not affine", m.name)],
            });
        };
        for &c in report.starting_values_of(&m.name) {
            let copy = ClockCopy {
                mode: copy_name(&m.name, c),
                original: m.name.clone(),
                start: c,
                a: f.a,
                b: f.b,
            };
            let constant = copy.solution().kind() == SolutionKind::Constant;
            let mut invariant = tr.predicate(&m.invariant, &copy, true);
            let at_zero = Predicate::atom(&clock, CmpOp::Eq, 0.0);
            if constant && !invariant.implies(&at_zero) {
                invariant = Predicate::And(vec![invariant, at_zero.clone()]).simplify();
            }
            let init = match m.init.substitute(x, c) {
                Predicate::False => Predicate::False,
                p => Predicate::And(vec![p, at_zero]).simplify(),
            };
            let mut flow = m.flow.clone();
            flow.remove(x);
            flow.insert(clock.clone(), VarFlow::affine(0.0, if constant { 0.0 } else { 1.0 }));
            let mut mode = Mode::new(copy.mode.clone(), invariant, init, flow);
            mode.note = tr.note(&mode.invariant);
            modes.push(mode);
            copies.push(copy);
        }
    }

    let mut dropped: Vec<String> = Vec::new();
    if !opts.keep_empty_copies {
        dropped = modes
            .iter()
            .filter(|m| m.invariant == Predicate::False)
            .map(|m| m.name.clone())
            .collect();
        modes.retain(|m| !dropped.contains(&m.name));
        copies.retain(|c| !dropped.contains(&c.mode));
    }
    let live = |name: &str| !dropped.iter().any(|d| d == name);

    let mut transitions = Vec::new();
    for t in &pha.transitions {
        let sources: Vec<ClockCopy> = copies.iter().filter(|c| c.original == t.source).cloned().collect();
        for src in sources {
            let pre = tr.predicate(&t.pre, &src, false);
            if pre == Predicate::False {
                continue;
            }
            let mut outcomes = Vec::new();
            let mut pos = BTreeMap::new();
            for o in &t.outcomes {
                let projected = post_project(&o.post, x)?;
                let (start, reset) = match projected.as_slice() {
                    [StarValue::Value(r)] => (*r, StarValue::Value(0.0)),
                    [StarValue::Star] => (src.start, StarValue::Star),
                    _ => unreachable!("solvability guarantees singleton projections"),
                };
                let Some(target) = copies
                    .iter()
                    .find(|c| c.original == o.target && (c.start - start).abs() <= TOL)
                    .cloned()
                else {
                    continue;
                };
                if !live(&target.mode) {
                    continue;
                }
                let post: Vec<StarValuation> = o
                    .post
                    .iter()
                    .map(|d| {
                        let mut d = d.clone();
                        d.remove(x);
                        d.with(&clock, reset)
                    })
                    .collect();
                let p = tr.predicate(t.pos_for(&o.target), &target, false);
                if p != Predicate::True {
                    pos.insert(target.mode.clone(), p);
                }
                outcomes.push(Outcome {
                    prob: o.prob,
                    target: target.mode.clone(),
                    post,
                });
            }
            if outcomes.is_empty() {
                continue;
            }
            let note = tr.note(&pre).map(|n| format!("pre {n}"));
            transitions.push(ProbTransition {
                source: src.mode.clone(),
                action: t.action.clone(),
                pre,
                outcomes,
                pos,
                note,
            });
        }
    }

    let variables = pha
        .variables
        .iter()
        .map(|v| if v == x { clock.clone() } else { v.clone() })
        .collect();
    Ok((
        Pha {
            variables,
            actions: pha.actions.clone(),
            modes,
            transitions,
        },
        TranslationWitness {
            variable: x.to_string(),
            clock,
            copies,
        },
    ))
}
