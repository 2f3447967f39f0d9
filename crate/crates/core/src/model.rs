//! Hybrid and probabilistic hybrid automata, valuations and star-valuations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{fmt_num, Interval, Rectangle, TOL};
use crate::predicate::Predicate;

/// The silent action label.
pub const TAU: &str = "tau";

/// A total assignment of reals to the automaton's variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Valuation(BTreeMap<String, f64>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<f64> {
        self.0.get(var).copied()
    }

    pub fn set(&mut self, var: &str, value: f64) {
        self.0.insert(var.to_string(), value);
    }

    pub fn with(mut self, var: &str, value: f64) -> Self {
        self.set(var, value);
        self
    }

    pub fn remove(&mut self, var: &str) -> Option<f64> {
        self.0.remove(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Equal on the same variables, each within [`TOL`].
    pub fn approx_eq(&self, other: &Valuation) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .all(|(k, v)| other.get(k).is_some_and(|w| (v - w).abs() <= TOL))
    }

    /// Restriction to `vars`.
    pub fn restrict(&self, vars: &[String]) -> Valuation {
        Valuation(
            vars.iter()
                .filter_map(|v| self.get(v).map(|x| (v.clone(), x)))
                .collect(),
        )
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Valuation(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(k, v)| format!("{k}={}", fmt_num(*v)))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// A real or the stability marker `*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StarValue {
    Star,
    Value(f64),
}

impl StarValue {
    pub fn is_star(&self) -> bool {
        matches!(self, StarValue::Star)
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            StarValue::Star => None,
            StarValue::Value(v) => Some(*v),
        }
    }

    fn same(&self, other: &StarValue) -> bool {
        match (self, other) {
            (StarValue::Star, StarValue::Star) => true,
            (StarValue::Value(a), StarValue::Value(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for StarValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StarValue::Star => write!(f, "*"),
            StarValue::Value(v) => write!(f, "{}", fmt_num(*v)),
        }
    }
}

/// Element of a post set: each variable is reset to a value or kept (`*`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StarValuation(BTreeMap<String, StarValue>);

impl StarValuation {
    pub fn new() -> Self {
        Self::default()
    }

    /// The all-star valuation over `vars`.
    pub fn all_star(vars: &[String]) -> Self {
        StarValuation(vars.iter().map(|v| (v.clone(), StarValue::Star)).collect())
    }

    pub fn get(&self, var: &str) -> Option<StarValue> {
        self.0.get(var).copied()
    }

    pub fn set(&mut self, var: &str, value: StarValue) {
        self.0.insert(var.to_string(), value);
    }

    pub fn with(mut self, var: &str, value: StarValue) -> Self {
        self.set(var, value);
        self
    }

    pub fn remove(&mut self, var: &str) -> Option<StarValue> {
        self.0.remove(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, StarValue)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Restriction to `vars`.
    pub fn restrict(&self, vars: &[String]) -> StarValuation {
        StarValuation(
            vars.iter()
                .filter_map(|v| self.get(v).map(|x| (v.clone(), x)))
                .collect(),
        )
    }
}

impl<S: Into<String>> FromIterator<(S, StarValue)> for StarValuation {
    fn from_iter<I: IntoIterator<Item = (S, StarValue)>>(iter: I) -> Self {
        StarValuation(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

impl fmt::Display for StarValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}:={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// `d[a]`: take `d(x)` where it is a number and `a(x)` where it is `*`.
pub fn star_substitute(d: &StarValuation, a: &Valuation) -> Result<Valuation> {
    if d.len() != a.len() || d.keys().any(|k| a.get(k).is_none()) {
        return Err(Error::Model(format!(
            "star-valuation {d} and valuation ({a}) are over different variables"
        )));
    }
    Ok(d.iter()
        .map(|(k, v)| match v {
            StarValue::Star => (k, a.get(k).unwrap_or_default()),
            StarValue::Value(r) => (k, r),
        })
        .collect())
}

/// `post(x) = { d(x) | d ∈ post }` with duplicates collapsed, in first-seen order.
pub fn post_project(post: &[StarValuation], var: &str) -> Result<Vec<StarValue>> {
    let mut out: Vec<StarValue> = Vec::new();
    for d in post {
        let v = d
            .get(var)
            .ok_or_else(|| Error::Model(format!("post element {d} has no entry for `{var}`")))?;
        if !out.iter().any(|w| w.same(&v)) {
            out.push(v);
        }
    }
    Ok(out)
}

/// Affine right-hand side `ẋ = a·x + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFlow {
    pub a: f64,
    pub b: f64,
}

impl AffineFlow {
    pub fn new(a: f64, b: f64) -> Self {
        AffineFlow { a, b }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.a * x + self.b
    }

    pub fn same_as(&self, other: &AffineFlow) -> bool {
        (self.a - other.a).abs() <= TOL && (self.b - other.b).abs() <= TOL
    }

    /// Human-readable right-hand side over `var`.
    pub fn render(&self, var: &str) -> String {
        let lin = match self.a {
            a if a == 0.0 => String::new(),
            a if a == 1.0 => var.to_string(),
            a if a == -1.0 => format!("-{var}"),
            a => format!("{}*{var}", fmt_num(a)),
        };
        match (lin.is_empty(), self.b) {
            (true, b) => fmt_num(b),
            (false, b) if b == 0.0 => lin,
            (false, b) if b < 0.0 => format!("{lin} - {}", fmt_num(-b)),
            (false, b) => format!("{lin} + {}", fmt_num(b)),
        }
    }
}

/// Flow constraint on one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarFlow {
    /// `ẋ = a·x + b`
    Affine(AffineFlow),
    /// `ẋ ∈ bounds`
    Rect(Interval),
}

impl VarFlow {
    pub fn affine(a: f64, b: f64) -> Self {
        VarFlow::Affine(AffineFlow::new(a, b))
    }

    pub fn render(&self, var: &str) -> String {
        match self {
            VarFlow::Affine(f) => format!("{var}' = {}", f.render(var)),
            VarFlow::Rect(i) if i.is_point() => format!("{var}' = {}", fmt_num(i.lower())),
            VarFlow::Rect(i) => format!("{var}' in {i}"),
        }
    }
}

/// Per-variable flow of a mode.
pub type FlowSpec = BTreeMap<String, VarFlow>;

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub name: String,
    pub invariant: Predicate,
    pub init: Predicate,
    pub flow: FlowSpec,
    /// Presentation-only remark (e.g. symbolic forms of translated constants).
    pub note: Option<String>,
}

impl Mode {
    pub fn new(name: impl Into<String>, invariant: Predicate, init: Predicate, flow: FlowSpec) -> Self {
        Mode {
            name: name.into(),
            invariant,
            init,
            flow,
            note: None,
        }
    }
}

/// One support element `(target, post)` of a distribution together with its mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub prob: f64,
    pub target: String,
    pub post: Vec<StarValuation>,
}

/// A distribution `μ ∈ prob(source, action)` with its precondition and postconditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTransition {
    pub source: String,
    pub action: String,
    pub pre: Predicate,
    pub outcomes: Vec<Outcome>,
    /// Postcondition per target mode; absent entries mean `true`.
    pub pos: BTreeMap<String, Predicate>,
    pub note: Option<String>,
}

impl ProbTransition {
    pub fn mass(&self) -> f64 {
        self.outcomes.iter().map(|o| o.prob).sum()
    }

    pub fn pos_for(&self, target: &str) -> &Predicate {
        static TRUE: Predicate = Predicate::True;
        self.pos.get(target).unwrap_or(&TRUE)
    }

    pub fn is_tau(&self) -> bool {
        self.action == TAU
    }
}

/// Probabilistic hybrid automaton.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Pha {
    pub variables: Vec<String>,
    pub actions: Vec<String>,
    pub modes: Vec<Mode>,
    pub transitions: Vec<ProbTransition>,
}

impl Pha {
    pub fn mode(&self, name: &str) -> Option<&Mode> {
        self.modes.iter().find(|m| m.name == name)
    }

    pub fn mode_index(&self, name: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.name == name)
    }

    pub fn transitions_from<'a>(
        &'a self,
        mode: &'a str,
        action: &'a str,
    ) -> impl Iterator<Item = (usize, &'a ProbTransition)> + 'a {
        self.transitions
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.source == mode && t.action == action)
    }

    /// Labels used by at least one transition, τ included.
    pub fn used_actions(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.transitions.iter().map(|t| t.action.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    pub fn has_var(&self, var: &str) -> bool {
        self.variables.iter().any(|v| v == var)
    }
}

/// Discrete edge of a non-probabilistic automaton.
///
/// `reset` is the finite post set `R` with `Reset(e, a) = R[a] ∩ pos`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub source: String,
    pub label: String,
    pub target: String,
    pub pre: Predicate,
    pub reset: Vec<StarValuation>,
    pub pos: Predicate,
}

/// Hybrid automaton (no probabilities).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ha {
    pub variables: Vec<String>,
    pub actions: Vec<String>,
    pub modes: Vec<Mode>,
    pub edges: Vec<Edge>,
}

impl Ha {
    pub fn mode(&self, name: &str) -> Option<&Mode> {
        self.modes.iter().find(|m| m.name == name)
    }

    /// Read a PHA whose distributions are all Dirac as an HA: one edge per outcome.
    pub fn from_dirac_pha(pha: &Pha) -> Result<Ha> {
        let mut edges = Vec::new();
        for (k, t) in pha.transitions.iter().enumerate() {
            if t.outcomes.len() != 1 || (t.outcomes[0].prob - 1.0).abs() > TOL {
                return Err(Error::Model(format!(
                    "transition #{k} ({} --{}-->) is not a Dirac distribution",
                    t.source, t.action
                )));
            }
            let o = &t.outcomes[0];
            edges.push(Edge {
                source: t.source.clone(),
                label: t.action.clone(),
                target: o.target.clone(),
                pre: t.pre.clone(),
                reset: o.post.clone(),
                pos: t.pos_for(&o.target).clone(),
            });
        }
        Ok(Ha {
            variables: pha.variables.clone(),
            actions: pha.actions.clone(),
            modes: pha.modes.clone(),
            edges,
        })
    }

    /// The PHA with one Dirac distribution per edge.
    pub fn to_dirac_pha(&self) -> Pha {
        Pha {
            variables: self.variables.clone(),
            actions: self.actions.clone(),
            modes: self.modes.clone(),
            transitions: self
                .edges
                .iter()
                .map(|e| ProbTransition {
                    source: e.source.clone(),
                    action: e.label.clone(),
                    pre: e.pre.clone(),
                    outcomes: vec![Outcome {
                        prob: 1.0,
                        target: e.target.clone(),
                        post: e.reset.clone(),
                    }],
                    pos: if e.pos == Predicate::True {
                        BTreeMap::new()
                    } else {
                        BTreeMap::from([(e.target.clone(), e.pos.clone())])
                    },
                    note: None,
                })
                .collect(),
        }
    }
}

/// One violated model invariant, with where it happened.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub locus: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.locus, self.message)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    /// Accept distributions with total mass below 1.
    pub allow_subdistributions: bool,
}

/// Check the structural invariants of a PHA. An empty result means the model is valid.
pub fn validate(pha: &Pha) -> Vec<Diagnostic> {
    validate_with(pha, ValidateOptions::default())
}

pub fn validate_with(pha: &Pha, opts: ValidateOptions) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut push = |locus: String, message: String| diags.push(Diagnostic { locus, message });

    let vars: BTreeSet<&str> = pha.variables.iter().map(String::as_str).collect();
    if vars.len() != pha.variables.len() {
        push("variables".into(), "duplicate variable name".into());
    }
    let actions: BTreeSet<&str> = pha.actions.iter().map(String::as_str).collect();
    if actions.len() != pha.actions.len() {
        push("actions".into(), "duplicate action label".into());
    }
    for a in &pha.actions {
        if a.contains('#') {
            push(format!("action `{a}`"), "action labels may not contain `#`".into());
        }
    }

    let check_pred = |p: &Predicate, locus: &str, out: &mut Vec<Diagnostic>| {
        for v in p.variables() {
            if !vars.contains(v.as_str()) {
                out.push(Diagnostic {
                    locus: locus.to_string(),
                    message: format!("unknown variable `{v}`"),
                });
            }
        }
    };

    let mut seen = BTreeSet::new();
    let mut mode_diags = Vec::new();
    for m in &pha.modes {
        let locus = format!("mode `{}`", m.name);
        if m.name.is_empty() {
            mode_diags.push(Diagnostic {
                locus: locus.clone(),
                message: "empty mode name".into(),
            });
        }
        if !seen.insert(m.name.as_str()) {
            mode_diags.push(Diagnostic {
                locus: locus.clone(),
                message: "duplicate mode name".into(),
            });
        }
        for v in &pha.variables {
            if !m.flow.contains_key(v) {
                mode_diags.push(Diagnostic {
                    locus: locus.clone(),
                    message: format!("missing flow entry for variable `{v}`"),
                });
            }
        }
        for v in m.flow.keys() {
            if !vars.contains(v.as_str()) {
                mode_diags.push(Diagnostic {
                    locus: locus.clone(),
                    message: format!("flow for unknown variable `{v}`"),
                });
            }
        }
        check_pred(&m.invariant, &format!("{locus} invariant"), &mut mode_diags);
        check_pred(&m.init, &format!("{locus} init"), &mut mode_diags);
        if !m.init.implies(&m.invariant) {
            mode_diags.push(Diagnostic {
                locus: locus.clone(),
                message: "initial set is not contained in the invariant".into(),
            });
        }
    }
    diags.extend(mode_diags);

    for (k, t) in pha.transitions.iter().enumerate() {
        let locus = format!("transition #{k} ({} --{}-->)", t.source, t.action);
        let mut local = Vec::new();
        let mut push = |message: String| {
            local.push(Diagnostic {
                locus: locus.clone(),
                message,
            })
        };
        if pha.mode(&t.source).is_none() {
            push(format!("unknown source mode `{}`", t.source));
        }
        if !actions.contains(t.action.as_str()) {
            push(format!("undeclared action `{}`", t.action));
        }
        if t.outcomes.is_empty() {
            push("distribution has empty support".into());
        }
        for (j, o) in t.outcomes.iter().enumerate() {
            if pha.mode(&o.target).is_none() {
                push(format!("outcome {j}: unknown target mode `{}`", o.target));
            }
            if !(o.prob > 0.0 && o.prob <= 1.0 + TOL) {
                push(format!("outcome {j}: probability {} outside (0, 1]", o.prob));
            }
            if o.post.is_empty() {
                push(format!("outcome {j}: empty post set"));
            }
            for d in &o.post {
                let keys: BTreeSet<&str> = d.keys().collect();
                if keys != vars {
                    push(format!(
                        "outcome {j}: post element {d} is not defined on exactly the variables"
                    ));
                }
            }
        }
        let mass = effective_mass(pha, t);
        if opts.allow_subdistributions {
            if mass > 1.0 + TOL {
                push(format!("distribution mass {mass} exceeds 1"));
            }
        } else if (mass - 1.0).abs() > TOL {
            push(format!("distribution mass {mass} ≠ 1"));
        }
        if t.is_tau()
            && (t.outcomes.len() != 1
                || (t.outcomes[0].prob - 1.0).abs() > TOL
                || t.outcomes[0].post.len() != 1)
        {
            push("τ not concentrated: τ-distributions need one outcome of probability 1 with a singleton post".into());
        }
        for target in t.pos.keys() {
            if !t.outcomes.iter().any(|o| &o.target == target) {
                push(format!("postcondition for `{target}`, which is not a target"));
            }
        }
        check_pred(&t.pre, &format!("{locus} pre"), &mut local);
        for (target, p) in &t.pos {
            check_pred(p, &format!("{locus} pos[{target}]"), &mut local);
        }
        diags.extend(local);
    }
    diags
}

/// Total probability of a distribution, counting mutually exclusive outcomes once.
///
/// Outcomes with identical post sets whose admissible landing regions (postcondition
/// intersected with the target invariant) are pairwise disjoint can never both receive
/// weight from the same choice of post element, so a group of them contributes its
/// largest probability only. Without such groups this is the plain sum.
pub fn effective_mass(pha: &Pha, t: &ProbTransition) -> f64 {
    let region = |o: &Outcome| -> Vec<Rectangle> {
        let inv = pha
            .mode(&o.target)
            .map(|m| m.invariant.clone())
            .unwrap_or(Predicate::True);
        Predicate::And(vec![t.pos_for(&o.target).clone(), inv]).boxes()
    };
    let disjoint = |a: &[Rectangle], b: &[Rectangle]| {
        a.iter().all(|x| b.iter().all(|y| x.intersect(y).is_none()))
    };
    // (post, member regions, max prob)
    let mut groups: Vec<(&[StarValuation], Vec<Vec<Rectangle>>, f64)> = Vec::new();
    for o in &t.outcomes {
        let r = region(o);
        let slot = groups.iter_mut().find(|(post, members, _)| {
            *post == o.post.as_slice() && members.iter().all(|m| disjoint(m, &r))
        });
        match slot {
            Some((_, members, p)) => {
                members.push(r);
                *p = p.max(o.prob);
            }
            None => groups.push((o.post.as_slice(), vec![r], o.prob)),
        }
    }
    groups.iter().map(|(_, _, p)| p).sum()
}

/// Validate and turn diagnostics into an error.
pub fn ensure_valid(pha: &Pha, opts: ValidateOptions) -> Result<()> {
    let diags = validate_with(pha, opts);
    if diags.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(diags))
    }
}
