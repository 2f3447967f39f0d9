//! Simple predicates: positive boolean combinations of atoms `x ∼ c`.
//!
//! Besides evaluation and a small textual syntax, this module holds the rewriting of
//! atoms over a solvable variable into atoms over its clock ([`alpha_transform`]) and
//! the interval image of an affine flow ([`bound_flow`]).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::flow::{Direction, FlowSolution, SolutionKind};
use crate::geometry::{cmp_tol, fmt_num, Interval, Rectangle};
use crate::model::{AffineFlow, Valuation};

/// The comparison operators `<, ≤, =, ≥, >`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub const ALL: [CmpOp; 5] = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt];

    /// `lhs ∼ rhs` with tolerance-aware equality.
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        use std::cmp::Ordering::*;
        let ord = cmp_tol(lhs, rhs);
        match self {
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Eq => ord == Equal,
            CmpOp::Ge => ord != Less,
            CmpOp::Gt => ord == Greater,
        }
    }

    /// Operator used when the atom holds at time 0: the satisfying times form an initial
    /// segment.
    pub fn lt(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Lt,
            CmpOp::Le => CmpOp::Le,
            CmpOp::Eq => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Le,
            CmpOp::Gt => CmpOp::Lt,
        }
    }

    /// Operator used when the atom fails at time 0: the satisfying times form a final segment.
    pub fn gt(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Eq => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Gt,
        }
    }

    /// Operator with sides swapped (`c ∼ x` ⇔ `x flip(∼) c`).
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Eq => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Le,
            CmpOp::Gt => CmpOp::Lt,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    fn interval(self, value: f64) -> Interval {
        let inf = f64::INFINITY;
        match self {
            CmpOp::Lt => Interval::new(-inf, value, false, false),
            CmpOp::Le => Interval::new(-inf, value, false, true),
            CmpOp::Eq => Some(Interval::point(value)),
            CmpOp::Ge => Interval::new(value, inf, true, false),
            CmpOp::Gt => Interval::new(value, inf, false, false),
        }
        .expect("finite atom constant")
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `var op value`
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub var: String,
    pub op: CmpOp,
    pub value: f64,
}

impl Atom {
    pub fn new(var: impl Into<String>, op: CmpOp, value: f64) -> Self {
        Atom {
            var: var.into(),
            op,
            value,
        }
    }

    pub fn holds_at(&self, x: f64) -> bool {
        self.op.holds(x, self.value)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.var, self.op, fmt_num(self.value))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    True,
    False,
    Atom(Atom),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
}

impl Predicate {
    pub fn atom(var: impl Into<String>, op: CmpOp, value: f64) -> Self {
        Predicate::Atom(Atom::new(var, op, value))
    }

    /// Conjunction; a single operand is returned as is.
    pub fn and(mut parts: Vec<Predicate>) -> Self {
        match parts.len() {
            0 => Predicate::True,
            1 => parts.pop().unwrap(),
            _ => Predicate::And(parts),
        }
    }

    /// Disjunction; a single operand is returned as is.
    pub fn or(mut parts: Vec<Predicate>) -> Self {
        match parts.len() {
            0 => Predicate::False,
            1 => parts.pop().unwrap(),
            _ => Predicate::Or(parts),
        }
    }

    pub fn eval(&self, valuation: &Valuation) -> Result<bool> {
        Ok(match self {
            Predicate::True => true,
            Predicate::False => false,
            Predicate::Atom(a) => {
                let x = valuation
                    .get(&a.var)
                    .ok_or_else(|| Error::Model(format!("unknown variable `{}`", a.var)))?;
                a.holds_at(x)
            }
            Predicate::And(ps) => {
                for p in ps {
                    if !p.eval(valuation)? {
                        return Ok(false);
                    }
                }
                true
            }
            Predicate::Or(ps) => {
                for p in ps {
                    if p.eval(valuation)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }

    /// Evaluation that treats unknown variables as a failed test.
    pub fn holds(&self, valuation: &Valuation) -> bool {
        self.eval(valuation).unwrap_or(false)
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| {
            out.insert(a.var.clone());
        });
        out
    }

    pub fn mentions(&self, var: &str) -> bool {
        let mut found = false;
        self.visit_atoms(&mut |a| found |= a.var == var);
        found
    }

    /// Constants compared against `var`.
    pub fn constants_for(&self, var: &str) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |a| {
            if a.var == var {
                out.push(a.value)
            }
        });
        out
    }

    pub fn visit_atoms(&self, f: &mut impl FnMut(&Atom)) {
        match self {
            Predicate::Atom(a) => f(a),
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().for_each(|p| p.visit_atoms(f)),
            _ => {}
        }
    }

    /// Structural map over atoms followed by boolean simplification.
    pub fn map_atoms(&self, f: &mut impl FnMut(&Atom) -> Predicate) -> Predicate {
        match self {
            Predicate::True => Predicate::True,
            Predicate::False => Predicate::False,
            Predicate::Atom(a) => f(a),
            Predicate::And(ps) => {
                Predicate::And(ps.iter().map(|p| p.map_atoms(f)).collect()).simplify()
            }
            Predicate::Or(ps) => {
                Predicate::Or(ps.iter().map(|p| p.map_atoms(f)).collect()).simplify()
            }
        }
    }

    /// Propagate `true`/`false` and collapse singleton connectives.
    pub fn simplify(&self) -> Predicate {
        match self {
            Predicate::And(ps) => {
                let mut out = Vec::new();
                for p in ps {
                    match p.simplify() {
                        Predicate::True => {}
                        Predicate::False => return Predicate::False,
                        q => out.push(q),
                    }
                }
                Predicate::and(out)
            }
            Predicate::Or(ps) => {
                let mut out = Vec::new();
                for p in ps {
                    match p.simplify() {
                        Predicate::False => {}
                        Predicate::True => return Predicate::True,
                        q => out.push(q),
                    }
                }
                Predicate::or(out)
            }
            other => other.clone(),
        }
    }

    /// Replace every atom over `var` by its truth value at `value`.
    pub fn substitute(&self, var: &str, value: f64) -> Predicate {
        self.map_atoms(&mut |a| {
            if a.var == var {
                if a.holds_at(value) {
                    Predicate::True
                } else {
                    Predicate::False
                }
            } else {
                Predicate::Atom(a.clone())
            }
        })
    }

    pub fn rename(&self, from: &str, to: &str) -> Predicate {
        self.map_atoms(&mut |a| {
            let mut a = a.clone();
            if a.var == from {
                a.var = to.to_string();
            }
            Predicate::Atom(a)
        })
    }

    /// Disjunctive normal form as a union of boxes (empty boxes dropped).
    pub fn boxes(&self) -> Vec<Rectangle> {
        match self {
            Predicate::True => vec![Rectangle::full()],
            Predicate::False => vec![],
            Predicate::Atom(a) => {
                vec![Rectangle::from_bounds([(a.var.clone(), a.op.interval(a.value))])]
            }
            Predicate::Or(ps) => ps.iter().flat_map(|p| p.boxes()).collect(),
            Predicate::And(ps) => {
                let mut acc = vec![Rectangle::full()];
                for p in ps {
                    let bs = p.boxes();
                    acc = acc
                        .iter()
                        .flat_map(|r| bs.iter().filter_map(move |b| r.intersect(b)))
                        .collect();
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            }
        }
    }

    /// Smallest box containing the predicate's set; `None` if it is empty.
    pub fn hull(&self) -> Option<Rectangle> {
        let boxes = self.boxes();
        let mut it = boxes.into_iter();
        let first = it.next()?;
        Some(it.fold(first, |acc, b| acc.hull(&b)))
    }

    pub fn is_unsatisfiable(&self) -> bool {
        self.boxes().is_empty()
    }

    /// Set inclusion, decided exactly on the box decomposition.
    pub fn implies(&self, other: &Predicate) -> bool {
        let theirs = other.boxes();
        self.boxes()
            .iter()
            .all(|b| b.difference_all(&theirs).is_empty())
    }

    pub fn from_interval(var: &str, interval: &Interval) -> Predicate {
        if interval.is_point() {
            return Predicate::atom(var, CmpOp::Eq, interval.lower());
        }
        let mut parts = Vec::new();
        if interval.lower().is_finite() {
            let op = if interval.lower_closed() { CmpOp::Ge } else { CmpOp::Gt };
            parts.push(Predicate::atom(var, op, interval.lower()));
        }
        if interval.upper().is_finite() {
            let op = if interval.upper_closed() { CmpOp::Le } else { CmpOp::Lt };
            parts.push(Predicate::atom(var, op, interval.upper()));
        }
        Predicate::and(parts)
    }

    pub fn from_rect(rect: &Rectangle) -> Predicate {
        let parts: Vec<Predicate> = rect
            .bounds()
            .iter()
            .map(|(v, i)| Predicate::from_interval(v, i))
            .collect();
        Predicate::and(parts)
    }

    pub fn from_boxes(boxes: &[Rectangle]) -> Predicate {
        Predicate::or(boxes.iter().map(Predicate::from_rect).collect())
    }

    /// `self ∩ rect`, normalised into boxes.
    pub fn intersect_rect(&self, rect: &Rectangle) -> Predicate {
        let boxes: Vec<Rectangle> = self
            .boxes()
            .iter()
            .filter_map(|b| b.intersect(rect))
            .collect();
        Predicate::from_boxes(&boxes)
    }

    fn chain_parts(&self) -> Option<(&Atom, &Atom)> {
        if let Predicate::And(ps) = self {
            if let [Predicate::Atom(lo), Predicate::Atom(hi)] = ps.as_slice() {
                if lo.var == hi.var
                    && matches!(lo.op, CmpOp::Ge | CmpOp::Gt)
                    && matches!(hi.op, CmpOp::Le | CmpOp::Lt)
                {
                    return Some((lo, hi));
                }
            }
        }
        None
    }

    /// Render with a custom number formatter (e.g. symbolic constants).
    pub fn render_with(&self, num: &dyn Fn(f64) -> String) -> String {
        if let Some((lo, hi)) = self.chain_parts() {
            return format!(
                "{} {} {} {} {}",
                num(lo.value),
                lo.op.flip(),
                lo.var,
                hi.op,
                num(hi.value)
            );
        }
        match self {
            Predicate::True => "true".into(),
            Predicate::False => "false".into(),
            Predicate::Atom(a) => format!("{} {} {}", a.var, a.op, num(a.value)),
            Predicate::And(ps) | Predicate::Or(ps) => {
                let sep = if matches!(self, Predicate::And(_)) { " && " } else { " || " };
                ps.iter()
                    .map(|p| match p {
                        Predicate::And(_) if p.chain_parts().is_some() => p.render_with(num),
                        Predicate::And(_) | Predicate::Or(_) => format!("({})", p.render_with(num)),
                        other => other.render_with(num),
                    })
                    .collect::<Vec<_>>()
                    .join(sep)
            }
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(&fmt_num))
    }
}

impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_predicate(s, "predicate")
    }
}

/// Parse the textual syntax; `context` names the location for error messages.
///
/// ```text
/// expr  := conj ("||" conj)*
/// conj  := prim ("&&" prim)*
/// prim  := "(" expr ")" | "true" | "false" | cmp
/// cmp   := term op term [op term]        -- exactly one variable per comparison
/// ```
pub fn parse_predicate(text: &str, context: &str) -> Result<Predicate> {
    let tokens = tokenize(text).map_err(|(column, message)| Error::Predicate {
        context: context.to_string(),
        column,
        message,
    })?;
    let mut parser = Parser { tokens, pos: 0 };
    let result = parser.expr().and_then(|p| match parser.peek() {
        None => Ok(p),
        Some((col, tok)) => Err((col, format!("unexpected `{tok}`"))),
    });
    result.map_err(|(column, message)| Error::Predicate {
        context: context.to_string(),
        column,
        message,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Op(CmpOp),
    And,
    Or,
    LParen,
    RParen,
    True,
    False,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Num(n) => write!(f, "{n}"),
            Tok::Op(o) => write!(f, "{o}"),
            Tok::And => write!(f, "&&"),
            Tok::Or => write!(f, "||"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::True => write!(f, "true"),
            Tok::False => write!(f, "false"),
        }
    }
}

type PResult<T> = std::result::Result<T, (usize, String)>;

fn tokenize(text: &str) -> PResult<Vec<(usize, Tok)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '&' if next == Some('&') => (Tok::And, 2),
            '|' if next == Some('|') => (Tok::Or, 2),
            '∧' => (Tok::And, 1),
            '∨' => (Tok::Or, 1),
            '<' if next == Some('=') => (Tok::Op(CmpOp::Le), 2),
            '<' => (Tok::Op(CmpOp::Lt), 1),
            '>' if next == Some('=') => (Tok::Op(CmpOp::Ge), 2),
            '>' => (Tok::Op(CmpOp::Gt), 1),
            '=' if next == Some('=') => (Tok::Op(CmpOp::Eq), 2),
            '=' => (Tok::Op(CmpOp::Eq), 1),
            '≤' => (Tok::Op(CmpOp::Le), 1),
            '≥' => (Tok::Op(CmpOp::Ge), 1),
            c if c.is_ascii_digit()
                || c == '.'
                || ((c == '-' || c == '+')
                    && next.is_some_and(|n| n.is_ascii_digit() || n == '.')) =>
            {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() {
                    let d = chars[j];
                    let exp_sign = (d == '-' || d == '+') && matches!(chars[j - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let lit: String = chars[start..j].iter().collect();
                let value: f64 = lit
                    .parse()
                    .map_err(|_| (col, format!("malformed number `{lit}`")))?;
                (Tok::Num(value), j - start)
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len()
                    && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'')
                {
                    j += 1;
                }
                let word: String = chars[start..j].iter().collect();
                let tok = match word.as_str() {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    _ => Tok::Ident(word),
                };
                (tok, j - start)
            }
            other => return Err((col, format!("unexpected character `{other}`"))),
        };
        out.push((col, tok));
        i += len;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<(usize, &Tok)> {
        self.tokens.get(self.pos).map(|(c, t)| (*c, t))
    }

    fn end_col(&self) -> usize {
        self.tokens.last().map(|(c, _)| c + 1).unwrap_or(1)
    }

    fn next(&mut self) -> PResult<(usize, Tok)> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| (self.end_col(), "unexpected end of input".to_string()))?;
        self.pos += 1;
        Ok(t)
    }

    fn expr(&mut self) -> PResult<Predicate> {
        let mut parts = vec![self.conj()?];
        while matches!(self.peek(), Some((_, Tok::Or))) {
            self.pos += 1;
            parts.push(self.conj()?);
        }
        Ok(Predicate::or(parts))
    }

    fn conj(&mut self) -> PResult<Predicate> {
        let mut parts = vec![self.prim()?];
        while matches!(self.peek(), Some((_, Tok::And))) {
            self.pos += 1;
            parts.push(self.prim()?);
        }
        Ok(Predicate::and(parts))
    }

    fn prim(&mut self) -> PResult<Predicate> {
        let (col, tok) = self.next()?;
        match tok {
            Tok::LParen => {
                let inner = self.expr()?;
                match self.next()? {
                    (_, Tok::RParen) => Ok(inner),
                    (c, t) => Err((c, format!("expected `)`, found `{t}`"))),
                }
            }
            Tok::True => Ok(Predicate::True),
            Tok::False => Ok(Predicate::False),
            Tok::Ident(_) | Tok::Num(_) => self.comparison(col, tok),
            other => Err((col, format!("unexpected `{other}`"))),
        }
    }

    fn comparison(&mut self, col: usize, first: Tok) -> PResult<Predicate> {
        let op1 = match self.next()? {
            (_, Tok::Op(op)) => op,
            (c, t) => return Err((c, format!("expected comparison operator, found `{t}`"))),
        };
        let (col2, second) = self.next()?;
        let atom1 = make_atom(col, &first, op1, &second)?;
        if let Some((_, Tok::Op(op2))) = self.peek() {
            let op2 = *op2;
            self.pos += 1;
            let (_, third) = self.next()?;
            let atom2 = make_atom(col2, &second, op2, &third)?;
            return Ok(Predicate::And(vec![atom1, atom2]));
        }
        Ok(atom1)
    }
}

fn make_atom(col: usize, lhs: &Tok, op: CmpOp, rhs: &Tok) -> PResult<Predicate> {
    match (lhs, rhs) {
        (Tok::Ident(v), Tok::Num(n)) => Ok(Predicate::atom(v.clone(), op, *n)),
        (Tok::Num(n), Tok::Ident(v)) => Ok(Predicate::atom(v.clone(), op.flip(), *n)),
        _ => Err((
            col,
            format!("comparison `{lhs} {op} {rhs}` must relate one variable to one constant"),
        )),
    }
}

/// Rewrite the atom `x ∼ l` into a constraint on the clock measuring time since `x`
/// started at `c` along `g`.
///
/// Follows the four-case definition: when `g` never reaches `l` the atom is constant
/// (`true` iff `c ∼ l`); otherwise it becomes `clock lt(∼) g⁻¹(l)` when `c ∼ l` and
/// `clock gt(∼) g⁻¹(l)` when not. When `l = c` and `g` is strictly monotone, the truth
/// value for positive times is decided by the direction of `g`, which keeps the result
/// exact for every `t ≥ 0`.
pub fn alpha_transform(atom: &Atom, c: f64, g: &FlowSolution, clock: &str) -> Predicate {
    let holds_at_start = atom.holds_at(c);
    let Some(t_star) = g.invert(atom.value) else {
        return if holds_at_start {
            Predicate::True
        } else {
            Predicate::False
        };
    };
    if t_star == 0.0 && g.kind() != SolutionKind::Constant {
        let side_after = match g.direction() {
            Direction::Increasing => std::cmp::Ordering::Greater,
            _ => std::cmp::Ordering::Less,
        };
        let holds_after = match atom.op {
            CmpOp::Lt | CmpOp::Le => side_after == std::cmp::Ordering::Less,
            CmpOp::Eq => false,
            CmpOp::Ge | CmpOp::Gt => side_after == std::cmp::Ordering::Greater,
        };
        match (holds_at_start, holds_after) {
            (true, true) => return Predicate::True,
            (false, false) => return Predicate::False,
            _ => {}
        }
    }
    let op = if holds_at_start {
        atom.op.lt()
    } else {
        atom.op.gt()
    };
    Predicate::atom(clock, op, t_star)
}

/// Rewrite every atom over `var` with [`alpha_transform`]; other atoms pass through.
///
/// For invariants, an atom violated at the starting value `c` becomes `false`.
pub fn translate_predicate(
    pred: &Predicate,
    var: &str,
    c: f64,
    g: &FlowSolution,
    clock: &str,
    is_invariant: bool,
) -> Predicate {
    pred.map_atoms(&mut |a| {
        if a.var != var {
            Predicate::Atom(a.clone())
        } else if is_invariant && !a.holds_at(c) {
            Predicate::False
        } else {
            alpha_transform(a, c, g, clock)
        }
    })
}

/// Exact image of `x ↦ a·x + b` over `range` (affine maps attain their extremes at the
/// endpoints).
pub fn bound_flow(flow: &AffineFlow, range: &Interval) -> Result<Interval> {
    if flow.a == 0.0 {
        return Ok(Interval::point(flow.b));
    }
    if !range.is_bounded() {
        return Err(Error::UnboundedDerivative {
            flow: flow.render("x"),
            range: range.to_string(),
        });
    }
    let lo = flow.derivative(range.lower());
    let hi = flow.derivative(range.upper());
    Ok(Interval::closed(lo.min(hi), lo.max(hi)).expect("ordered endpoints"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::solve_flow;

    fn p(s: &str) -> Predicate {
        s.parse().unwrap()
    }

    fn val(x: f64) -> Valuation {
        [("x", x)].into_iter().collect()
    }

    #[test]
    fn parses_chains_and_connectives() {
        assert_eq!(
            p("1 <= x <= 3"),
            Predicate::And(vec![
                Predicate::atom("x", CmpOp::Ge, 1.0),
                Predicate::atom("x", CmpOp::Le, 3.0)
            ])
        );
        assert_eq!(p("x = 2"), Predicate::atom("x", CmpOp::Eq, 2.0));
        assert_eq!(p("2 > x"), Predicate::atom("x", CmpOp::Lt, 2.0));
        let q = p("x < 1 || (y >= -2.5 && y <= 0)");
        assert!(matches!(q, Predicate::Or(ref v) if v.len() == 2));
        assert_eq!(p("true"), Predicate::True);
    }

    #[test]
    fn syntax_errors_carry_columns() {
        match "x <= ".parse::<Predicate>() {
            Err(Error::Predicate { column, .. }) => assert!(column >= 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!("x <= y".parse::<Predicate>().is_err());
        assert!("x ! 3".parse::<Predicate>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "1 <= x <= 3",
            "x = 2",
            "x < 1 || (y >= -2.5 && y <= 0)",
            "x > 0.1 && (x < 3 || y = 1)",
            "t_x <= 0.6931471805599453",
            "false",
        ] {
            let q = p(s);
            assert_eq!(p(&q.to_string()), q, "{s}");
        }
        assert_eq!(p("1 <= x <= 3").to_string(), "1 <= x <= 3");
    }

    #[test]
    fn evaluation_examples() {
        assert!(p("1 <= x <= 3").eval(&val(2.0)).unwrap());
        assert!(p("x = 3").eval(&val(3.0 + 1e-12)).unwrap());
        for x in [-5.0, 0.0, 1.0, 1.5, 2.0, 7.0] {
            assert!(!p("x < 1 && x > 2").eval(&val(x)).unwrap());
        }
        assert!(p("y > 0").eval(&val(1.0)).is_err());
    }

    #[test]
    fn lt_gt_tables_match_hard_coded_copy() {
        use CmpOp::*;
        let table = [
            (Lt, Lt, Gt),
            (Le, Le, Ge),
            (Eq, Eq, Eq),
            (Ge, Le, Ge),
            (Gt, Lt, Gt),
        ];
        for (op, lt, gt) in table {
            assert_eq!(op.lt(), lt, "lt({op})");
            assert_eq!(op.gt(), gt, "gt({op})");
        }
        // for increasing solutions lt is the identity on {<, <=, =}
        for op in [Lt, Le, Eq] {
            assert_eq!(op.lt(), op);
        }
    }

    #[test]
    fn alpha_examples() {
        let on2 = solve_flow(-1.0, 5.0, 2.0);
        let r = alpha_transform(&Atom::new("x", CmpOp::Le, 3.0), 2.0, &on2, "t_x");
        match r {
            Predicate::Atom(a) => {
                assert_eq!(a.op, CmpOp::Le);
                assert!((a.value - (1.5f64).ln()).abs() < 1e-12);
            }
            other => panic!("{other}"),
        }
        let off3 = solve_flow(-1.0, 0.0, 3.0);
        match alpha_transform(&Atom::new("x", CmpOp::Eq, 1.0), 3.0, &off3, "t_x") {
            Predicate::Atom(a) => {
                assert_eq!(a.op, CmpOp::Eq);
                assert!((a.value - 3f64.ln()).abs() < 1e-12);
            }
            other => panic!("{other}"),
        }
        assert_eq!(
            alpha_transform(&Atom::new("x", CmpOp::Lt, 10.0), 2.0, &on2, "t_x"),
            Predicate::True
        );
    }

    #[test]
    fn invariant_translation_examples() {
        let on2 = solve_flow(-1.0, 5.0, 2.0);
        let inv = translate_predicate(&p("1 <= x <= 3"), "x", 2.0, &on2, "t_x", true);
        match inv {
            Predicate::Atom(a) => {
                assert_eq!((a.var.as_str(), a.op), ("t_x", CmpOp::Le));
                assert!((a.value - 1.5f64.ln()).abs() < 1e-12);
            }
            other => panic!("{other}"),
        }
        let bad = translate_predicate(&p("1 <= x <= 3"), "x", 4.0, &on2, "t_x", true);
        assert_eq!(bad, Predicate::False);
        let other = p("y <= 4");
        assert_eq!(translate_predicate(&other, "x", 2.0, &on2, "t_x", true), other);
    }

    #[test]
    fn boundary_start_uses_direction() {
        // OFF from 3, decreasing: x <= 3 holds forever.
        let off3 = solve_flow(-1.0, 0.0, 3.0);
        assert_eq!(
            alpha_transform(&Atom::new("x", CmpOp::Le, 3.0), 3.0, &off3, "t"),
            Predicate::True
        );
        // ON from 1, increasing: x >= 1 holds forever, x < 1 never.
        let on1 = solve_flow(-1.0, 5.0, 1.0);
        assert_eq!(
            alpha_transform(&Atom::new("x", CmpOp::Ge, 1.0), 1.0, &on1, "t"),
            Predicate::True
        );
        assert_eq!(
            alpha_transform(&Atom::new("x", CmpOp::Lt, 1.0), 1.0, &on1, "t"),
            Predicate::False
        );
        // Constant solution keeps the literal table: x = 0 at c = 0 gives t = 0.
        let down = solve_flow(0.0, 0.0, 0.0);
        assert_eq!(
            alpha_transform(&Atom::new("x", CmpOp::Eq, 0.0), 0.0, &down, "t"),
            Predicate::atom("t", CmpOp::Eq, 0.0)
        );
    }

    #[test]
    fn bound_flow_examples() {
        let r = |s: &str| s.parse::<Interval>().unwrap();
        assert_eq!(bound_flow(&AffineFlow::new(-1.0, 5.0), &r("[1, 2]")).unwrap(), r("[3, 4]"));
        assert_eq!(bound_flow(&AffineFlow::new(-1.0, 0.0), &r("[1, 2]")).unwrap(), r("[-2, -1]"));
        assert_eq!(
            bound_flow(&AffineFlow::new(0.0, 0.0), &Interval::point(0.0)).unwrap(),
            Interval::point(0.0)
        );
        assert!(matches!(
            bound_flow(&AffineFlow::new(2.0, 0.0), &r("[0, inf)")),
            Err(Error::UnboundedDerivative { .. })
        ));
    }

    #[test]
    fn implication_on_boxes() {
        assert!(p("x = 2").implies(&p("1 <= x <= 3")));
        assert!(!p("x = 5").implies(&p("1 <= x <= 3")));
        assert!(p("1 <= x <= 3").implies(&p("1 <= x <= 2 || 2 <= x <= 3")));
        assert!(!p("1 <= x <= 3").implies(&p("1 <= x < 2 || 2 < x <= 3")));
        assert!(p("false").implies(&p("x > 0 && x < 0")));
    }
}
