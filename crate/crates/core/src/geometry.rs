//! Intervals and axis-aligned boxes over named variables.
//!
//! Membership tests are tolerance-aware (see [`TOL`]); set algebra (intersection,
//! difference) is exact on endpoints and closedness flags, so partitions computed here
//! stay disjoint.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::Valuation;

/// Absolute tolerance for equality and containment of reals.
pub const TOL: f64 = 1e-9;

/// Compare two reals, treating values within [`TOL`] as equal.
pub fn cmp_tol(lhs: f64, rhs: f64) -> Ordering {
    if lhs == rhs || (lhs - rhs).abs() <= TOL {
        Ordering::Equal
    } else if lhs < rhs {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// Shortest round-trippable decimal rendering; infinities as `inf`/`-inf`.
pub fn fmt_num(value: f64) -> String {
    if value == f64::INFINITY {
        "inf".to_string()
    } else if value == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if value == 0.0 {
        "0".to_string()
    } else {
        format!("{value}")
    }
}

/// A real interval with optional infinite endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lower: f64,
    upper: f64,
    lower_closed: bool,
    upper_closed: bool,
}

impl Interval {
    /// Build an interval; `None` when it would be empty.
    ///
    /// Infinite endpoints are always open.
    pub fn new(lower: f64, upper: f64, lower_closed: bool, upper_closed: bool) -> Option<Self> {
        if lower.is_nan() || upper.is_nan() {
            return None;
        }
        let lower_closed = lower_closed && lower.is_finite();
        let upper_closed = upper_closed && upper.is_finite();
        if lower > upper || (lower == upper && !(lower_closed && upper_closed)) {
            return None;
        }
        Some(Interval {
            lower,
            upper,
            lower_closed,
            upper_closed,
        })
    }

    pub fn closed(lower: f64, upper: f64) -> Option<Self> {
        Self::new(lower, upper, true, true)
    }

    pub fn point(value: f64) -> Self {
        Interval {
            lower: value,
            upper: value,
            lower_closed: true,
            upper_closed: true,
        }
    }

    pub fn full() -> Self {
        Interval {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            lower_closed: false,
            upper_closed: false,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }
    pub fn upper(&self) -> f64 {
        self.upper
    }
    pub fn lower_closed(&self) -> bool {
        self.lower_closed
    }
    pub fn upper_closed(&self) -> bool {
        self.upper_closed
    }

    pub fn is_point(&self) -> bool {
        self.lower == self.upper
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    pub fn is_full(&self) -> bool {
        self.lower == f64::NEG_INFINITY && self.upper == f64::INFINITY
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Tolerance-aware membership.
    pub fn contains(&self, value: f64) -> bool {
        let above = match cmp_tol(value, self.lower) {
            Ordering::Greater => true,
            Ordering::Equal => self.lower_closed || self.lower == f64::NEG_INFINITY,
            Ordering::Less => false,
        };
        let below = match cmp_tol(value, self.upper) {
            Ordering::Less => true,
            Ordering::Equal => self.upper_closed || self.upper == f64::INFINITY,
            Ordering::Greater => false,
        };
        above && below
    }

    /// Exact containment of `other` in `self`.
    pub fn contains_interval(&self, other: &Interval) -> bool {
        let lower_ok = self.lower < other.lower
            || (self.lower == other.lower && (self.lower_closed || !other.lower_closed));
        let upper_ok = self.upper > other.upper
            || (self.upper == other.upper && (self.upper_closed || !other.upper_closed));
        lower_ok && upper_ok
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lower, lower_closed) = match self.lower.partial_cmp(&other.lower) {
            Some(Ordering::Greater) => (self.lower, self.lower_closed),
            Some(Ordering::Less) => (other.lower, other.lower_closed),
            _ => (self.lower, self.lower_closed && other.lower_closed),
        };
        let (upper, upper_closed) = match self.upper.partial_cmp(&other.upper) {
            Some(Ordering::Less) => (self.upper, self.upper_closed),
            Some(Ordering::Greater) => (other.upper, other.upper_closed),
            _ => (self.upper, self.upper_closed && other.upper_closed),
        };
        Interval::new(lower, upper, lower_closed, upper_closed)
    }

    /// `self \ other` as at most two disjoint intervals.
    pub fn difference(&self, other: &Interval) -> Vec<Interval> {
        let Some(common) = self.intersect(other) else {
            return vec![*self];
        };
        let mut out = Vec::with_capacity(2);
        if let Some(left) = Interval::new(
            self.lower,
            common.lower,
            self.lower_closed,
            !common.lower_closed,
        ) {
            out.push(left);
        }
        if let Some(right) = Interval::new(
            common.upper,
            self.upper,
            !common.upper_closed,
            self.upper_closed,
        ) {
            out.push(right);
        }
        out
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        let (lower, lower_closed) = match self.lower.partial_cmp(&other.lower) {
            Some(Ordering::Less) => (self.lower, self.lower_closed),
            Some(Ordering::Greater) => (other.lower, other.lower_closed),
            _ => (self.lower, self.lower_closed || other.lower_closed),
        };
        let (upper, upper_closed) = match self.upper.partial_cmp(&other.upper) {
            Some(Ordering::Greater) => (self.upper, self.upper_closed),
            Some(Ordering::Less) => (other.upper, other.upper_closed),
            _ => (self.upper, self.upper_closed || other.upper_closed),
        };
        Interval {
            lower,
            upper,
            lower_closed,
            upper_closed,
        }
    }

    /// Closures intersect (touching counts).
    pub fn touches(&self, other: &Interval) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }

    /// Shift by `offset + scale * [lo, hi]` (Minkowski sum of a point and a scaled interval).
    pub fn sweep(origin: f64, duration: f64, slopes: &Interval) -> Interval {
        let a = origin + duration * slopes.lower;
        let b = origin + duration * slopes.upper;
        Interval::closed(a.min(b), a.max(b)).unwrap_or(Interval::point(origin))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lower_closed { '[' } else { '(' },
            fmt_num(self.lower),
            fmt_num(self.upper),
            if self.upper_closed { ']' } else { ')' }
        )
    }
}

impl FromStr for Interval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Model(format!("malformed interval `{s}`"));
        let s = s.trim();
        let lower_closed = match s.chars().next() {
            Some('[') => true,
            Some('(') => false,
            _ => return Err(bad()),
        };
        let upper_closed = match s.chars().last() {
            Some(']') => true,
            Some(')') => false,
            _ => return Err(bad()),
        };
        let body = &s[1..s.len() - 1];
        let (lo, hi) = body.split_once(',').ok_or_else(bad)?;
        let parse = |t: &str| -> Result<f64> {
            match t.trim() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => other.parse::<f64>().map_err(|_| bad()),
            }
        };
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        Interval::new(lo, hi, lower_closed, upper_closed)
            .ok_or_else(|| Error::Model(format!("empty interval `{s}`")))
    }
}

/// Axis-aligned box: a product of per-variable intervals.
///
/// Variables without an entry are unconstrained.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rectangle {
    bounds: BTreeMap<String, Interval>,
}

impl Rectangle {
    /// The whole space.
    pub fn full() -> Self {
        Rectangle::default()
    }

    pub fn from_bounds<I, S>(bounds: I) -> Self
    where
        I: IntoIterator<Item = (S, Interval)>,
        S: Into<String>,
    {
        let bounds = bounds
            .into_iter()
            .map(|(k, v)| (k.into(), v))
            .filter(|(_, v)| !v.is_full())
            .collect();
        Rectangle { bounds }
    }

    pub fn bounds(&self) -> &BTreeMap<String, Interval> {
        &self.bounds
    }

    /// Interval for `var` (full line when unconstrained).
    pub fn get(&self, var: &str) -> Interval {
        self.bounds.get(var).copied().unwrap_or_else(Interval::full)
    }

    pub fn set(&mut self, var: &str, interval: Interval) {
        if interval.is_full() {
            self.bounds.remove(var);
        } else {
            self.bounds.insert(var.to_string(), interval);
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.bounds.keys().map(String::as_str)
    }

    pub fn contains(&self, valuation: &Valuation) -> bool {
        self.bounds.iter().all(|(var, interval)| {
            valuation
                .get(var)
                .map(|v| interval.contains(v))
                .unwrap_or(false)
        })
    }

    pub fn intersect(&self, other: &Rectangle) -> Option<Rectangle> {
        let mut out = self.clone();
        for (var, interval) in &other.bounds {
            let merged = match self.bounds.get(var) {
                Some(mine) => mine.intersect(interval)?,
                None => *interval,
            };
            out.set(var, merged);
        }
        Some(out)
    }

    pub fn contains_rect(&self, other: &Rectangle) -> bool {
        self.bounds
            .iter()
            .all(|(var, interval)| interval.contains_interval(&other.get(var)))
    }

    /// `self \ other` as a list of pairwise disjoint boxes.
    pub fn difference(&self, other: &Rectangle) -> Vec<Rectangle> {
        if self.intersect(other).is_none() {
            return vec![self.clone()];
        }
        let vars: BTreeSet<&String> = self.bounds.keys().chain(other.bounds.keys()).collect();
        let mut out = Vec::new();
        let mut rest = self.clone();
        for var in vars {
            let mine = rest.get(var);
            let theirs = other.get(var);
            for piece in mine.difference(&theirs) {
                let mut part = rest.clone();
                part.set(var, piece);
                out.push(part);
            }
            match mine.intersect(&theirs) {
                Some(inner) => rest.set(var, inner),
                None => return out,
            }
        }
        out
    }

    /// `self \ (others[0] ∪ others[1] ∪ ...)`.
    pub fn difference_all(&self, others: &[Rectangle]) -> Vec<Rectangle> {
        let mut remaining = vec![self.clone()];
        for other in others {
            remaining = remaining
                .into_iter()
                .flat_map(|r| r.difference(other))
                .collect();
            if remaining.is_empty() {
                break;
            }
        }
        remaining
    }

    pub fn hull(&self, other: &Rectangle) -> Rectangle {
        let mut out = Rectangle::full();
        for (var, interval) in &self.bounds {
            if let Some(theirs) = other.bounds.get(var) {
                out.set(var, interval.hull(theirs));
            }
        }
        out
    }

    pub fn touches(&self, other: &Rectangle) -> bool {
        let vars: BTreeSet<&String> = self.bounds.keys().chain(other.bounds.keys()).collect();
        vars.into_iter()
            .all(|v| self.get(v).touches(&other.get(v)))
    }

    /// Some point of the box, preferring the midpoint of bounded axes.
    pub fn witness_point(&self, variables: &[String]) -> Valuation {
        let mut val = Valuation::default();
        for var in variables {
            let iv = self.get(var);
            let x = if iv.is_point() {
                iv.lower()
            } else if iv.is_bounded() {
                0.5 * (iv.lower() + iv.upper())
            } else if iv.lower().is_finite() {
                iv.lower() + 1.0
            } else if iv.upper().is_finite() {
                iv.upper() - 1.0
            } else {
                0.0
            };
            val.set(var, x);
        }
        val
    }
}

impl fmt::Display for Rectangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bounds.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self
            .bounds
            .iter()
            .map(|(v, i)| format!("{v} in {i}"))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}
