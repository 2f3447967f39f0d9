use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::flow::{solve_flow, FlowSolution};
use crate::geometry::{Interval, Rectangle, TOL};
use crate::model::{Mode, Pha, Valuation, VarFlow};

use super::State;

/// Motion of every variable along one flow segment: the closed-form solution for affine
/// flows, a straight line for a chosen slope of a rectangular flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub solutions: BTreeMap<String, FlowSolution>,
}

impl Trajectory {
    /// `None` when some variable has a rectangular flow.
    pub fn affine(mode: &Mode, start: &Valuation) -> Option<Trajectory> {
        Self::with_slopes(mode, start, &BTreeMap::new())
    }

    /// Rectangular flows take the slope given in `slopes`; `None` if one is missing.
    pub fn with_slopes(mode: &Mode, start: &Valuation, slopes: &BTreeMap<String, f64>) -> Option<Trajectory> {
        let mut solutions = BTreeMap::new();
        for (var, x) in start.iter() {
            let sol = match mode.flow.get(var)? {
                VarFlow::Affine(f) => solve_flow(f.a, f.b, x),
                VarFlow::Rect(_) => solve_flow(0.0, *slopes.get(var)?, x),
            };
            solutions.insert(var.to_string(), sol);
        }
        Some(Trajectory { solutions })
    }

    pub fn at(&self, t: f64) -> Valuation {
        self.solutions
            .iter()
            .map(|(v, g)| (v.clone(), g.at(t)))
            .collect()
    }

    /// Times at which the trajectory lies in `rect`.
    pub fn times_in(&self, rect: &Rectangle) -> Option<Interval> {
        let mut acc = Interval::new(0.0, f64::INFINITY, true, false)?;
        for (var, bound) in rect.bounds() {
            let g = self.solutions.get(var)?;
            acc = acc.intersect(&g.times_in(bound)?)?;
        }
        Some(acc)
    }
}

/// How long the trajectory stays inside the union of `boxes`, starting at time 0:
/// the supremum `T` and whether `T` itself is still inside. `None` if the start is not.
pub fn path_horizon(boxes: &[Rectangle], trajectory: &Trajectory) -> Option<(f64, bool)> {
    let times: Vec<Interval> = boxes.iter().filter_map(|b| trajectory.times_in(b)).collect();
    let first = times
        .iter()
        .filter(|i| i.lower() == 0.0 && i.lower_closed())
        .max_by(|a, b| a.upper().total_cmp(&b.upper()))?;
    let (mut hi, mut closed) = (first.upper(), first.upper_closed());
    loop {
        let mut grown = false;
        for i in &times {
            let joins = i.lower() < hi || (i.lower() == hi && (closed || i.lower_closed()));
            let extends = i.upper() > hi || (i.upper() == hi && i.upper_closed() && !closed);
            if joins && extends {
                hi = i.upper();
                closed = i.upper_closed();
                grown = true;
            }
        }
        if !grown {
            return Some((hi, closed));
        }
    }
}

/// Whether a flow of length `sigma` stays within a horizon returned by [`path_horizon`].
pub(crate) fn within_horizon(sigma: f64, horizon: (f64, bool)) -> bool {
    let (t, closed) = horizon;
    sigma < t || (closed && sigma <= t + TOL)
}

/// States reachable by letting time pass for exactly `sigma`, as boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct Reach {
    pub mode: String,
    pub boxes: Vec<Rectangle>,
}

impl Reach {
    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// The single reached valuation, when the flow is deterministic.
    pub fn point(&self, variables: &[String]) -> Option<Valuation> {
        match self.boxes.as_slice() {
            [b] if variables.iter().all(|v| b.get(v).is_point()) => {
                Some(variables.iter().map(|v| (v.clone(), b.get(v).lower())).collect())
            }
            _ => None,
        }
    }

    pub fn contains(&self, valuation: &Valuation) -> bool {
        self.boxes.iter().any(|b| b.contains(valuation))
    }
}

fn point_box(v: &Valuation) -> Rectangle {
    Rectangle::from_bounds(v.iter().map(|(k, x)| (k.to_string(), Interval::point(x))))
}

/// Flow successors of `state` after `sigma` time units.
///
/// Affine flows give at most one point, kept when the whole path respects the invariant.
/// Rectangular flows give, per invariant box containing the start, the box of endpoints of
/// straight-line paths inside it.
pub fn flow_successor(pha: &Pha, state: &State, sigma: f64) -> Result<Reach> {
    if sigma < 0.0 || sigma.is_nan() {
        return Err(Error::Domain(format!("negative duration {sigma}")));
    }
    let mode = pha
        .mode(&state.mode)
        .ok_or_else(|| Error::Model(format!("unknown mode `{}`", state.mode)))?;
    let empty = Reach {
        mode: mode.name.clone(),
        boxes: Vec::new(),
    };
    if !state.is_valid(pha) {
        return Ok(empty);
    }
    if sigma == 0.0 {
        return Ok(Reach {
            mode: mode.name.clone(),
            boxes: vec![point_box(&state.valuation)],
        });
    }
    let inv = mode.invariant.boxes();
    if let Some(traj) = Trajectory::affine(mode, &state.valuation) {
        return Ok(match path_horizon(&inv, &traj) {
            Some(h) if within_horizon(sigma, h) => Reach {
                mode: mode.name.clone(),
                boxes: vec![point_box(&traj.at(sigma))],
            },
            _ => empty,
        });
    }
    let mut boxes = Vec::new();
    'boxes: for b in inv.iter().filter(|b| b.contains(&state.valuation)) {
        let mut reached = Rectangle::full();
        for (var, x) in state.valuation.iter() {
            let bound = b.get(var);
            let iv = match mode.flow.get(var) {
                Some(VarFlow::Affine(f)) => {
                    let g = solve_flow(f.a, f.b, x);
                    match g.times_in(&bound) {
                        Some(ts) if ts.lower() == 0.0 && within_horizon(sigma, (ts.upper(), ts.upper_closed())) => {
                            Interval::point(g.at(sigma))
                        }
                        _ => continue 'boxes,
                    }
                }
                Some(VarFlow::Rect(slopes)) => match Interval::sweep(x, sigma, slopes).intersect(&bound) {
                    Some(i) => i,
                    None => continue 'boxes,
                },
                None => continue 'boxes,
            };
            reached.set(var, iv);
        }
        boxes.push(reached);
    }
    Ok(Reach {
        mode: mode.name.clone(),
        boxes,
    })
}
