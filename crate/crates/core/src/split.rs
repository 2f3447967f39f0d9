//! Splitting modes along a cover of their invariants, and linear phase-portrait
//! approximation on top of a split.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{Interval, Rectangle};
use crate::model::{Mode, Outcome, Pha, ProbTransition, StarValuation, Valuation, VarFlow, TAU};
use crate::predicate::{bound_flow, Predicate};

/// Per-mode covers `θ(v)`. Modes without an entry keep a single copy.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitSpec {
    pub covers: BTreeMap<String, Vec<Rectangle>>,
}

impl SplitSpec {
    pub fn with(mut self, mode: &str, cover: Vec<Rectangle>) -> Self {
        self.covers.insert(mode.to_string(), cover);
        self
    }

    /// Cut every bounded, non-degenerate axis of each invariant's hull into `k` equal
    /// closed pieces.
    pub fn uniform(pha: &Pha, k: usize) -> Result<SplitSpec> {
        if k == 0 {
            return Err(Error::Model("uniform split needs at least one piece".into()));
        }
        let mut spec = SplitSpec::default();
        for m in &pha.modes {
            let Some(hull) = m.invariant.hull() else {
                continue;
            };
            let mut boxes = vec![hull.clone()];
            for var in &pha.variables {
                let iv = hull.get(var);
                if !iv.is_bounded() || iv.is_point() {
                    continue;
                }
                let step = iv.width() / k as f64;
                let pieces: Vec<Interval> = (0..k)
                    .map(|i| {
                        let lo = iv.lower() + step * i as f64;
                        let hi = if i + 1 == k { iv.upper() } else { iv.lower() + step * (i + 1) as f64 };
                        Interval::closed(lo, hi).expect("ordered")
                    })
                    .collect();
                boxes = boxes
                    .iter()
                    .flat_map(|b| {
                        pieces.iter().map(move |p| {
                            let mut b = b.clone();
                            b.set(var, *p);
                            b
                        })
                    })
                    .collect();
            }
            spec.covers.insert(m.name.clone(), boxes);
        }
        Ok(spec)
    }

    pub fn cover_for(&self, mode: &str) -> Vec<Rectangle> {
        self.covers
            .get(mode)
            .cloned()
            .unwrap_or_else(|| vec![Rectangle::full()])
    }
}

/// `cell_j = cover_j \ (cover_1 ∪ … ∪ cover_{j-1})`, each as a union of disjoint boxes.
pub fn partition_cover(cover: &[Rectangle]) -> Vec<Vec<Rectangle>> {
    cover
        .iter()
        .enumerate()
        .map(|(j, c)| c.difference_all(&cover[..j]))
        .collect()
}

/// Refuse covers that miss part of the invariant or whose neighbouring pieces only touch.
pub fn check_cover(mode: &Mode, cover: &[Rectangle]) -> Result<()> {
    if cover.is_empty() {
        return Err(Error::Cover {
            mode: mode.name.clone(),
            message: "empty cover".into(),
        });
    }
    for b in mode.invariant.boxes() {
        if let Some(hole) = b.difference_all(cover).first() {
            return Err(Error::Uncovered {
                mode: mode.name.clone(),
                witness: hole.to_string(),
            });
        }
    }
    let inv = mode.invariant.boxes();
    let meets_inv = |r: &Rectangle| inv.iter().any(|b| b.intersect(r).is_some());
    for i in 0..cover.len() {
        for j in i + 1..cover.len() {
            let (p, q) = (&cover[i], &cover[j]);
            if p.touches(q) && p.intersect(q).is_none() && meets_inv(p) && meets_inv(q) {
                return Err(Error::Cover {
                    mode: mode.name.clone(),
                    message: format!(
                        "pieces {} and {} touch without sharing a point ({p} and {q})",
                        i + 1,
                        j + 1
                    ),
                });
            }
        }
    }
    Ok(())
}

/// One copy `(v, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCopy {
    pub mode: String,
    pub original: String,
    /// 1-based position in the cover.
    pub index: usize,
    pub cover: Rectangle,
    /// The partition cell `cover_i` minus earlier pieces.
    pub cell: Vec<Rectangle>,
}

/// Relation between a split (or approximation) and its source.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitWitness {
    pub approximated: bool,
    pub copies: Vec<SplitCopy>,
}

impl SplitWitness {
    pub fn copy(&self, mode: &str) -> Option<&SplitCopy> {
        self.copies.iter().find(|c| c.mode == mode)
    }

    pub fn copies_of<'a>(&'a self, original: &'a str) -> impl Iterator<Item = &'a SplitCopy> + 'a {
        self.copies.iter().filter(move |c| c.original == original)
    }

    /// The copy whose partition cell holds `valuation`, if any.
    pub fn cell_of<'a>(&'a self, original: &'a str, valuation: &Valuation) -> Option<&'a SplitCopy> {
        self.copies_of(original)
            .find(|c| c.cell.iter().any(|b| b.contains(valuation)))
    }
}

pub fn copy_name(mode: &str, index: usize) -> String {
    format!("({mode},{index})")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitOptions {
    /// Restrict postconditions to partition cells. Turning this off reproduces the
    /// double-counting the cells exist to prevent.
    pub partition: bool,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions { partition: true }
    }
}

impl SplitOptions {
    pub fn without_partition() -> Self {
        SplitOptions { partition: false }
    }
}

fn intersect_all(a: &[Rectangle], b: &[Rectangle]) -> Vec<Rectangle> {
    a.iter()
        .flat_map(|x| b.iter().filter_map(move |y| x.intersect(y)))
        .collect()
}

fn restrict(p: &Predicate, rect: &Rectangle) -> Predicate {
    let boxes = p.boxes();
    if boxes.iter().all(|b| rect.contains_rect(b)) {
        p.clone()
    } else {
        p.intersect_rect(rect)
    }
}

pub fn split_pha(pha: &Pha, spec: &SplitSpec) -> Result<(Pha, SplitWitness)> {
    split_pha_with(pha, spec, SplitOptions::default())
}

pub fn split_pha_with(pha: &Pha, spec: &SplitSpec, opts: SplitOptions) -> Result<(Pha, SplitWitness)> {
    for name in spec.covers.keys() {
        if pha.mode(name).is_none() {
            return Err(Error::Cover {
                mode: name.clone(),
                message: "no such mode".into(),
            });
        }
    }

    let mut modes = Vec::new();
    let mut copies = Vec::new();
    for m in &pha.modes {
        let cover = spec.cover_for(&m.name);
        check_cover(m, &cover)?;
        let cells = partition_cover(&cover);
        for (i, (piece, cell)) in cover.iter().zip(cells).enumerate() {
            let invariant = restrict(&m.invariant, piece);
            if invariant.is_unsatisfiable() {
                continue;
            }
            let name = copy_name(&m.name, i + 1);
            let init = restrict(&m.init, piece);
            let mut mode = Mode::new(name.clone(), invariant, init, m.flow.clone());
            mode.note = m.note.clone();
            modes.push(mode);
            copies.push(SplitCopy {
                mode: name,
                original: m.name.clone(),
                index: i + 1,
                cover: piece.clone(),
                cell,
            });
        }
    }
    let copy_mode = |name: &str| modes.iter().find(|m: &&Mode| m.name == name);

    let mut transitions = Vec::new();
    for t in &pha.transitions {
        for src in copies.iter().filter(|c| c.original == t.source) {
            let pre = restrict(&t.pre, &src.cover);
            if pre.is_unsatisfiable() {
                continue;
            }
            if t.is_tau() {
                let o = &t.outcomes[0];
                for dst in copies.iter().filter(|c| c.original == o.target) {
                    let region = intersect_all(&t.pos_for(&o.target).boxes(), std::slice::from_ref(&dst.cover));
                    if region.is_empty() {
                        continue;
                    }
                    transitions.push(ProbTransition {
                        source: src.mode.clone(),
                        action: t.action.clone(),
                        pre: pre.clone(),
                        outcomes: vec![Outcome {
                            prob: 1.0,
                            target: dst.mode.clone(),
                            post: o.post.clone(),
                        }],
                        pos: BTreeMap::from([(dst.mode.clone(), Predicate::from_boxes(&region))]),
                        note: t.note.clone(),
                    });
                }
                continue;
            }
            let mut outcomes = Vec::new();
            let mut pos = BTreeMap::new();
            for o in &t.outcomes {
                for dst in copies.iter().filter(|c| c.original == o.target) {
                    let cell = if opts.partition {
                        dst.cell.clone()
                    } else {
                        vec![dst.cover.clone()]
                    };
                    let region = intersect_all(&t.pos_for(&o.target).boxes(), &cell);
                    if region.is_empty() {
                        continue;
                    }
                    outcomes.push(Outcome {
                        prob: o.prob,
                        target: dst.mode.clone(),
                        post: o.post.clone(),
                    });
                    pos.insert(dst.mode.clone(), Predicate::from_boxes(&region));
                }
            }
            if outcomes.is_empty() {
                continue;
            }
            transitions.push(ProbTransition {
                source: src.mode.clone(),
                action: t.action.clone(),
                pre,
                outcomes,
                pos,
                note: t.note.clone(),
            });
        }
    }

    // silent moves between overlapping copies of the same mode
    for src in &copies {
        let src_inv = copy_mode(&src.mode).expect("copy mode").invariant.clone();
        for dst in copies.iter().filter(|c| c.original == src.original) {
            let dst_inv = &copy_mode(&dst.mode).expect("copy mode").invariant;
            if intersect_all(&src_inv.boxes(), &dst_inv.boxes()).is_empty() {
                continue;
            }
            transitions.push(ProbTransition {
                source: src.mode.clone(),
                action: TAU.to_string(),
                pre: src_inv.clone(),
                outcomes: vec![Outcome {
                    prob: 1.0,
                    target: dst.mode.clone(),
                    post: vec![StarValuation::all_star(&pha.variables)],
                }],
                pos: BTreeMap::from([(dst.mode.clone(), dst_inv.clone())]),
                note: None,
            });
        }
    }

    let mut actions = pha.actions.clone();
    if !actions.iter().any(|a| a == TAU) {
        actions.push(TAU.to_string());
    }
    Ok((
        Pha {
            variables: pha.variables.clone(),
            actions,
            modes,
            transitions,
        },
        SplitWitness {
            approximated: false,
            copies,
        },
    ))
}

/// Split, then replace every affine flow by the interval of derivatives it takes on the
/// copy's invariant.
pub fn approximate(pha: &Pha, spec: &SplitSpec) -> Result<(Pha, SplitWitness)> {
    let (split, witness) = split_pha(pha, spec)?;
    let approx = approximate_split(&split)?;
    Ok((
        approx,
        SplitWitness {
            approximated: true,
            ..witness
        },
    ))
}

/// Bound the flows of an already split automaton and widen non-rectangular invariants,
/// Init and Pre sets to their hulls. Postconditions stay exact: they carry the partition
/// cells, which must remain disjoint.
pub fn approximate_split(split: &Pha) -> Result<Pha> {
    let mut out = split.clone();
    for mode in &mut out.modes {
        let hull = mode.invariant.hull().unwrap_or_else(Rectangle::full);
        let mut notes = Vec::new();
        for (var, flow) in mode.flow.iter_mut() {
            if let VarFlow::Affine(f) = *flow {
                let range = hull.get(var);
                let bounds = bound_flow(&f, &range).map_err(|e| match e {
                    Error::UnboundedDerivative { range, .. } => Error::UnboundedDerivative {
                        flow: format!("{} in mode `{}`", f.render(var), mode.name),
                        range,
                    },
                    other => other,
                })?;
                if f.a != 0.0 {
                    notes.push(format!("{var}' = {} on {range}", f.render(var)));
                }
                *flow = VarFlow::Rect(bounds);
            }
        }
        if !notes.is_empty() {
            mode.note = Some(format!("bounds of {}", notes.join(", ")));
        }
        mode.invariant = widen(&mode.invariant);
        mode.init = widen(&mode.init);
    }
    for t in &mut out.transitions {
        t.pre = widen(&t.pre);
    }
    Ok(out)
}

fn widen(p: &Predicate) -> Predicate {
    let boxes = p.boxes();
    if boxes.len() <= 1 {
        return p.clone();
    }
    let hull = boxes[1..].iter().fold(boxes[0].clone(), |acc, b| acc.hull(b));
    Predicate::from_rect(&hull)
}
