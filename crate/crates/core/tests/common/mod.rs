//! Random small automata and an independent successor enumerator, shared by test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;

use pha_core::{
    Interval, Mode, Outcome, Pha, Predicate, ProbTransition, Rectangle, StarValuation, StarValue,
    Valuation, VarFlow,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn half(rng: &mut ChaCha8Rng, lo: i32, hi: i32) -> f64 {
    rng.random_range(2 * lo..=2 * hi) as f64 / 2.0
}

fn random_box(rng: &mut ChaCha8Rng, vars: &[String]) -> Rectangle {
    Rectangle::from_bounds(vars.iter().map(|v| {
        let lo = half(rng, -3, 1);
        let hi = lo + half(rng, 0, 4);
        (v.clone(), Interval::closed(lo, hi).unwrap())
    }))
}

fn point_in(rng: &mut ChaCha8Rng, b: &Rectangle, vars: &[String]) -> Valuation {
    vars.iter()
        .map(|v| {
            let i = b.get(v);
            let (lo, hi) = (i.lower().max(-10.0), i.upper().min(10.0));
            // favour the endpoints, where guards and postconditions tend to bite
            let x = match rng.random_range(0..4) {
                0 => lo,
                1 => hi,
                _ if hi > lo => rng.random_range(lo..=hi),
                _ => lo,
            };
            (v.clone(), x)
        })
        .collect()
}

fn split_mass(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut tenths = vec![1u32; k];
    for _ in k..10 {
        tenths[rng.random_range(0..k)] += 1;
    }
    tenths.into_iter().map(|t| t as f64 / 10.0).collect()
}

/// At most 3 modes, 2 variables and 3 outcomes per distribution.
pub fn random_pha(rng: &mut ChaCha8Rng) -> Pha {
    let vars: Vec<String> = ["x", "y"][..rng.random_range(1..=2)].iter().map(|s| s.to_string()).collect();
    let actions: Vec<String> = vec!["a".into(), "b".into()];
    let n_modes = rng.random_range(1..=3);
    let mut modes = Vec::new();
    let mut inv_boxes = Vec::new();
    for k in 0..n_modes {
        let mut boxes = vec![random_box(rng, &vars)];
        if rng.random_bool(0.2) {
            boxes.push(random_box(rng, &vars));
        }
        let invariant = Predicate::from_boxes(&boxes);
        let init = if k == 0 {
            let p = point_in(rng, &boxes[0], &vars);
            Predicate::from_rect(&Rectangle::from_bounds(p.iter().map(|(v, x)| (v.to_string(), Interval::point(x)))))
        } else {
            Predicate::False
        };
        let flow = vars
            .iter()
            .map(|v| {
                let f = if rng.random_bool(0.8) {
                    VarFlow::affine([-1.0, -0.5, 0.0, 0.5, 1.0][rng.random_range(0..5)], half(rng, -2, 2))
                } else {
                    let lo = half(rng, -2, 1);
                    VarFlow::Rect(Interval::closed(lo, lo + half(rng, 0, 2)).unwrap())
                };
                (v.clone(), f)
            })
            .collect();
        modes.push(Mode::new(format!("M{k}"), invariant, init, flow));
        inv_boxes.push(boxes);
    }
    let mut transitions = Vec::new();
    for _ in 0..rng.random_range(0..=3) {
        let src = rng.random_range(0..n_modes);
        let pre = if rng.random_bool(0.3) {
            Predicate::True
        } else {
            Predicate::from_rect(&random_box(rng, &vars))
        };
        let k = rng.random_range(1..=3);
        let mut outcomes = Vec::new();
        let mut pos = BTreeMap::new();
        for p in split_mass(rng, k) {
            let tgt = rng.random_range(0..n_modes);
            let post = (0..rng.random_range(1..=2))
                .map(|_| {
                    let land = point_in(rng, &inv_boxes[tgt][0], &vars);
                    vars.iter()
                        .map(|v| {
                            let sv = if rng.random_bool(0.4) {
                                StarValue::Star
                            } else {
                                StarValue::Value(land.get(v).unwrap())
                            };
                            (v.clone(), sv)
                        })
                        .collect::<StarValuation>()
                })
                .collect();
            let target = modes[tgt].name.clone();
            if rng.random_bool(0.3) && !pos.contains_key(&target) {
                pos.insert(target.clone(), Predicate::from_rect(&random_box(rng, &vars)));
            }
            outcomes.push(Outcome { prob: p, target, post });
        }
        transitions.push(ProbTransition {
            source: modes[src].name.clone(),
            action: actions[rng.random_range(0..2)].clone(),
            pre,
            outcomes,
            pos,
            note: None,
        });
    }
    Pha {
        variables: vars,
        actions,
        modes,
        transitions,
    }
}

/// States worth probing: points of the guards and of the invariants.
pub fn probe_states(pha: &Pha, rng: &mut ChaCha8Rng, n: usize) -> Vec<(String, Valuation)> {
    let mut out = Vec::new();
    for t in &pha.transitions {
        for b in t.pre.boxes() {
            let src = pha.mode(&t.source).unwrap();
            for ib in src.invariant.boxes() {
                if let Some(r) = b.intersect(&ib) {
                    out.push((t.source.clone(), point_in(rng, &r, &pha.variables)));
                }
            }
        }
    }
    while out.len() < n {
        let m = &pha.modes[rng.random_range(0..pha.modes.len())];
        let boxes = m.invariant.boxes();
        let b = &boxes[rng.random_range(0..boxes.len())];
        out.push((m.name.clone(), point_in(rng, b, &pha.variables)));
    }
    out
}

/// One entry per (distribution, post combination): the successor list without any
/// merging of equal states.
pub type RawDistribution = (usize, Vec<(String, Valuation, f64)>);

/// Plain nested enumeration of every post combination.
pub fn brute_force_successors(pha: &Pha, mode: &str, val: &Valuation, action: &str) -> Vec<RawDistribution> {
    let mut out = Vec::new();
    for (k, t) in pha.transitions.iter().enumerate() {
        if t.source != mode || t.action != action || !t.pre.holds(val) {
            continue;
        }
        let mut combos: Vec<Vec<usize>> = vec![vec![]];
        for o in &t.outcomes {
            let mut next = Vec::new();
            for c in &combos {
                for i in 0..o.post.len() {
                    let mut c2 = c.clone();
                    c2.push(i);
                    next.push(c2);
                }
            }
            combos = next;
        }
        for c in combos {
            let mut entries = Vec::new();
            for (o, &i) in t.outcomes.iter().zip(&c) {
                let d = &o.post[i];
                let mut land = Valuation::new();
                for v in &pha.variables {
                    let x = match d.get(v).unwrap() {
                        StarValue::Star => val.get(v).unwrap(),
                        StarValue::Value(x) => x,
                    };
                    land.set(v, x);
                }
                let pos = t.pos.get(&o.target).cloned().unwrap_or(Predicate::True);
                let inv = &pha.mode(&o.target).unwrap().invariant;
                if pos.holds(&land) && inv.holds(&land) {
                    entries.push((o.target.clone(), land, o.prob));
                }
            }
            if !entries.is_empty() {
                out.push((k, entries));
            }
        }
    }
    out
}
