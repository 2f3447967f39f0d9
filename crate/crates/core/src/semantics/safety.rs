use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Interval, Rectangle};
use crate::model::{Pha, StarValue, VarFlow};
use crate::predicate::{bound_flow, Predicate};

use super::flow_step::Trajectory;
use super::sample::{initial_state, Step, TraceConfig, UniformScheduler};
use super::State;

/// Monte-Carlo estimate of reaching an unsafe set within a time bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyEstimate {
    pub traces: usize,
    pub hits: usize,
    pub probability: f64,
    /// Wilson score interval at 95%.
    pub interval: (f64, f64),
    /// Runs cut off by the step bound before the horizon.
    pub truncated: usize,
    /// For automata with rectangular flows: whether interval exploration finds the unsafe
    /// set possibly reachable, regardless of time.
    pub box_reachable: Option<bool>,
}

fn wilson(hits: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = n as f64;
    let p = hits as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn trace_seed(seed: u64, i: usize) -> u64 {
    // splitmix64 step, so neighbouring seeds give unrelated streams
    let mut z = seed.wrapping_add((i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn in_unsafe(unsafe_set: &BTreeMap<String, Predicate>, s: &State) -> bool {
    unsafe_set.get(&s.mode).is_some_and(|p| p.holds(&s.valuation))
}

/// Whether the flow segment from `from` enters the unsafe set, checked exactly against
/// the unsafe boxes rather than at sample points.
fn segment_hits(
    pha: &Pha,
    unsafe_set: &BTreeMap<String, Predicate>,
    from: &State,
    duration: f64,
    slopes: &BTreeMap<String, f64>,
) -> bool {
    let (Some(p), Some(mode)) = (unsafe_set.get(&from.mode), pha.mode(&from.mode)) else {
        return false;
    };
    let Some(tr) = Trajectory::with_slopes(mode, &from.valuation, slopes) else {
        return false;
    };
    let Some(window) = Interval::closed(0.0, duration) else {
        return false;
    };
    p.boxes()
        .iter()
        .filter_map(|b| tr.times_in(b))
        .any(|ts| ts.intersect(&window).is_some())
}

/// Estimate the probability that a run under the uniform scheduler reaches `unsafe_set`
/// (a predicate per mode) within `horizon` time units.
pub fn check_safety_bounded(
    pha: &Pha,
    unsafe_set: &BTreeMap<String, Predicate>,
    horizon: f64,
    traces: usize,
    seed: u64,
) -> Result<SafetyEstimate> {
    for m in unsafe_set.keys() {
        if pha.mode(m).is_none() {
            return Err(Error::Model(format!("unsafe set names unknown mode `{m}`")));
        }
    }
    let results: Vec<Result<(bool, bool)>> = (0..traces)
        .into_par_iter()
        .map(|i| {
            let s = trace_seed(seed, i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let start = initial_state(pha, &mut rng)?;
            let cfg = TraceConfig {
                horizon,
                dt: horizon.max(1.0),
                seed: s,
                ..Default::default()
            };
            let trace = super::sample::sample_trace_from(pha, &start, &cfg, &mut UniformScheduler)?;
            let mut hit = in_unsafe(unsafe_set, &trace.initial);
            let mut prev = &trace.initial;
            for step in &trace.steps {
                if hit {
                    break;
                }
                hit = match step {
                    Step::Flow { duration, slopes, .. } => segment_hits(pha, unsafe_set, prev, *duration, slopes),
                    Step::Jump { to, .. } => in_unsafe(unsafe_set, to),
                };
                prev = step.target();
            }
            Ok((hit, trace.truncated))
        })
        .collect();
    let mut hits = 0;
    let mut truncated = 0;
    for r in results {
        let (h, t) = r?;
        hits += usize::from(h);
        truncated += usize::from(t);
    }
    let rectangular = pha
        .modes
        .iter()
        .any(|m| m.flow.values().any(|f| matches!(f, VarFlow::Rect(_))));
    let box_reachable = rectangular.then(|| {
        let r = box_reachability(pha, 1000);
        unsafe_set.iter().any(|(m, p)| r.may_reach(m, p))
    });
    Ok(SafetyEstimate {
        box_reachable,
        traces,
        hits,
        probability: if traces == 0 { 0.0 } else { hits as f64 / traces as f64 },
        interval: wilson(hits, traces),
        truncated,
    })
}

/// Over-approximation of the reachable states as one box per mode and invariant box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxReachability {
    pub reached: BTreeMap<String, Vec<Rectangle>>,
    pub converged: bool,
    pub iterations: usize,
}

impl BoxReachability {
    pub fn may_reach(&self, mode: &str, p: &Predicate) -> bool {
        let Some(boxes) = self.reached.get(mode) else {
            return false;
        };
        let target = p.boxes();
        boxes
            .iter()
            .any(|b| target.iter().any(|t| b.intersect(t).is_some()))
    }
}

fn slope_range(flow: &VarFlow, range: &Interval) -> Interval {
    match flow {
        VarFlow::Rect(iv) => *iv,
        VarFlow::Affine(f) => bound_flow(f, range).unwrap_or_else(|_| Interval::full()),
    }
}

fn elapse(pha: &Pha, mode: &str, start: &Rectangle, inv: &Rectangle) -> Rectangle {
    let m = pha.mode(mode).expect("known mode");
    let mut out = start.clone();
    for var in &pha.variables {
        let (s, bound) = (start.get(var), inv.get(var));
        let slopes = m.flow.get(var).map_or(Interval::point(0.0), |f| slope_range(f, &bound));
        let lo = if slopes.lower() < 0.0 { bound.lower() } else { s.lower() };
        let hi = if slopes.upper() > 0.0 { bound.upper() } else { s.upper() };
        let grown = Interval::new(lo, hi, true, true).unwrap_or(s);
        out.set(var, grown.intersect(&bound).unwrap_or(s));
    }
    out
}

/// Interval fixpoint: time elapse by the sign of the slopes inside each invariant box,
/// then discrete posts, joining per invariant box until nothing grows.
pub fn box_reachability(pha: &Pha, max_iterations: usize) -> BoxReachability {
    let mut reached: BTreeMap<String, Vec<Option<Rectangle>>> = pha
        .modes
        .iter()
        .map(|m| (m.name.clone(), vec![None; m.invariant.boxes().len()]))
        .collect();
    let add = |reached: &mut BTreeMap<String, Vec<Option<Rectangle>>>, mode: &str, r: &Rectangle| -> bool {
        let inv = pha.mode(mode).expect("known mode").invariant.boxes();
        let mut grew = false;
        for (slot, b) in reached.get_mut(mode).expect("known mode").iter_mut().zip(&inv) {
            let Some(part) = r.intersect(b) else { continue };
            let next = match slot {
                Some(old) if old.contains_rect(&part) => continue,
                Some(old) => old.hull(&part),
                None => part,
            };
            *slot = Some(elapse(pha, mode, &next, b));
            grew = true;
        }
        grew
    };
    for m in &pha.modes {
        for b in m.init.boxes() {
            add(&mut reached, &m.name, &b);
        }
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        iterations += 1;
        let mut grew = false;
        let snapshot = reached.clone();
        for t in &pha.transitions {
            for r in snapshot[&t.source].iter().flatten() {
                for pre in t.pre.boxes() {
                    let Some(g) = r.intersect(&pre) else { continue };
                    for o in &t.outcomes {
                        for d in &o.post {
                            let mut landing = g.clone();
                            for var in &pha.variables {
                                if let Some(StarValue::Value(c)) = d.get(var) {
                                    landing.set(var, Interval::point(c));
                                }
                            }
                            for pos in t.pos_for(&o.target).boxes() {
                                if let Some(l) = landing.intersect(&pos) {
                                    grew |= add(&mut reached, &o.target, &l);
                                }
                            }
                        }
                    }
                }
            }
        }
        if !grew {
            converged = true;
            break;
        }
    }
    BoxReachability {
        reached: reached
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().flatten().collect()))
            .collect(),
        converged,
        iterations,
    }
}
