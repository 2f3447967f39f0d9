use rand::Rng;

use crate::clock::TranslationWitness;
use crate::geometry::{fmt_num, Interval, Rectangle, TOL};
use crate::model::Pha;
use crate::predicate::{CmpOp, Predicate};

use super::checks::{lump, run_parallel, same_weights, sample_states, show_weights};
use super::flow_step::{path_horizon, Reach, Trajectory};
use super::{discrete_successors, flow_successor, CheckConfig, CheckReport, Counterexample, State};

fn eta_state(w: &TranslationWitness, s: &State) -> Option<State> {
    w.eta(&s.mode, &s.valuation).map(|(m, v)| State::new(m, v))
}

fn cx(state: &State, step: impl Into<String>, expected: impl Into<String>, actual: impl Into<String>) -> Counterexample {
    Counterexample {
        state: state.to_string(),
        step: step.into(),
        expected: expected.into(),
        actual: actual.into(),
    }
}

fn boxes_match(a: &[Rectangle], b: &[Rectangle]) -> bool {
    let same = |x: &Rectangle, y: &Rectangle| {
        x.bounds().keys().chain(y.bounds().keys()).all(|v| {
            let (i, j) = (x.get(v), y.get(v));
            (i.lower() - j.lower()).abs() <= 1e-6 && (i.upper() - j.upper()).abs() <= 1e-6
        })
    };
    a.iter().all(|x| b.iter().any(|y| same(x, y))) && b.iter().all(|y| a.iter().any(|x| same(x, y)))
}

/// Map a translated reach through η: the clock axis becomes the variable's point value.
fn eta_reach(w: &TranslationWitness, r: &Reach) -> Option<Reach> {
    let copy = w.copy(&r.mode)?;
    let g = copy.solution();
    let boxes = r
        .boxes
        .iter()
        .map(|b| {
            let t = b.get(&w.clock);
            let mut out = Rectangle::from_bounds(
                b.bounds()
                    .iter()
                    .filter(|(k, _)| **k != w.clock)
                    .map(|(k, i)| (k.clone(), *i)),
            );
            out.set(&w.variable, Interval::point(g.at(t.lower().max(0.0))));
            out
        })
        .collect();
    Some(Reach {
        mode: copy.original.clone(),
        boxes,
    })
}

fn check_state(
    original: &Pha,
    translated: &Pha,
    w: &TranslationWitness,
    actions: &[String],
    s: &State,
    rng: &mut impl Rng,
) -> Vec<Counterexample> {
    let mut out = Vec::new();
    let Some(o) = eta_state(w, s) else {
        out.push(cx(s, "η", "a related original state", "none"));
        return out;
    };
    if !o.is_valid(original) {
        out.push(cx(s, "η", "a state inside the original invariant", o.to_string()));
        return out;
    }
    let tmode = translated.mode(&s.mode).expect("sampled mode");
    let omode = original.mode(&o.mode).expect("η mode");
    if tmode.init.holds(&s.valuation) && !omode.init.holds(&o.valuation) {
        out.push(cx(s, "init", "a non-initial state", format!("initial, related to {o}")));
    }

    for a in actions {
        let ours: Vec<_> = discrete_successors(translated, s, a)
            .into_iter()
            .map(|d| lump(&d.weights, |t| eta_state(w, t)))
            .collect();
        let theirs = discrete_successors(original, &o, a);
        for l in &ours {
            match l {
                Err(bad) => out.push(cx(s, a.as_str(), "successors inside η's domain", bad.to_string())),
                Ok(l) if !theirs.iter().any(|d| same_weights(l, &d.weights)) => out.push(cx(
                    s,
                    a.as_str(),
                    format!("one of {} original distributions", theirs.len()),
                    show_weights(l),
                )),
                Ok(_) => {}
            }
        }
        for d in &theirs {
            if !ours.iter().any(|l| l.as_ref().is_ok_and(|l| same_weights(l, &d.weights))) {
                out.push(cx(s, a.as_str(), show_weights(&d.weights), "no matching translated distribution"));
            }
        }
    }

    let horizon = Trajectory::affine(omode, &o.valuation)
        .and_then(|tr| path_horizon(&omode.invariant.boxes(), &tr))
        .map_or(0.0, |(t, _)| t);
    let cap = if horizon.is_finite() { horizon } else { 5.0 };
    let mut durations = vec![0.0, cap / 3.0, cap / 2.0, cap, cap + 0.5, rng.random_range(0.0..=cap.max(TOL))];
    durations.dedup();
    for sigma in durations {
        let step = format!("flow {}", fmt_num(sigma));
        let (Ok(rt), Ok(ro)) = (flow_successor(translated, s, sigma), flow_successor(original, &o, sigma)) else {
            continue;
        };
        match (rt.is_empty(), ro.is_empty()) {
            (true, true) => {}
            (false, true) => out.push(cx(s, step, "no flow successor", "a flow successor")),
            (true, false) => out.push(cx(s, step, "a flow successor", "no flow successor")),
            (false, false) => match eta_reach(w, &rt) {
                Some(image) if image.mode == ro.mode && boxes_match(&image.boxes, &ro.boxes) => {}
                Some(image) => out.push(cx(s, step, format!("{:?}", ro.boxes), format!("{:?}", image.boxes))),
                None => out.push(cx(s, step, "a related reach", "none")),
            },
        }
    }
    out
}

/// Sampling check that η is a probabilistic bisimulation between `translated` and
/// `original`: related states agree on invariants, initiality, discrete successor
/// distributions (after lumping through η) and flow successors.
pub fn check_clock_bisim(
    original: &Pha,
    translated: &Pha,
    witness: &TranslationWitness,
    cfg: &CheckConfig,
) -> CheckReport {
    let mut actions: Vec<String> = original.actions.clone();
    for a in &translated.actions {
        if !actions.contains(a) {
            actions.push(a.clone());
        }
    }
    // clocks only run forward from 0, so negative readings are unreachable
    let mut forward = translated.clone();
    for m in &mut forward.modes {
        m.invariant = Predicate::And(vec![Predicate::atom(&witness.clock, CmpOp::Ge, 0.0), m.invariant.clone()]).simplify();
    }
    let states = sample_states(&forward, cfg.samples, cfg.seed);
    let mut found = Vec::new();
    for m in &translated.modes {
        if witness.copy(&m.name).is_none() {
            found.push(Counterexample {
                state: m.name.clone(),
                step: "η".into(),
                expected: "a copy listed in the witness".into(),
                actual: "unknown mode".into(),
            });
        }
    }
    found.extend(run_parallel(&states, cfg, |s, rng| {
        if witness.copy(&s.mode).is_none() {
            return Vec::new();
        }
        check_state(original, translated, witness, &actions, s, rng)
    }));
    let originals = sample_states(original, cfg.samples, cfg.seed ^ 0x5eed);
    for o in originals.iter().filter(|o| original.mode(&o.mode).is_some_and(|m| m.init.holds(&o.valuation))) {
        if !has_initial_preimage(translated, witness, o) {
            found.push(cx(o, "init", "a related initial translated state", "none"));
        }
    }
    for o in initial_points(original, witness) {
        if !has_initial_preimage(translated, witness, &o) {
            found.push(cx(&o, "init", "a related initial translated state", "none"));
        }
    }
    found.truncate(cfg.max_counterexamples);
    CheckReport::from_parts(found, states.len() + originals.len())
}

fn has_initial_preimage(translated: &Pha, w: &TranslationWitness, o: &State) -> bool {
    let Some(x) = o.valuation.get(&w.variable) else {
        return false;
    };
    w.copies_of(&o.mode).any(|c| {
        let Some(t) = c.solution().invert(x) else {
            return false;
        };
        let mut v = o.valuation.clone();
        v.remove(&w.variable);
        v.set(&w.clock, t);
        translated.mode(&c.mode).is_some_and(|m| m.init.holds(&v))
    })
}

/// Original initial states built from the starting values recorded in the witness; grid
/// sampling rarely hits point-valued initial sets.
fn initial_points(original: &Pha, w: &TranslationWitness) -> Vec<State> {
    let mut out = Vec::new();
    for c in &w.copies {
        let Some(m) = original.mode(&c.original) else {
            continue;
        };
        for b in m.init.boxes() {
            let mut v = b.witness_point(&original.variables);
            v.set(&w.variable, c.start);
            if m.init.holds(&v) {
                out.push(State::new(m.name.clone(), v));
            }
        }
    }
    out
}
