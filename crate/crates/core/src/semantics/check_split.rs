use rand::Rng;

use crate::geometry::{fmt_num, TOL};
use crate::model::{Pha, VarFlow, TAU};
use crate::split::SplitWitness;

use super::checks::{lump, run_parallel, same_weights, sample_states, show_weights};
use super::closure::{default_depth, weak_closure};
use super::flow_step::{path_horizon, within_horizon, Trajectory};
use super::{discrete_successors, flow_successor, CheckConfig, CheckReport, Counterexample, State};

/// Which relation [`check_split_sim`] checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Split and source simulate each other, up to τ-moves between copies.
    SplitBisim,
    /// The derived automaton simulates the source.
    ApproxSim,
}

fn cx(state: &State, step: impl Into<String>, expected: impl Into<String>, actual: impl Into<String>) -> Counterexample {
    Counterexample {
        state: state.to_string(),
        step: step.into(),
        expected: expected.into(),
        actual: actual.into(),
    }
}

struct Ctx<'a> {
    original: &'a Pha,
    derived: &'a Pha,
    witness: &'a SplitWitness,
    mode: SimMode,
    depth: usize,
}

impl Ctx<'_> {
    fn project(&self, s: &State) -> Option<State> {
        let copy = self.witness.copy(&s.mode)?;
        Some(State::new(copy.original.clone(), s.valuation.clone()))
    }

    /// Derived states related to an original one.
    fn related(&self, o: &State) -> Vec<State> {
        self.witness
            .copies_of(&o.mode)
            .map(|c| State::new(c.mode.clone(), o.valuation.clone()))
            .filter(|d| d.is_valid(self.derived))
            .collect()
    }

    fn check_original(&self, o: &State, rng: &mut impl Rng) -> Vec<Counterexample> {
        let mut out = Vec::new();
        let related = self.related(o);
        if related.is_empty() {
            out.push(cx(o, "relation", "a related copy", "none"));
            return out;
        }
        let omode = self.original.mode(&o.mode).expect("sampled mode");
        if omode.init.holds(&o.valuation)
            && !related
                .iter()
                .any(|d| self.derived.mode(&d.mode).is_some_and(|m| m.init.holds(&d.valuation)))
        {
            out.push(cx(o, "init", "a related initial copy", "none"));
        }
        for d in &related {
            self.check_discrete(o, d, &mut out);
            if self.mode == SimMode::ApproxSim {
                self.check_slopes(o, d, &mut out);
            }
        }
        self.check_flow(o, rng, &mut out);
        out
    }

    fn check_discrete(&self, o: &State, d: &State, out: &mut Vec<Counterexample>) {
        for a in &self.original.actions {
            let theirs = discrete_successors(self.original, o, a);
            if theirs.is_empty() && self.mode == SimMode::ApproxSim {
                continue;
            }
            let closure = weak_closure(self.derived, d, a, self.depth);
            let ours: Vec<_> = closure
                .distributions
                .iter()
                .filter_map(|n| lump(&n.weights, |s| self.project(s)).ok())
                .collect();
            for mu in &theirs {
                if !ours.iter().any(|l| same_weights(l, &mu.weights)) {
                    let got = ours.iter().map(|l| show_weights(l)).collect::<Vec<_>>().join(" | ");
                    out.push(cx(
                        o,
                        format!("{a} from {}", d.mode),
                        show_weights(&mu.weights),
                        if got.is_empty() { "nothing".to_string() } else { got },
                    ));
                }
            }
            if self.mode == SimMode::ApproxSim {
                continue;
            }
            for n in discrete_successors(self.derived, d, a) {
                let Ok(l) = lump(&n.weights, |s| self.project(s)) else {
                    out.push(cx(o, format!("{a} from {}", d.mode), "successors inside known copies", n.to_string()));
                    continue;
                };
                let stutter = a == TAU && l.len() == 1 && l[0].0.approx_eq(o) && (l[0].1 - 1.0).abs() <= TOL;
                if !stutter && !theirs.iter().any(|mu| same_weights(&l, &mu.weights)) {
                    out.push(cx(
                        o,
                        format!("{a} from {}", d.mode),
                        "a matching original distribution",
                        show_weights(&l),
                    ));
                }
            }
        }
    }

    fn check_slopes(&self, o: &State, d: &State, out: &mut Vec<Counterexample>) {
        let omode = self.original.mode(&o.mode).expect("original mode");
        let dmode = self.derived.mode(&d.mode).expect("derived mode");
        for (var, x) in o.valuation.iter() {
            let (Some(VarFlow::Affine(f)), Some(VarFlow::Rect(bounds))) = (omode.flow.get(var), dmode.flow.get(var)) else {
                continue;
            };
            let slope = f.derivative(x);
            if !bounds.contains(slope) {
                out.push(cx(
                    o,
                    format!("flow in {}", d.mode),
                    format!("{var}' within {bounds}"),
                    format!("{var}={} slope {} outside {bounds}", fmt_num(x), fmt_num(slope)),
                ));
            }
        }
    }

    /// Follow the original trajectory for a sampled duration through the copies, switching
    /// copy where the current one is left, and check every segment endpoint is reachable
    /// in the derived automaton.
    fn check_flow(&self, o: &State, rng: &mut impl Rng, out: &mut Vec<Counterexample>) {
        let omode = self.original.mode(&o.mode).expect("original mode");
        let Some(traj) = Trajectory::affine(omode, &o.valuation) else {
            return;
        };
        let Some((horizon, closed)) = path_horizon(&omode.invariant.boxes(), &traj) else {
            return;
        };
        let cap = if horizon.is_finite() { horizon } else { 5.0 };
        if cap <= TOL {
            return;
        }
        let mut sigmas = vec![rng.random_range(0.0..cap)];
        if closed && horizon.is_finite() {
            sigmas.push(horizon);
        }
        for sigma in sigmas {
            if let Err(c) = self.follow(o, &traj, sigma) {
                out.push(c);
            }
        }
    }

    fn follow(&self, o: &State, traj: &Trajectory, sigma: f64) -> Result<(), Counterexample> {
        let step = format!("flow {}", fmt_num(sigma));
        let mut t0 = 0.0;
        let mut current: Option<String> = None;
        for _ in 0..=2 * self.derived.modes.len() {
            let here = traj.at(t0);
            let here_state = State::new(o.mode.clone(), here.clone());
            // prefer the copy that stays valid longest from here
            let mut best: Option<(String, f64, bool)> = None;
            for d in self.related(&here_state) {
                if current.as_deref() == Some(d.mode.as_str()) && t0 > 0.0 {
                    continue;
                }
                let dmode = self.derived.mode(&d.mode).expect("derived mode");
                let seg = Trajectory::affine(self.original.mode(&o.mode).expect("mode"), &here)
                    .and_then(|tr| path_horizon(&dmode.invariant.boxes(), &tr));
                if let Some((h, c)) = seg {
                    if best.as_ref().is_none_or(|(_, bh, _)| h > *bh) {
                        best = Some((d.mode.clone(), h, c));
                    }
                }
            }
            let Some((copy, h, c)) = best else {
                return Err(cx(o, step, "a copy containing the trajectory", format!("none at time {}", fmt_num(t0))));
            };
            let remaining = sigma - t0;
            let end = if within_horizon(remaining, (h, c)) { sigma } else { t0 + h };
            if end <= t0 + TOL && end < sigma - TOL {
                return Err(cx(o, step, "progress along the trajectory", format!("stuck in {copy} at {}", fmt_num(t0))));
            }
            let target = traj.at(end);
            let reach = flow_successor(self.derived, &State::new(copy.clone(), here), end - t0)
                .map_err(|e| cx(o, step.clone(), "a flow successor", e.to_string()))?;
            let ok = match self.mode {
                SimMode::ApproxSim => reach.contains(&target),
                SimMode::SplitBisim => reach
                    .point(&self.derived.variables)
                    .is_some_and(|p| p.approx_eq(&target)),
            };
            if !ok {
                return Err(cx(o, step, format!("{target} reachable in {copy}"), format!("{:?}", reach.boxes)));
            }
            if end >= sigma - TOL {
                return Ok(());
            }
            t0 = end;
            current = Some(copy);
        }
        Err(cx(o, step, "a finite chain of copies", "too many switches"))
    }
}

/// Sampling check of the relation between an automaton and its split or approximation.
///
/// Original states are related to every copy whose invariant holds. Each original successor
/// distribution must be matched, after projecting copies back, by a distribution reachable
/// through τ-moves between copies, and the original flow must be reproducible by switching
/// copies. [`SimMode::SplitBisim`] also requires every derived distribution to match an
/// original one; τ-moves that stay on the related state count as stuttering.
pub fn check_split_sim(
    original: &Pha,
    derived: &Pha,
    witness: &SplitWitness,
    mode: SimMode,
    cfg: &CheckConfig,
) -> CheckReport {
    let ctx = Ctx {
        original,
        derived,
        witness,
        mode,
        depth: default_depth(derived),
    };
    let states = sample_states(original, cfg.samples, cfg.seed);
    let mut found = run_parallel(&states, cfg, |o, rng| ctx.check_original(o, rng));
    let mut used = states.len();
    if mode == SimMode::SplitBisim {
        let extra = sample_states(derived, cfg.samples / 2, cfg.seed ^ 0x5eed);
        used += extra.len();
        for d in &extra {
            match ctx.project(d) {
                Some(o) if o.is_valid(original) => {}
                Some(o) => found.push(cx(d, "relation", "a state inside the original invariant", o.to_string())),
                None => found.push(cx(d, "relation", "a copy listed in the witness", "unknown mode")),
            }
        }
    }
    found.truncate(cfg.max_counterexamples);
    CheckReport::from_parts(found, used)
}
