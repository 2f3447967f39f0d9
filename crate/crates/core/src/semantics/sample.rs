use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{fmt_num, Interval, TOL};
use crate::model::{Pha, VarFlow};

use super::flow_step::{path_horizon, within_horizon, Trajectory};
use super::successors::{discrete_successors, SuccessorDistribution};
use super::State;

/// A scheduler's choice in some state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Flow,
    Jump(usize),
}

/// Resolves the nondeterminism between letting time pass and the enabled distributions.
pub trait Scheduler {
    fn choose(
        &mut self,
        state: &State,
        can_flow: bool,
        jumps: &[SuccessorDistribution],
        rng: &mut ChaCha8Rng,
    ) -> Option<Choice>;
}

/// Picks uniformly among flowing (when possible) and every enabled distribution.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformScheduler;

impl Scheduler for UniformScheduler {
    fn choose(
        &mut self,
        _state: &State,
        can_flow: bool,
        jumps: &[SuccessorDistribution],
        rng: &mut ChaCha8Rng,
    ) -> Option<Choice> {
        let n = jumps.len() + usize::from(can_flow);
        if n == 0 {
            return None;
        }
        let k = rng.random_range(0..n);
        Some(if can_flow && k == jumps.len() {
            Choice::Flow
        } else {
            Choice::Jump(k)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Flow {
        duration: f64,
        /// Slopes chosen for rectangular flows.
        slopes: BTreeMap<String, f64>,
        to: State,
    },
    Jump {
        action: String,
        transition: usize,
        to: State,
    },
}

impl Step {
    pub fn target(&self) -> &State {
        match self {
            Step::Flow { to, .. } | Step::Jump { to, .. } => to,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceConfig {
    /// Total time to simulate.
    pub horizon: f64,
    /// Longest single flow step.
    pub dt: f64,
    pub seed: u64,
    /// Steps after which the run is cut off, e.g. for Zeno behaviour.
    pub max_steps: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            horizon: 10.0,
            dt: 0.5,
            seed: 0,
            max_steps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub initial: State,
    pub steps: Vec<Step>,
    pub seed: u64,
    /// Time covered by the trace.
    pub elapsed: f64,
    /// No move was possible before the horizon.
    pub deadlocked: bool,
    /// The step bound was hit before the horizon.
    pub truncated: bool,
}

impl Trace {
    pub fn last(&self) -> &State {
        self.steps.last().map_or(&self.initial, Step::target)
    }

    /// Visited states with the time they were entered.
    pub fn timed_states(&self) -> Vec<(f64, &State)> {
        let mut t = 0.0;
        let mut out = vec![(0.0, &self.initial)];
        for s in &self.steps {
            if let Step::Flow { duration, .. } = s {
                t += duration;
            }
            out.push((t, s.target()));
        }
        out
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}: {}", self.seed, self.initial)?;
        let mut t = 0.0;
        for s in &self.steps {
            match s {
                Step::Flow { duration, to, .. } => {
                    t += duration;
                    writeln!(f, "  t={:<10} flow {} -> {to}", fmt_num(t), fmt_num(*duration))?;
                }
                Step::Jump { action, to, .. } => writeln!(f, "  t={:<10} {action} -> {to}", fmt_num(t))?,
            }
        }
        if self.deadlocked {
            writeln!(f, "  deadlock at t={}", fmt_num(self.elapsed))?;
        }
        if self.truncated {
            writeln!(f, "  truncated after {} steps", self.steps.len())?;
        }
        Ok(())
    }
}

fn uniform_in(iv: &Interval, rng: &mut ChaCha8Rng) -> f64 {
    let lo = iv.lower().max(-1e3);
    let hi = iv.upper().min(lo + 1e3).max(lo);
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// A random initial state of `pha`.
pub(crate) fn initial_state(pha: &Pha, rng: &mut ChaCha8Rng) -> Result<State> {
    let candidates: Vec<_> = pha
        .modes
        .iter()
        .flat_map(|m| m.init.boxes().into_iter().map(move |b| (m, b)))
        .collect();
    if candidates.is_empty() {
        return Err(Error::Model("no mode has a satisfiable initial condition".into()));
    }
    for _ in 0..1000 {
        let (m, b) = &candidates[rng.random_range(0..candidates.len())];
        let v = pha
            .variables
            .iter()
            .map(|x| (x.clone(), uniform_in(&b.get(x), rng)))
            .collect();
        let s = State::new(m.name.clone(), v);
        if m.init.holds(&s.valuation) && s.is_valid(pha) {
            return Ok(s);
        }
    }
    Err(Error::Model("could not sample an initial state inside an invariant".into()))
}

/// Sample one run from a random initial state.
pub fn sample_trace(pha: &Pha, cfg: &TraceConfig, scheduler: &mut dyn Scheduler) -> Result<Trace> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = initial_state(pha, &mut rng)?;
    run(pha, start, cfg, scheduler, &mut rng)
}

/// Sample one run from `state`.
pub fn sample_trace_from(
    pha: &Pha,
    state: &State,
    cfg: &TraceConfig,
    scheduler: &mut dyn Scheduler,
) -> Result<Trace> {
    if !state.is_valid(pha) {
        return Err(Error::Model(format!("{state} violates its invariant")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    run(pha, state.clone(), cfg, scheduler, &mut rng)
}

fn run(
    pha: &Pha,
    start: State,
    cfg: &TraceConfig,
    scheduler: &mut dyn Scheduler,
    rng: &mut ChaCha8Rng,
) -> Result<Trace> {
    if !(cfg.dt > 0.0) || !(cfg.horizon >= 0.0) {
        return Err(Error::Domain(format!(
            "need dt > 0 and horizon >= 0, got dt={} horizon={}",
            cfg.dt, cfg.horizon
        )));
    }
    let mut trace = Trace {
        initial: start.clone(),
        steps: Vec::new(),
        seed: cfg.seed,
        elapsed: 0.0,
        deadlocked: false,
        truncated: false,
    };
    let mut state = start;
    while trace.elapsed < cfg.horizon - TOL {
        if trace.steps.len() >= cfg.max_steps {
            trace.truncated = true;
            break;
        }
        let mode = pha
            .mode(&state.mode)
            .ok_or_else(|| Error::Model(format!("unknown mode `{}`", state.mode)))?;
        let slopes: BTreeMap<String, f64> = mode
            .flow
            .iter()
            .filter_map(|(v, f)| match f {
                VarFlow::Rect(iv) => Some((v.clone(), uniform_in(iv, rng))),
                VarFlow::Affine(_) => None,
            })
            .collect();
        let horizon = Trajectory::with_slopes(mode, &state.valuation, &slopes).and_then(|tr| {
            let boxes: Vec<_> = mode
                .invariant
                .boxes()
                .into_iter()
                .filter(|b| slopes.is_empty() || b.contains(&state.valuation))
                .collect();
            path_horizon(&boxes, &tr).map(|h| (tr, h))
        });
        let can_flow = horizon.as_ref().is_some_and(|(_, (t, _))| *t > TOL);
        let jumps: Vec<SuccessorDistribution> = pha
            .actions
            .iter()
            .flat_map(|a| discrete_successors(pha, &state, a))
            .collect();
        match scheduler.choose(&state, can_flow, &jumps, rng) {
            None => {
                trace.deadlocked = true;
                break;
            }
            Some(Choice::Flow) => {
                let (tr, (t, closed)) = horizon.expect("flow allowed");
                let mut sigma = cfg.dt.min(cfg.horizon - trace.elapsed).min(t);
                if !within_horizon(sigma, (t, closed)) {
                    sigma = t * (1.0 - 1e-9);
                }
                let to = State::new(state.mode.clone(), tr.at(sigma));
                trace.elapsed += sigma;
                trace.steps.push(Step::Flow {
                    duration: sigma,
                    slopes,
                    to: to.clone(),
                });
                state = to;
            }
            Some(Choice::Jump(k)) => {
                let d = jumps
                    .get(k)
                    .ok_or_else(|| Error::Model(format!("scheduler chose missing distribution {k}")))?;
                let total = d.mass();
                let mut u = rng.random_range(0.0..total);
                let mut to = &d.weights[d.weights.len() - 1].0;
                for (s, p) in &d.weights {
                    if u < *p {
                        to = s;
                        break;
                    }
                    u -= p;
                }
                trace.steps.push(Step::Jump {
                    action: d.action.clone(),
                    transition: d.transition,
                    to: to.clone(),
                });
                state = to.clone();
            }
        }
    }
    Ok(trace)
}
