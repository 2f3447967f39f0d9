use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{fmt_num, Interval, Rectangle, TOL};
use crate::model::{Pha, Valuation};

use super::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

/// One falsified instance of the checked relation.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub state: String,
    /// The action or duration that was checked.
    pub step: String,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "at {} after {}: expected {}, got {}",
            self.state, self.step, self.expected, self.actual
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub counterexamples: Vec<Counterexample>,
    pub samples_used: usize,
}

impl CheckReport {
    pub(crate) fn from_parts(counterexamples: Vec<Counterexample>, samples_used: usize) -> Self {
        let verdict = if counterexamples.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        CheckReport {
            verdict,
            counterexamples,
            samples_used,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.verdict {
            Verdict::Pass => write!(f, "pass ({} sampled states)", self.samples_used),
            Verdict::Fail => {
                write!(
                    f,
                    "FAIL: {} counterexample(s) over {} sampled states",
                    self.counterexamples.len(),
                    self.samples_used
                )?;
                for c in &self.counterexamples {
                    write!(f, "\n  {c}")?;
                }
                Ok(())
            }
        }
    }
}

/// Sampling parameters shared by the checkers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    /// Sampled states per checked automaton.
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    /// Stop collecting after this many counterexamples.
    pub max_counterexamples: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            samples: 500,
            seed: 0,
            workers: 4,
            max_counterexamples: 25,
        }
    }
}

impl CheckConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        CheckConfig {
            samples,
            seed,
            ..Default::default()
        }
    }
}

/// Independent stream for one worker.
pub(crate) fn worker_rng(seed: u64, worker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker as u64 + 1);
    rng
}

/// Run `check` over `items` in `workers` contiguous chunks; results are merged in chunk
/// order so the outcome does not depend on scheduling.
pub(crate) fn run_parallel<T, F>(items: &[T], cfg: &CheckConfig, check: F) -> Vec<Counterexample>
where
    T: Sync,
    F: Fn(&T, &mut ChaCha8Rng) -> Vec<Counterexample> + Sync,
{
    let workers = cfg.workers.max(1);
    let chunk = items.len().div_ceil(workers).max(1);
    let mut found: Vec<Counterexample> = items
        .par_chunks(chunk)
        .enumerate()
        .map(|(w, part)| {
            let mut rng = worker_rng(cfg.seed, w);
            let mut out = Vec::new();
            for item in part {
                out.extend(check(item, &mut rng));
                if out.len() >= cfg.max_counterexamples {
                    break;
                }
            }
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    found.truncate(cfg.max_counterexamples);
    found
}

const CLIP: f64 = 100.0;

fn clip(iv: &Interval) -> (f64, f64) {
    let lo = if iv.lower().is_finite() {
        iv.lower()
    } else if iv.upper().is_finite() {
        iv.upper() - CLIP
    } else {
        -CLIP
    };
    let hi = if iv.upper().is_finite() {
        iv.upper()
    } else {
        lo + CLIP
    };
    (lo, hi)
}

/// Constants that matter for a mode: bounds of its invariant, guards leaving it,
/// postconditions and reset values entering it.
fn interesting_constants(pha: &Pha, mode: &str, var: &str) -> Vec<f64> {
    let mut out = Vec::new();
    if let Some(m) = pha.mode(mode) {
        out.extend(m.invariant.constants_for(var));
        out.extend(m.init.constants_for(var));
    }
    for t in &pha.transitions {
        if t.source == mode {
            out.extend(t.pre.constants_for(var));
        }
        for o in &t.outcomes {
            if o.target == mode {
                out.extend(t.pos_for(mode).constants_for(var));
                out.extend(o.post.iter().filter_map(|d| d.get(var).and_then(|v| v.value())));
            }
        }
    }
    out
}

/// Grid and random states inside each mode's invariant, about `total` overall.
pub(crate) fn sample_states(pha: &Pha, total: usize, seed: u64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let live: Vec<_> = pha
        .modes
        .iter()
        .filter(|m| !m.invariant.is_unsatisfiable())
        .collect();
    if live.is_empty() {
        return Vec::new();
    }
    let per_mode = total.div_ceil(live.len()).max(1);
    let mut out = Vec::new();
    for m in live {
        let boxes = m.invariant.boxes();
        let per_box = per_mode.div_ceil(boxes.len()).max(1);
        let mut mine: Vec<Valuation> = Vec::new();
        for b in &boxes {
            let axes: Vec<(String, (f64, f64), Vec<f64>)> = pha
                .variables
                .iter()
                .map(|v| {
                    let iv = b.get(v);
                    let (lo, hi) = clip(&iv);
                    let mut grid: Vec<f64> = (0..=10).map(|k| lo + (hi - lo) * k as f64 / 10.0).collect();
                    grid.extend(interesting_constants(pha, &m.name, v).into_iter().filter(|c| iv.contains(*c)));
                    grid.sort_by(f64::total_cmp);
                    grid.dedup_by(|a, b| (*a - *b).abs() <= TOL);
                    (v.clone(), (lo, hi), grid)
                })
                .collect();
            let product: usize = axes.iter().map(|(_, _, g)| g.len()).product();
            let mut candidates: Vec<Valuation> = Vec::new();
            if product <= per_box / 2 {
                let mut idx = vec![0usize; axes.len()];
                'grid: loop {
                    candidates.push(
                        axes.iter()
                            .zip(&idx)
                            .map(|((v, _, g), &i)| (v.clone(), g[i]))
                            .collect(),
                    );
                    for p in 0..idx.len() {
                        idx[p] += 1;
                        if idx[p] < axes[p].2.len() {
                            continue 'grid;
                        }
                        idx[p] = 0;
                    }
                    break;
                }
            } else {
                for _ in 0..per_box / 2 {
                    candidates.push(
                        axes.iter()
                            .map(|(v, _, g)| (v.clone(), g[rng.random_range(0..g.len())]))
                            .collect(),
                    );
                }
            }
            while candidates.len() < per_box {
                candidates.push(
                    axes.iter()
                        .map(|(v, (lo, hi), _)| {
                            let x = if hi > lo { rng.random_range(*lo..=*hi) } else { *lo };
                            (v.clone(), x)
                        })
                        .collect(),
                );
            }
            mine.extend(candidates.into_iter().filter(|c| b.contains(c)));
        }
        let mut seen: Vec<Valuation> = Vec::new();
        for v in mine {
            if m.invariant.holds(&v) && !seen.iter().any(|s| s.approx_eq(&v)) {
                seen.push(v);
            }
        }
        out.extend(seen.into_iter().map(|v| State::new(m.name.clone(), v)));
    }
    top_up(pha, &mut out, total, &mut rng);
    out
}

/// Add random states until `total` is reached; modes with point invariants run out of
/// distinct grid points quickly.
fn top_up(pha: &Pha, out: &mut Vec<State>, total: usize, rng: &mut ChaCha8Rng) {
    let regions: Vec<(&str, Rectangle)> = pha
        .modes
        .iter()
        .flat_map(|m| m.invariant.boxes().into_iter().map(move |b| (m.name.as_str(), b)))
        .filter(|(_, b)| pha.variables.iter().any(|v| !b.get(v).is_point()))
        .collect();
    if regions.is_empty() {
        return;
    }
    let mut attempts = 0;
    while out.len() < total && attempts < 20 * total {
        attempts += 1;
        let (mode, b) = &regions[rng.random_range(0..regions.len())];
        let v: Valuation = pha
            .variables
            .iter()
            .map(|x| {
                let (lo, hi) = clip(&b.get(x));
                (x.clone(), if hi > lo { rng.random_range(lo..=hi) } else { lo })
            })
            .collect();
        let s = State::new(*mode, v);
        if s.is_valid(pha) && !out.iter().any(|k| k.approx_eq(&s)) {
            out.push(s);
        }
    }
}

/// Aggregate weights after mapping every state through `f`.
pub(crate) fn lump(
    weights: &[(State, f64)],
    f: impl Fn(&State) -> Option<State>,
) -> Result<Vec<(State, f64)>, State> {
    let mut out: Vec<(State, f64)> = Vec::new();
    for (s, p) in weights {
        let image = f(s).ok_or_else(|| s.clone())?;
        match out.iter_mut().find(|(k, _)| k.approx_eq(&image)) {
            Some((_, q)) => *q += p,
            None => out.push((image, *p)),
        }
    }
    Ok(out)
}

/// Equal as functions from states to probabilities, within tolerance.
pub(crate) fn same_weights(a: &[(State, f64)], b: &[(State, f64)]) -> bool {
    let weight = |ws: &[(State, f64)], s: &State| -> f64 {
        ws.iter().filter(|(k, _)| k.approx_eq(s)).map(|(_, p)| p).sum()
    };
    a.iter().chain(b).all(|(s, _)| (weight(a, s) - weight(b, s)).abs() <= TOL)
}

pub(crate) fn show_weights(ws: &[(State, f64)]) -> String {
    let parts: Vec<String> = ws.iter().map(|(s, p)| format!("{s} ↦ {}", fmt_num(*p))).collect();
    format!("{{{}}}", parts.join(", "))
}
