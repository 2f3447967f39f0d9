use std::collections::BTreeMap;

use pha_core::clock::clock_translate_pha;
use pha_core::format::{parse_model, parse_split_spec};
use pha_core::semantics::{
    box_reachability, check_clock_bisim, check_safety_bounded, check_split_sim, discrete_successors,
    flow_successor, sample_trace, weak_closure, CheckConfig, SimMode, State, Step, TraceConfig,
    UniformScheduler,
};
use pha_core::split::{approximate, split_pha, SplitSpec};
use pha_core::{Interval, Pha, Predicate, Valuation, VarFlow};

const THERMOSTAT: &str = include_str!("../../../models/thermostat.pha");
const SPLIT: &str = include_str!("../../../models/thermostat.split");

fn thermostat() -> (Pha, SplitSpec) {
    let pha = parse_model(THERMOSTAT).unwrap();
    let spec = parse_split_spec(SPLIT, &pha).unwrap();
    (pha, spec)
}

fn st(mode: &str, x: f64) -> State {
    State::new(mode, Valuation::new().with("x", x))
}

#[test]
fn affine_flow_reaches_upper_threshold() {
    let (pha, _) = thermostat();
    let r = flow_successor(&pha, &st("ON", 2.0), 1.5f64.ln()).unwrap();
    let p = r.point(&pha.variables).unwrap();
    assert!((p.get("x").unwrap() - 3.0).abs() < 1e-9);
    // leaving the invariant kills the successor
    assert!(flow_successor(&pha, &st("ON", 2.0), 1.0).unwrap().is_empty());
    assert!(flow_successor(&pha, &st("ON", 2.0), -0.1).is_err());
}

#[test]
fn rectangular_flow_sweeps_interval() {
    let (pha, spec) = thermostat();
    let (approx, _) = approximate(&pha, &spec).unwrap();
    let r = flow_successor(&approx, &st("(ON,1)", 1.0), 0.2).unwrap();
    assert_eq!(r.boxes.len(), 1);
    let x = r.boxes[0].get("x");
    assert!((x.lower() - 1.6).abs() < 1e-9 && (x.upper() - 1.8).abs() < 1e-9, "{x}");
    // the sweep is clipped by the copy invariant
    let r = flow_successor(&approx, &st("(ON,1)", 1.0), 0.3).unwrap();
    let x = r.boxes[0].get("x");
    assert!((x.lower() - 1.9).abs() < 1e-9 && (x.upper() - 2.0).abs() < 1e-9, "{x}");
}

#[test]
fn turning_on_is_probabilistic() {
    let (pha, _) = thermostat();
    let ds = discrete_successors(&pha, &st("OFF", 1.0), "on");
    assert_eq!(ds.len(), 1);
    assert!((ds[0].weight_of(&st("ON", 1.0)) - 0.9).abs() < 1e-12);
    assert!((ds[0].weight_of(&st("DOWN", 0.0)) - 0.1).abs() < 1e-12);
    assert!(discrete_successors(&pha, &st("OFF", 1.5), "on").is_empty());
}

#[test]
fn tau_closure_walks_between_copies() {
    let (pha, spec) = thermostat();
    let (s, _) = split_pha(&pha, &spec).unwrap();
    let c = weak_closure(&s, &st("(ON,1)", 2.0), "off", 4);
    assert!(c.states.iter().any(|k| k.mode == "(ON,2)"));
    assert!(!c.truncated);
    let c = weak_closure(&s, &st("(ON,2)", 3.0), "off", 4);
    assert_eq!(c.distributions.len(), 1);
}

#[test]
fn clock_translation_is_bisimilar() {
    let (pha, _) = thermostat();
    let (t, w) = clock_translate_pha(&pha, "x").unwrap();
    let report = check_clock_bisim(&pha, &t, &w, &CheckConfig::new(300, 7));
    assert!(report.passed(), "{report}");
    assert!(report.samples_used > 100);
}

#[test]
fn tampered_translation_is_caught() {
    let (pha, _) = thermostat();
    let (mut t, w) = clock_translate_pha(&pha, "x").unwrap();
    let on = t.transitions.iter_mut().find(|t| t.action == "on").unwrap();
    on.outcomes[0].prob = 0.8;
    let report = check_clock_bisim(&pha, &t, &w, &CheckConfig::new(300, 7));
    assert!(!report.passed());
    assert!(report.counterexamples.iter().any(|c| c.step == "on"), "{report}");
}

#[test]
fn split_is_bisimilar_and_tampered_split_is_not() {
    let (pha, spec) = thermostat();
    let (s, w) = split_pha(&pha, &spec).unwrap();
    let report = check_split_sim(&pha, &s, &w, SimMode::SplitBisim, &CheckConfig::new(300, 3));
    assert!(report.passed(), "{report}");
    let mut bad = s.clone();
    let on = bad.transitions.iter_mut().find(|t| t.action == "on").unwrap();
    on.outcomes[0].prob = 0.8;
    let report = check_split_sim(&pha, &bad, &w, SimMode::SplitBisim, &CheckConfig::new(300, 3));
    assert!(!report.passed());
}

#[test]
fn approximation_simulates_and_narrowed_flow_fails() {
    let (pha, spec) = thermostat();
    let (a, w) = approximate(&pha, &spec).unwrap();
    let cfg = CheckConfig::new(300, 11);
    let report = check_split_sim(&pha, &a, &w, SimMode::ApproxSim, &cfg);
    assert!(report.passed(), "{report}");

    let mut narrow = a.clone();
    let m = narrow.modes.iter_mut().find(|m| m.name == "(ON,1)").unwrap();
    m.flow.insert("x".into(), VarFlow::Rect(Interval::closed(3.5, 4.0).unwrap()));
    let report = check_split_sim(&pha, &narrow, &w, SimMode::ApproxSim, &cfg);
    assert!(!report.passed());
    assert!(
        report.counterexamples.iter().any(|c| c.actual.contains("outside [3.5, 4]")),
        "{report}"
    );
}

#[test]
fn traces_alternate_and_are_reproducible() {
    let (pha, _) = thermostat();
    let cfg = TraceConfig {
        horizon: 6.0,
        dt: 0.25,
        seed: 42,
        ..Default::default()
    };
    let a = sample_trace(&pha, &cfg, &mut UniformScheduler).unwrap();
    let b = sample_trace(&pha, &cfg, &mut UniformScheduler).unwrap();
    assert_eq!(a, b);
    assert!((a.elapsed - 6.0).abs() < 1e-9);
    let first_jump = a
        .steps
        .iter()
        .find_map(|s| match s {
            Step::Jump { action, to, .. } => Some((action.as_str(), to.clone())),
            Step::Flow { .. } => None,
        })
        .unwrap();
    assert_eq!(first_jump.0, "off");
    for (_, s) in a.timed_states() {
        assert!(s.is_valid(&pha), "{s}");
    }
}

#[test]
fn failure_probability_within_bound() {
    // first on-attempt after ln(3/2) heating and ln 3 cooling, then every ln 2 + ln 3
    let first = 1.5f64.ln() + 3f64.ln();
    let cycle = 2f64.ln() + 3f64.ln();
    let attempts = (0..).take_while(|k| first + *k as f64 * cycle <= 6.0).count();
    assert_eq!(attempts, 3);
    let exact = 1.0 - 0.9f64.powi(attempts as i32);
    let (pha, _) = thermostat();
    let unsafe_set = BTreeMap::from([("DOWN".to_string(), Predicate::True)]);
    let est = check_safety_bounded(&pha, &unsafe_set, 6.0, 4000, 1).unwrap();
    assert!(est.interval.0 <= exact && exact <= est.interval.1, "{est:?} vs {exact}");
    assert!((est.probability - exact).abs() < 0.03);
}

#[test]
fn box_reachability_covers_cycle() {
    let (pha, _) = thermostat();
    let r = box_reachability(&pha, 100);
    assert!(r.converged);
    assert!(r.may_reach("DOWN", &Predicate::True));
    let on = &r.reached["ON"];
    assert!(on.iter().any(|b| b.get("x").contains(1.0) && b.get("x").contains(3.0)));
}

#[test]
fn horizon_zero_gives_initial_state_only() {
    let (pha, _) = thermostat();
    let cfg = TraceConfig {
        horizon: 0.0,
        ..Default::default()
    };
    let t = sample_trace(&pha, &cfg, &mut UniformScheduler).unwrap();
    assert!(t.steps.is_empty());
    assert_eq!(t.initial, st("ON", 2.0));
}

#[test]
fn approximation_never_exceeds_upper_threshold() {
    let (pha, spec) = thermostat();
    let (a, _) = approximate(&pha, &spec).unwrap();
    let above = Predicate::atom("x", pha_core::CmpOp::Gt, 3.0);
    let unsafe_set: BTreeMap<String, Predicate> = a.modes.iter().map(|m| (m.name.clone(), above.clone())).collect();
    let est = check_safety_bounded(&a, &unsafe_set, 10.0, 200, 5).unwrap();
    assert_eq!(est.hits, 0);
    assert_eq!(est.box_reachable, Some(false));
    let est = check_safety_bounded(&pha, &BTreeMap::from([("ON".to_string(), above)]), 10.0, 200, 5).unwrap();
    assert_eq!(est.hits, 0);
}
