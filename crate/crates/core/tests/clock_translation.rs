use pha_core::clock::{clock_translate_ha, clock_translate_pha, underlying_ha, CompositeLabel};
use pha_core::format::parse_model;
use pha_core::predicate::{Atom, CmpOp, Predicate};
use pha_core::{check_solvable, validate, Ha, StarValue};

const THERMOSTAT: &str = include_str!("../../../models/thermostat.pha");
const THERMOSTAT_HA: &str = include_str!("../../../models/thermostat_ha.pha");

fn single_atom(p: &Predicate) -> &Atom {
    match p {
        Predicate::Atom(a) => a,
        other => panic!("expected a single atom, got {other}"),
    }
}

#[test]
fn starting_values_of_thermostat() {
    let pha = parse_model(THERMOSTAT).unwrap();
    let report = check_solvable(&pha, "x");
    assert!(report.solvable, "{:?}", report.reasons);
    assert_eq!(report.starting_values_of("ON"), &[1.0, 2.0]);
    assert_eq!(report.starting_values_of("OFF"), &[3.0]);
    assert_eq!(report.starting_values_of("DOWN"), &[0.0]);
}

#[test]
fn translated_thermostat_constants() {
    let ha = Ha::from_dirac_pha(&parse_model(THERMOSTAT_HA).unwrap()).unwrap();
    let report = check_solvable(&ha.to_dirac_pha(), "x");
    let (t, witness) = clock_translate_ha(&ha, "x", &report).unwrap();
    assert_eq!(t.modes.len(), 4);
    assert_eq!(t.variables, vec!["t_x".to_string()]);
    let expect = [
        ("(ON,1)", CmpOp::Le, 2f64.ln()),
        ("(ON,2)", CmpOp::Le, 1.5f64.ln()),
        ("(OFF,3)", CmpOp::Le, 3f64.ln()),
        ("(DOWN,0)", CmpOp::Eq, 0.0),
    ];
    for (name, op, value) in expect {
        let m = t.mode(name).unwrap_or_else(|| panic!("missing {name}"));
        let a = single_atom(&m.invariant);
        assert_eq!((a.var.as_str(), a.op), ("t_x", op), "{name}");
        assert!((a.value - value).abs() <= 1e-12, "{name}: {} vs {value}", a.value);
    }
    for e in &t.edges {
        for d in &e.reset {
            assert_eq!(d.get("t_x"), Some(StarValue::Value(0.0)), "{} -> {}", e.source, e.target);
        }
    }
    assert_eq!(witness.copies.len(), 4);
    assert_eq!(t.mode("(ON,2)").unwrap().init.to_string(), "t_x = 0");
    assert_eq!(t.mode("(ON,1)").unwrap().init, Predicate::False);
    assert_eq!(t.mode("(ON,1)").unwrap().note.as_deref(), Some("t_x <= ln(2)"));
}

#[test]
fn probabilistic_translation_lifts_distributions() {
    let pha = parse_model(THERMOSTAT).unwrap();
    let (t, _) = clock_translate_pha(&pha, "x").unwrap();
    assert!(validate(&t).is_empty(), "{:?}", validate(&t));
    let on: Vec<_> = t.transitions.iter().filter(|d| d.source == "(OFF,3)" && d.action == "on").collect();
    assert_eq!(on.len(), 1);
    let pre = single_atom(&on[0].pre);
    assert_eq!(pre.op, CmpOp::Eq);
    assert!((pre.value - 3f64.ln()).abs() < 1e-12);
    let mass: Vec<(&str, f64)> = on[0].outcomes.iter().map(|o| (o.target.as_str(), o.prob)).collect();
    assert_eq!(mass, vec![("(ON,1)", 0.9), ("(DOWN,0)", 0.1)]);
    for d in &t.transitions {
        assert!((d.mass() - 1.0).abs() <= 1e-9);
    }
    assert_eq!(t.transitions.len(), 3);
}

#[test]
fn underlying_ha_has_one_edge_per_outcome() {
    let pha = parse_model(THERMOSTAT).unwrap();
    let u = underlying_ha(&pha);
    assert_eq!(u.ha.edges.len(), 3);
    let labels: Vec<String> = u.labels.iter().map(CompositeLabel::encode).collect();
    assert_eq!(labels, vec!["off#0#0", "on#1#0", "on#1#1"]);
    for (e, l) in u.ha.edges.iter().zip(&u.labels) {
        let back = CompositeLabel::decode(&e.label).unwrap();
        assert_eq!(&back, l);
        let t = &pha.transitions[back.transition];
        assert_eq!(t.outcomes[back.outcome].target, e.target);
    }
}
