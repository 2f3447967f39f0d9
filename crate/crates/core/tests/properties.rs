use std::collections::BTreeMap;

use pha_core::semantics::{flow_successor, State};
use pha_core::split::partition_cover;
use pha_core::{
    alpha_transform, bound_flow, solve_flow, star_substitute, AffineFlow, Atom, CmpOp, Interval, Mode,
    Pha, Predicate, Rectangle, SolutionKind, StarValuation, StarValue, Valuation, VarFlow,
};
use proptest::prelude::*;

/// Classic fourth-order Runge-Kutta for ẋ = a·x + b.
fn rk4(a: f64, b: f64, x0: f64, t: f64) -> f64 {
    let n = 2000;
    let h = t / n as f64;
    let f = |x: f64| a * x + b;
    let mut x = x0;
    for _ in 0..n {
        let k1 = f(x);
        let k2 = f(x + h / 2.0 * k1);
        let k3 = f(x + h / 2.0 * k2);
        let k4 = f(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x
}

fn coeff() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), -2.0..-0.1f64, 0.1..2.0f64]
}

fn op() -> impl Strategy<Value = CmpOp> {
    prop::sample::select(CmpOp::ALL.to_vec())
}

proptest! {
    #[test]
    fn closed_form_matches_integration(a in coeff(), b in -5.0..5.0f64, c in -5.0..5.0f64, t in 0.0..2.0f64) {
        let g = solve_flow(a, b, c);
        let exact = g.eval(t).unwrap();
        let numeric = rk4(a, b, c, t);
        prop_assert!((exact - numeric).abs() <= 1e-6 * exact.abs().max(1.0), "{exact} vs {numeric}");
    }

    #[test]
    fn inverse_round_trips(a in coeff(), b in -5.0..5.0f64, c in -5.0..5.0f64, t in 0.0..2.0f64) {
        let g = solve_flow(a, b, c);
        prop_assume!(g.kind() != SolutionKind::Constant);
        prop_assume!((c - g.limit()).abs() > 0.1 || a == 0.0);
        let back = g.invert(g.at(t)).unwrap();
        prop_assert!((back - t).abs() <= 1e-9, "t={t} back={back}");
    }

    #[test]
    fn alpha_preserves_truth(
        a in coeff(), b in -5.0..5.0f64, c in -5.0..5.0f64,
        op in op(), l in -6.0..6.0f64, t in 0.0..3.0f64,
    ) {
        let g = solve_flow(a, b, c);
        let x = g.at(t);
        prop_assume!((x - l).abs() > 1e-6);
        let atom = Atom::new("x", op, l);
        let translated = alpha_transform(&atom, c, &g, "t");
        let v = Valuation::new().with("t", t);
        prop_assert_eq!(translated.holds(&v), atom.holds_at(x), "{} ↦ {} at t={}", atom, translated, t);
    }

    #[test]
    fn star_substitution_takes_numbers_and_keeps_stars(
        vals in prop::collection::vec(-10.0..10.0f64, 3),
        resets in prop::collection::vec(prop::option::of(-10.0..10.0f64), 3),
    ) {
        let names = ["x", "y", "z"];
        let a: Valuation = names.iter().zip(&vals).map(|(n, v)| (n.to_string(), *v)).collect();
        let d: StarValuation = names
            .iter()
            .zip(&resets)
            .map(|(n, r)| (n.to_string(), r.map_or(StarValue::Star, StarValue::Value)))
            .collect();
        let out = star_substitute(&d, &a).unwrap();
        for (i, n) in names.iter().enumerate() {
            prop_assert_eq!(out.get(n), Some(resets[i].unwrap_or(vals[i])));
        }
    }

    #[test]
    fn partition_cells_are_disjoint_and_cover(
        cuts in prop::collection::vec((-5i32..5, 1i32..4, -5i32..5, 1i32..4), 1..4),
        probe in prop::collection::vec((-6.0..9.0f64, -6.0..9.0f64), 50),
    ) {
        let cover: Vec<Rectangle> = cuts
            .iter()
            .map(|&(x, w, y, h)| Rectangle::from_bounds([
                ("x", Interval::closed(x as f64, (x + w) as f64).unwrap()),
                ("y", Interval::closed(y as f64, (y + h) as f64).unwrap()),
            ]))
            .collect();
        let cells = partition_cover(&cover);
        prop_assert_eq!(cells.len(), cover.len());
        for (px, py) in probe {
            let v = Valuation::new().with("x", px).with("y", py);
            let in_cover = cover.iter().any(|b| b.contains(&v));
            let hits = cells.iter().filter(|c| c.iter().any(|b| b.contains(&v))).count();
            prop_assert_eq!(hits, usize::from(in_cover), "({}, {})", px, py);
        }
        for (piece, cell) in cover.iter().zip(&cells) {
            prop_assert!(cell.iter().all(|b| piece.contains_rect(b)));
        }
    }

    #[test]
    fn derivative_bounds_are_tight(a in coeff(), b in -5.0..5.0f64, lo in -5.0..5.0f64, w in 0.0..4.0f64, s in 0.0..1.0f64) {
        let f = AffineFlow::new(a, b);
        let range = Interval::closed(lo, lo + w).unwrap();
        let bounds = bound_flow(&f, &range).unwrap();
        prop_assert!(bounds.contains(f.derivative(lo + s * w)));
        let ends = [f.derivative(lo), f.derivative(lo + w)];
        prop_assert!(ends.iter().any(|d| (d - bounds.lower()).abs() < 1e-12));
        prop_assert!(ends.iter().any(|d| (d - bounds.upper()).abs() < 1e-12));
    }

    #[test]
    fn rectangular_flow_box_is_exact(
        lo in -3.0..3.0f64, w in 0.0..2.0f64, x0 in 0.0..10.0f64, sigma in 0.0..2.0f64,
        slopes in prop::collection::vec(0.0..1.0f64, 100),
    ) {
        let bounds = Interval::closed(lo, lo + w).unwrap();
        let inv = Predicate::from_interval("x", &Interval::closed(0.0, 10.0).unwrap());
        let mode = Mode::new("M", inv, Predicate::True, BTreeMap::from([("x".to_string(), VarFlow::Rect(bounds))]));
        let pha = Pha {
            variables: vec!["x".into()],
            actions: vec![],
            modes: vec![mode],
            transitions: vec![],
        };
        let reach = flow_successor(&pha, &State::new("M", Valuation::new().with("x", x0)), sigma).unwrap();
        for s in slopes {
            let end = x0 + sigma * (lo + s * w);
            if (0.0..=10.0).contains(&end) {
                prop_assert!(reach.contains(&Valuation::new().with("x", end)), "{end} not in {:?}", reach.boxes);
            }
        }
        if let Some(b) = reach.boxes.first() {
            let x = b.get("x");
            let lo_end = (x0 + sigma * lo).clamp(0.0, 10.0);
            let hi_end = (x0 + sigma * (lo + w)).clamp(0.0, 10.0);
            prop_assert!((x.lower() - lo_end).abs() < 1e-9 && (x.upper() - hi_end).abs() < 1e-9);
        }
    }
}
