mod common;

use std::collections::BTreeMap;

use pha_core::format::{emit_model, parse_model, parse_model_with, ParseOptions};
use pha_core::semantics::{discrete_successors, State};
use pha_core::Valuation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_force_successors, probe_states, random_pha};

type Canon = (usize, Vec<(String, f64)>);

fn canon(k: usize, entries: impl IntoIterator<Item = (String, Valuation, f64)>) -> Canon {
    let mut acc: BTreeMap<String, f64> = BTreeMap::new();
    for (m, v, p) in entries {
        *acc.entry(format!("{m}|{v:?}")).or_default() += p;
    }
    (k, acc.into_iter().collect())
}

fn sorted(mut v: Vec<Canon>) -> Vec<Canon> {
    v.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    v
}

#[test]
fn successors_match_brute_force_on_random_models() {
    let mut checked = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pha = random_pha(&mut rng);
        for (mode, val) in probe_states(&pha, &mut rng, 8) {
            for a in &pha.actions {
                let ours = sorted(
                    discrete_successors(&pha, &State::new(mode.clone(), val.clone()), a)
                        .into_iter()
                        .map(|d| canon(d.transition, d.weights.into_iter().map(|(s, p)| (s.mode, s.valuation, p))))
                        .collect(),
                );
                let theirs = sorted(
                    brute_force_successors(&pha, &mode, &val, a)
                        .into_iter()
                        .map(|(k, es)| canon(k, es))
                        .collect(),
                );
                assert_eq!(ours.len(), theirs.len(), "seed {seed} at ({mode}, {val}) {a}");
                for (x, y) in ours.iter().zip(&theirs) {
                    assert_eq!(x.0, y.0, "seed {seed}");
                    assert_eq!(x.1.len(), y.1.len(), "seed {seed}: {x:?} vs {y:?}");
                    for ((s, p), (t, q)) in x.1.iter().zip(&y.1) {
                        assert_eq!(s, t, "seed {seed}");
                        assert!((p - q).abs() <= 1e-12, "seed {seed}: {p} vs {q}");
                    }
                }
                checked += ours.len();
            }
        }
    }
    assert!(checked > 200, "only {checked} distributions exercised");
}

#[test]
fn successor_mass_matches_distribution_mass() {
    let pha = parse_model(include_str!("../../../models/thermostat.pha")).unwrap();
    for x in [1.0, 3.0] {
        for mode in ["ON", "OFF"] {
            for a in &pha.actions {
                let s = State::new(mode, Valuation::new().with("x", x));
                for d in discrete_successors(&pha, &s, a) {
                    assert!((d.mass() - 1.0).abs() <= 1e-9, "{d}");
                }
            }
        }
    }
}

const BUNDLED: [&str; 2] = [
    include_str!("../../../models/thermostat.pha"),
    include_str!("../../../models/thermostat_ha.pha"),
];

#[test]
fn round_trip_bundled_models() {
    for text in BUNDLED {
        let pha = parse_model(text).unwrap();
        let again = parse_model(&emit_model(&pha)).unwrap();
        assert_eq!(pha, again);
    }
}

#[test]
fn round_trip_random_models() {
    let lax = ParseOptions {
        lax: true,
        ..Default::default()
    };
    for seed in 0..100u64 {
        let pha = random_pha(&mut ChaCha8Rng::seed_from_u64(1000 + seed));
        let text = emit_model(&pha);
        let (again, _) = parse_model_with(&text, lax).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{text}"));
        assert_eq!(pha, again, "seed {seed}\n{text}");
        assert_eq!(text, emit_model(&again));
    }
}
