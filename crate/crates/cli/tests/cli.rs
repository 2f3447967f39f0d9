use std::path::PathBuf;
use std::process::{Command, Output};

fn models() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn pha(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pha"))
        .args(args)
        .current_dir(models())
        .env_remove("PHA_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pha-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn validate_ok_and_model_errors() {
    let o = pha(&["validate", "thermostat.pha"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("ok: 3 modes"));

    let o = pha(&["validate", "negative/clock_tampered_mass.pha"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mass 0.9"));

    let o = pha(&["--lax", "validate", "negative/clock_tampered_mass.pha"]);
    assert_eq!(o.status.code(), Some(0));

    let o = pha(&["validate", "no-such-file.pha"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn transform_then_check_in_separate_processes() {
    let dir = scratch("pipeline");
    let out = dir.join("t.pha");
    let o = pha(&["clock-translate", "thermostat.pha", "--var", "x", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let witness = dir.join("t.pha.witness");
    assert!(witness.exists());
    let o = pha(&[
        "check-bisim",
        "thermostat.pha",
        out.to_str().unwrap(),
        "--witness",
        witness.to_str().unwrap(),
        "--samples",
        "200",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let out = dir.join("a.pha");
    let o = pha(&["approximate", "thermostat.pha", "--spec", "thermostat.split", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let w = dir.join("a.pha.witness");
    let o = pha(&["check-sim", "thermostat.pha", out.to_str().unwrap(), "--witness", w.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    // an approximation is not claimed bisimilar
    let o = pha(&["check-bisim", "thermostat.pha", out.to_str().unwrap(), "--witness", w.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn negative_controls_exit_one() {
    for neg in ["clock_tampered_mass", "clock_wrong_reset", "clock_wrong_invariant"] {
        let o = pha(&[
            "check-bisim",
            "thermostat.pha",
            &format!("negative/{neg}.pha"),
            "--witness",
            "negative/clock.witness",
        ]);
        assert_eq!(o.status.code(), Some(1), "{neg}");
        assert!(stdout(&o).starts_with("FAIL"), "{neg}");
    }
    let o = pha(&[
        "check-sim",
        "thermostat.pha",
        "negative/approx_narrowed_flow.pha",
        "--witness",
        "negative/approx.witness",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("outside [3.5, 4]"));
}

#[test]
fn split_requires_a_cover() {
    let o = pha(&["split", "thermostat.pha"]);
    assert_eq!(o.status.code(), Some(2));
    let o = pha(&["split", "thermostat.pha", "--uniform", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"(ON,2)\""));
}

#[test]
fn seed_comes_from_environment() {
    let run = |seed: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_pha"));
        c.args(["simulate", "thermostat.pha", "--horizon", "20", "--dt", "0.3"]).current_dir(models());
        match seed {
            Some(s) => c.env("PHA_SEED", s),
            None => c.env_remove("PHA_SEED"),
        };
        stdout(&c.output().unwrap())
    };
    let a = run(Some("17"));
    assert!(a.starts_with("seed 17:"));
    assert_eq!(a, run(Some("17")));
    assert!(run(None).starts_with("seed 0:"));
}

#[test]
fn unsafe_estimate_and_dot() {
    let o = pha(&["simulate", "thermostat.pha", "--horizon", "20", "--traces", "50", "--unsafe", "ON=x > 3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("unsafe reached in 0/50 runs"));
    let o = pha(&["simulate", "thermostat.pha", "--horizon", "20", "--traces", "50", "--unsafe", "DOWN=true"]);
    assert_eq!(o.status.code(), Some(1));

    let o = pha(&["export-dot", "thermostat.pha"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("digraph pha {"));
}
