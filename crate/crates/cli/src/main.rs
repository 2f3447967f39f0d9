use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pha_core::clock::{clock_translate_pha_with, ClockOptions};
use pha_core::format::{
    emit_model, emit_witness, parse_model_with, parse_split_spec, parse_witness, ParseOptions, Witness,
};
use pha_core::semantics::{
    check_clock_bisim, check_safety_bounded, check_split_sim, sample_trace, CheckConfig, CheckReport,
    SimMode, Step, TraceConfig, UniformScheduler,
};
use pha_core::split::{approximate, split_pha_with, SplitOptions, SplitSpec};
use pha_core::{export_dot, Pha, Predicate, ValidateOptions};

/// Transform and check probabilistic hybrid automata.
#[derive(Parser)]
#[command(name = "pha", version)]
struct Cli {
    /// Load models even when validation reports problems.
    #[arg(long, global = true)]
    lax: bool,
    /// Accept distributions whose mass is below 1.
    #[arg(long, global = true)]
    allow_subdistributions: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model.
    Validate { file: PathBuf },
    /// Replace a solvable variable by a clock.
    ClockTranslate {
        file: PathBuf,
        #[arg(long)]
        var: String,
        /// Clock name, `t_<var>` by default.
        #[arg(long)]
        clock: Option<String>,
        /// Keep copies whose invariant is unsatisfiable.
        #[arg(long)]
        keep_empty_copies: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Split modes along a cover of their invariants.
    Split {
        file: PathBuf,
        #[command(flatten)]
        cover: CoverArgs,
        /// Use whole cover pieces as postconditions (double-counts overlaps).
        #[arg(long)]
        no_partition: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Split and bound every affine flow by an interval of derivatives.
    Approximate {
        file: PathBuf,
        #[command(flatten)]
        cover: CoverArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Check that a clock-translation or split is bisimilar to its source.
    CheckBisim {
        #[command(flatten)]
        check: CheckArgs,
    },
    /// Check that a derived automaton simulates its source.
    CheckSim {
        #[command(flatten)]
        check: CheckArgs,
    },
    /// Sample runs, optionally estimating the probability of reaching an unsafe set.
    Simulate {
        file: PathBuf,
        #[arg(long, env = "PHA_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.5)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        traces: usize,
        /// Unsafe states as MODE=PREDICATE; repeatable.
        #[arg(long = "unsafe", value_name = "MODE=PRED")]
        unsafe_set: Vec<String>,
    },
    /// Print the automaton in Graphviz DOT syntax.
    ExportDot {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Output {
    /// Write the model here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Witness file; defaults to `<output>.witness` when -o is given.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct CoverArgs {
    /// Split specification file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Cut every bounded invariant into k equal pieces along each variable.
    #[arg(long)]
    uniform: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    original: PathBuf,
    derived: PathBuf,
    #[arg(long)]
    witness: PathBuf,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, env = "PHA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    workers: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

struct Loader {
    lax: bool,
    validate: ValidateOptions,
}

impl Loader {
    fn load(&self, path: &Path, lax: bool) -> Result<Pha> {
        let opts = ParseOptions {
            lax: self.lax || lax,
            validate: self.validate,
        };
        let (pha, diagnostics) =
            parse_model_with(&read(path)?, opts).with_context(|| format!("loading {}", path.display()))?;
        for d in diagnostics {
            eprintln!("warning: {}: {d}", path.display());
        }
        Ok(pha)
    }
}

fn emit(pha: &Pha, witness: Witness, out: &Output) -> Result<()> {
    let text = emit_model(pha);
    match &out.output {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    let sidecar = out.witness.clone().or_else(|| {
        out.output.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".witness");
            PathBuf::from(s)
        })
    });
    if let Some(p) = sidecar {
        write(&p, &emit_witness(&witness))?;
    }
    Ok(())
}

fn cover(pha: &Pha, args: &CoverArgs) -> Result<SplitSpec> {
    Ok(match (&args.spec, args.uniform) {
        (Some(p), _) => parse_split_spec(&read(p)?, pha).with_context(|| format!("loading {}", p.display()))?,
        (None, Some(k)) => SplitSpec::uniform(pha, k)?,
        (None, None) => bail!("need --spec or --uniform"),
    })
}

fn report(r: &CheckReport) -> bool {
    println!("{r}");
    r.passed()
}

fn check(loader: &Loader, args: &CheckArgs, bisim: bool) -> Result<bool> {
    let original = loader.load(&args.original, false)?;
    // derived models are checked even when broken: that is what the check is for
    let derived = loader.load(&args.derived, true)?;
    let witness = parse_witness(&read(&args.witness)?).with_context(|| format!("loading {}", args.witness.display()))?;
    let cfg = CheckConfig {
        workers: args.workers,
        ..CheckConfig::new(args.samples, args.seed)
    };
    Ok(match witness {
        Witness::Clock(w) => report(&check_clock_bisim(&original, &derived, &w, &cfg)),
        Witness::Split(w) if w.approximated && bisim => {
            bail!("an approximation only simulates its source; use check-sim")
        }
        Witness::Split(w) => {
            let mode = if bisim { SimMode::SplitBisim } else { SimMode::ApproxSim };
            report(&check_split_sim(&original, &derived, &w, mode, &cfg))
        }
    })
}

fn parse_unsafe(pha: &Pha, specs: &[String]) -> Result<BTreeMap<String, Predicate>> {
    let mut out: BTreeMap<String, Predicate> = BTreeMap::new();
    for s in specs {
        let (mode, pred) = s.split_once('=').with_context(|| format!("`{s}` is not MODE=PREDICATE"))?;
        let mode = mode.trim();
        if pha.mode(mode).is_none() {
            bail!("unknown mode `{mode}` in --unsafe");
        }
        let p: Predicate = pred.parse().with_context(|| format!("in --unsafe {s}"))?;
        let merged = match out.remove(mode) {
            Some(q) => Predicate::Or(vec![q, p]),
            None => p,
        };
        out.insert(mode.to_string(), merged);
    }
    Ok(out)
}

fn simulate(pha: &Pha, seed: u64, horizon: f64, dt: f64, traces: usize, unsafe_specs: &[String]) -> Result<bool> {
    if !unsafe_specs.is_empty() {
        let unsafe_set = parse_unsafe(pha, unsafe_specs)?;
        let est = check_safety_bounded(pha, &unsafe_set, horizon, traces, seed)?;
        println!(
            "unsafe reached in {}/{} runs: p = {:.4}, 95% CI [{:.4}, {:.4}]",
            est.hits, est.traces, est.probability, est.interval.0, est.interval.1
        );
        if est.truncated > 0 {
            println!("{} runs hit the step bound", est.truncated);
        }
        if let Some(b) = est.box_reachable {
            println!("interval exploration: unsafe set {}", if b { "possibly reachable" } else { "unreachable" });
        }
        return Ok(est.hits == 0 && est.box_reachable != Some(true));
    }
    let mut jumps: BTreeMap<(String, String), usize> = BTreeMap::new();
    for i in 0..traces.max(1) {
        let cfg = TraceConfig {
            horizon,
            dt,
            seed: seed.wrapping_add(i as u64),
            ..Default::default()
        };
        let trace = sample_trace(pha, &cfg, &mut UniformScheduler)?;
        if traces <= 1 {
            print!("{trace}");
        }
        for s in &trace.steps {
            if let Step::Jump { action, to, .. } = s {
                *jumps.entry((action.clone(), to.mode.clone())).or_default() += 1;
            }
        }
    }
    if traces > 1 {
        let mut per_action: BTreeMap<&str, usize> = BTreeMap::new();
        for ((a, _), n) in &jumps {
            *per_action.entry(a).or_default() += n;
        }
        println!("{traces} runs of length {horizon}");
        for ((a, m), n) in &jumps {
            println!("  {a} -> {m}: {n} ({:.4})", *n as f64 / per_action[a.as_str()] as f64);
        }
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    let loader = Loader {
        lax: cli.lax,
        validate: ValidateOptions {
            allow_subdistributions: cli.allow_subdistributions,
        },
    };
    match cli.command {
        Command::Validate { file } => {
            let pha = loader.load(&file, false)?;
            println!(
                "ok: {} modes, {} variables, {} distributions",
                pha.modes.len(),
                pha.variables.len(),
                pha.transitions.len()
            );
            Ok(true)
        }
        Command::ClockTranslate {
            file,
            var,
            clock,
            keep_empty_copies,
            out,
        } => {
            let pha = loader.load(&file, false)?;
            let opts = ClockOptions {
                clock,
                keep_empty_copies,
            };
            let (t, w) = clock_translate_pha_with(&pha, &var, &opts)?;
            emit(&t, Witness::Clock(w), &out)?;
            Ok(true)
        }
        Command::Split {
            file,
            cover: c,
            no_partition,
            out,
        } => {
            let pha = loader.load(&file, false)?;
            let spec = cover(&pha, &c)?;
            let opts = if no_partition {
                SplitOptions::without_partition()
            } else {
                SplitOptions::default()
            };
            let (s, w) = split_pha_with(&pha, &spec, opts)?;
            emit(&s, Witness::Split(w), &out)?;
            Ok(true)
        }
        Command::Approximate { file, cover: c, out } => {
            let pha = loader.load(&file, false)?;
            let spec = cover(&pha, &c)?;
            let (a, w) = approximate(&pha, &spec)?;
            emit(&a, Witness::Split(w), &out)?;
            Ok(true)
        }
        Command::CheckBisim { check: args } => check(&loader, &args, true),
        Command::CheckSim { check: args } => check(&loader, &args, false),
        Command::Simulate {
            file,
            seed,
            horizon,
            dt,
            traces,
            unsafe_set,
        } => {
            let pha = loader.load(&file, false)?;
            simulate(&pha, seed, horizon, dt, traces, &unsafe_set)
        }
        Command::ExportDot { file, output } => {
            let pha = loader.load(&file, false)?;
            let dot = export_dot(&pha);
            match output {
                Some(p) => write(&p, &dot)?,
                None => print!("{dot}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
