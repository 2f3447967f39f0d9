//! JSON encodings of models, split specifications and transformation witnesses.
//!
//! Predicates and intervals are written as strings in their textual syntax
//! (`"1 <= x <= 3"`, `"[3, 4]"`); see `docs/formats.md` for the full grammar.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clock::{ClockCopy, TranslationWitness};
use crate::error::{Error, Result};
use crate::geometry::{Interval, Rectangle};
use crate::model::{
    ensure_valid, validate_with, Diagnostic, Mode, Outcome, Pha, ProbTransition, StarValuation,
    StarValue, ValidateOptions, VarFlow,
};
use crate::predicate::parse_predicate;
use crate::split::{SplitCopy, SplitSpec, SplitWitness};

pub const WITNESS_SCHEMA: &str = "pha-witness/1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    variables: Vec<String>,
    #[serde(default)]
    actions: Vec<String>,
    modes: Vec<ModeDoc>,
    #[serde(default)]
    transitions: Vec<TransitionDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeDoc {
    name: String,
    flow: BTreeMap<String, FlowDoc>,
    #[serde(default = "true_text")]
    invariant: String,
    #[serde(default = "false_text")]
    init: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum FlowDoc {
    Affine { a: f64, b: f64 },
    Rect(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionDoc {
    source: String,
    action: String,
    #[serde(default = "true_text")]
    pre: String,
    outcomes: Vec<OutcomeDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pos: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeDoc {
    prob: f64,
    target: String,
    post: Vec<BTreeMap<String, PostValue>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum PostValue {
    Num(f64),
    Text(String),
}

fn true_text() -> String {
    "true".into()
}

fn false_text() -> String {
    "false".into()
}

fn syntax(e: serde_json::Error) -> Error {
    Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// How strictly [`parse_model_with`] treats semantic diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Return the model even when validation reports diagnostics.
    pub lax: bool,
    pub validate: ValidateOptions,
}

/// Parse and validate a model document.
pub fn parse_model(text: &str) -> Result<Pha> {
    parse_model_with(text, ParseOptions::default()).map(|(pha, _)| pha)
}

/// Parse a model; in lax mode diagnostics are returned alongside instead of refused.
pub fn parse_model_with(text: &str, opts: ParseOptions) -> Result<(Pha, Vec<Diagnostic>)> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(syntax)?;
    let pha = from_doc(doc)?;
    if opts.lax {
        let diags = validate_with(&pha, opts.validate);
        Ok((pha, diags))
    } else {
        ensure_valid(&pha, opts.validate)?;
        Ok((pha, Vec::new()))
    }
}

fn from_doc(doc: ModelDoc) -> Result<Pha> {
    let mut modes = Vec::new();
    for m in doc.modes {
        let ctx = |what: &str| format!("mode `{}` {what}", m.name);
        let mut flow = BTreeMap::new();
        for (var, f) in m.flow {
            let vf = match f {
                FlowDoc::Affine { a, b } => VarFlow::affine(a, b),
                FlowDoc::Rect(text) => VarFlow::Rect(text.parse().map_err(|e: Error| {
                    Error::Model(format!("{}: {e}", ctx(&format!("flow of `{var}`"))))
                })?),
            };
            flow.insert(var, vf);
        }
        let mut mode = Mode::new(
            m.name.clone(),
            parse_predicate(&m.invariant, &ctx("invariant"))?,
            parse_predicate(&m.init, &ctx("init"))?,
            flow,
        );
        mode.note = m.note;
        modes.push(mode);
    }
    let mut transitions = Vec::new();
    for (k, t) in doc.transitions.into_iter().enumerate() {
        let ctx = |what: &str| format!("transition #{k} ({} --{}-->) {what}", t.source, t.action);
        let mut outcomes = Vec::new();
        for (j, o) in t.outcomes.into_iter().enumerate() {
            let mut post = Vec::new();
            for d in o.post {
                let mut sv = StarValuation::new();
                for (var, v) in d {
                    let value = match v {
                        PostValue::Num(n) => StarValue::Value(n),
                        PostValue::Text(s) if s == "*" => StarValue::Star,
                        PostValue::Text(s) => {
                            return Err(Error::Model(format!(
                                "{}: post value `{s}` for `{var}` is neither a number nor \"*\"",
                                ctx(&format!("outcome {j}"))
                            )))
                        }
                    };
                    sv.set(&var, value);
                }
                post.push(sv);
            }
            outcomes.push(Outcome {
                prob: o.prob,
                target: o.target,
                post,
            });
        }
        let mut pos = BTreeMap::new();
        for (target, text) in &t.pos {
            pos.insert(target.clone(), parse_predicate(text, &ctx(&format!("pos[{target}]")))?);
        }
        transitions.push(ProbTransition {
            pre: parse_predicate(&t.pre, &ctx("pre"))?,
            source: t.source,
            action: t.action,
            outcomes,
            pos,
            note: t.note,
        });
    }
    Ok(Pha {
        variables: doc.variables,
        actions: doc.actions,
        modes,
        transitions,
    })
}

fn to_doc(pha: &Pha) -> ModelDoc {
    ModelDoc {
        variables: pha.variables.clone(),
        actions: pha.actions.clone(),
        modes: pha
            .modes
            .iter()
            .map(|m| ModeDoc {
                name: m.name.clone(),
                flow: m
                    .flow
                    .iter()
                    .map(|(v, f)| {
                        let doc = match f {
                            VarFlow::Affine(a) => FlowDoc::Affine { a: a.a, b: a.b },
                            VarFlow::Rect(i) => FlowDoc::Rect(i.to_string()),
                        };
                        (v.clone(), doc)
                    })
                    .collect(),
                invariant: m.invariant.to_string(),
                init: m.init.to_string(),
                note: m.note.clone(),
            })
            .collect(),
        transitions: pha
            .transitions
            .iter()
            .map(|t| TransitionDoc {
                source: t.source.clone(),
                action: t.action.clone(),
                pre: t.pre.to_string(),
                outcomes: t
                    .outcomes
                    .iter()
                    .map(|o| OutcomeDoc {
                        prob: o.prob,
                        target: o.target.clone(),
                        post: o
                            .post
                            .iter()
                            .map(|d| {
                                d.iter()
                                    .map(|(v, s)| {
                                        let pv = match s {
                                            StarValue::Star => PostValue::Text("*".into()),
                                            StarValue::Value(n) => PostValue::Num(n),
                                        };
                                        (v.to_string(), pv)
                                    })
                                    .collect()
                            })
                            .collect(),
                    })
                    .collect(),
                pos: t.pos.iter().map(|(k, p)| (k.clone(), p.to_string())).collect(),
                note: t.note.clone(),
            })
            .collect(),
    }
}

/// Serialize a model as pretty-printed JSON.
pub fn emit_model(pha: &Pha) -> String {
    let mut text = serde_json::to_string_pretty(&to_doc(pha)).expect("model serializes");
    text.push('\n');
    text
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitDoc {
    #[serde(default)]
    covers: BTreeMap<String, Vec<BTreeMap<String, String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    uniform: Option<usize>,
}

fn rect_from_doc(doc: &BTreeMap<String, String>, ctx: &str) -> Result<Rectangle> {
    let mut bounds = Vec::new();
    for (var, text) in doc {
        let iv: Interval = text
            .parse()
            .map_err(|e: Error| Error::Model(format!("{ctx}, `{var}`: {e}")))?;
        bounds.push((var.clone(), iv));
    }
    Ok(Rectangle::from_bounds(bounds))
}

fn rect_to_doc(rect: &Rectangle) -> BTreeMap<String, String> {
    rect.bounds()
        .iter()
        .map(|(v, i)| (v.clone(), i.to_string()))
        .collect()
}

/// Parse a split specification. A `"uniform": k` entry fills in covers for modes that
/// are not listed explicitly.
pub fn parse_split_spec(text: &str, pha: &Pha) -> Result<SplitSpec> {
    let doc: SplitDoc = serde_json::from_str(text).map_err(syntax)?;
    let mut spec = match doc.uniform {
        Some(k) => SplitSpec::uniform(pha, k)?,
        None => SplitSpec::default(),
    };
    for (mode, pieces) in &doc.covers {
        let cover = pieces
            .iter()
            .enumerate()
            .map(|(i, p)| rect_from_doc(p, &format!("cover of `{mode}`, piece {}", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        spec.covers.insert(mode.clone(), cover);
    }
    Ok(spec)
}

pub fn emit_split_spec(spec: &SplitSpec) -> String {
    let doc = SplitDoc {
        covers: spec
            .covers
            .iter()
            .map(|(m, c)| (m.clone(), c.iter().map(rect_to_doc).collect()))
            .collect(),
        uniform: None,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("split spec serializes");
    text.push('\n');
    text
}

/// Sidecar written by transformation commands.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Clock(TranslationWitness),
    Split(SplitWitness),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessDoc {
    schema: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variable: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clock: Option<String>,
    copies: Vec<CopyDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CopyDoc {
    mode: String,
    original: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cover: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cell: Option<Vec<BTreeMap<String, String>>>,
}

pub fn emit_witness(w: &Witness) -> String {
    let doc = match w {
        Witness::Clock(c) => WitnessDoc {
            schema: WITNESS_SCHEMA.into(),
            kind: "clock-translation".into(),
            variable: Some(c.variable.clone()),
            clock: Some(c.clock.clone()),
            copies: c
                .copies
                .iter()
                .map(|k| CopyDoc {
                    mode: k.mode.clone(),
                    original: k.original.clone(),
                    start: Some(k.start),
                    a: Some(k.a),
                    b: Some(k.b),
                    index: None,
                    cover: None,
                    cell: None,
                })
                .collect(),
        },
        Witness::Split(s) => WitnessDoc {
            schema: WITNESS_SCHEMA.into(),
            kind: if s.approximated { "approximation" } else { "split" }.into(),
            variable: None,
            clock: None,
            copies: s
                .copies
                .iter()
                .map(|k| CopyDoc {
                    mode: k.mode.clone(),
                    original: k.original.clone(),
                    start: None,
                    a: None,
                    b: None,
                    index: Some(k.index),
                    cover: Some(rect_to_doc(&k.cover)),
                    cell: Some(k.cell.iter().map(rect_to_doc).collect()),
                })
                .collect(),
        },
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("witness serializes");
    text.push('\n');
    text
}

pub fn parse_witness(text: &str) -> Result<Witness> {
    let doc: WitnessDoc = serde_json::from_str(text).map_err(syntax)?;
    if doc.schema != WITNESS_SCHEMA {
        return Err(Error::Witness(format!(
            "unsupported schema `{}` (expected `{WITNESS_SCHEMA}`)",
            doc.schema
        )));
    }
    let missing = |what: &str, mode: &str| Error::Witness(format!("copy `{mode}` lacks `{what}`"));
    match doc.kind.as_str() {
        "clock-translation" => {
            let variable = doc.variable.ok_or_else(|| Error::Witness("missing `variable`".into()))?;
            let clock = doc.clock.unwrap_or_else(|| format!("t_{variable}"));
            let copies = doc
                .copies
                .into_iter()
                .map(|c| {
                    Ok(ClockCopy {
                        start: c.start.ok_or_else(|| missing("start", &c.mode))?,
                        a: c.a.ok_or_else(|| missing("a", &c.mode))?,
                        b: c.b.ok_or_else(|| missing("b", &c.mode))?,
                        mode: c.mode,
                        original: c.original,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Witness::Clock(TranslationWitness {
                variable,
                clock,
                copies,
            }))
        }
        kind @ ("split" | "approximation") => {
            let copies = doc
                .copies
                .into_iter()
                .map(|c| {
                    let cover = c.cover.as_ref().ok_or_else(|| missing("cover", &c.mode))?;
                    let cell = c.cell.as_ref().ok_or_else(|| missing("cell", &c.mode))?;
                    Ok(SplitCopy {
                        index: c.index.ok_or_else(|| missing("index", &c.mode))?,
                        cover: rect_from_doc(cover, &c.mode)?,
                        cell: cell
                            .iter()
                            .map(|r| rect_from_doc(r, &c.mode))
                            .collect::<Result<Vec<_>>>()?,
                        mode: c.mode,
                        original: c.original,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Witness::Split(SplitWitness {
                approximated: kind == "approximation",
                copies,
            }))
        }
        other => Err(Error::Witness(format!("unknown witness kind `{other}`"))),
    }
}
