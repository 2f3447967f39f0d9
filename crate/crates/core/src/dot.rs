//! Graphviz rendering of an automaton.

use std::fmt::Write;

use crate::geometry::fmt_num;
use crate::model::Pha;
use crate::predicate::Predicate;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// One node per mode (flow and invariant in the label), a point marker feeding every mode
/// with a satisfiable initial condition, and one edge per outcome of every distribution.
/// Ordering follows the model, so output is stable.
pub fn export_dot(pha: &Pha) -> String {
    let mut out = String::from("digraph pha {\n  rankdir=LR;\n  node [shape=box];\n");
    for m in &pha.modes {
        let mut label = m.name.clone();
        for (var, flow) in &m.flow {
            label.push('\n');
            label.push_str(&flow.render(var));
        }
        label.push('\n');
        label.push_str(&m.invariant.to_string());
        let _ = writeln!(out, "  {} [label={}];", quote(&m.name), quote(&label));
    }
    for m in &pha.modes {
        if m.init == Predicate::False {
            continue;
        }
        let marker = format!("__init_{}", m.name);
        let _ = writeln!(out, "  {} [shape=point, label=\"\"];", quote(&marker));
        let _ = writeln!(out, "  {} -> {} [label={}];", quote(&marker), quote(&m.name), quote(&m.init.to_string()));
    }
    for t in &pha.transitions {
        for o in &t.outcomes {
            let mut label = format!("{}, {}", t.action, fmt_num(o.prob));
            if t.pre != Predicate::True {
                let _ = write!(label, "\npre {}", t.pre);
            }
            let posts: Vec<String> = o.post.iter().map(ToString::to_string).collect();
            let _ = write!(label, "\npost {}", posts.join(" | "));
            let pos = t.pos_for(&o.target);
            if *pos != Predicate::True {
                let _ = write!(label, "\npos {pos}");
            }
            let _ = writeln!(out, "  {} -> {} [label={}];", quote(&t.source), quote(&o.target), quote(&label));
        }
    }
    out.push_str("}\n");
    out
}
