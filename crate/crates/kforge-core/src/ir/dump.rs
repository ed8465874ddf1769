//! Stable text rendering of a graph for diffing in tests: one node per line
//! with `[data]` operand and `[ctrl]` successor tags.

use super::*;
use std::fmt::Write;

pub fn dump(g: &IrGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph {}", g.kernel_name);
    for p in &g.params {
        let node = p
            .node
            .map(|n| n.to_string())
            .unwrap_or_else(|| "-".to_string());
        let _ = writeln!(out, "param {}: {} = {}", p.name, p.ty, node);
    }
    for (i, l) in g.loop_table.iter().enumerate() {
        let induction = l
            .induction
            .map(|n| n.to_string())
            .unwrap_or_else(|| "-".to_string());
        let bound = l
            .bound
            .map(|n| n.to_string())
            .unwrap_or_else(|| "-".to_string());
        let trips = l
            .const_trips
            .map(|t| t.to_string())
            .unwrap_or_else(|| "?".to_string());
        let _ = writeln!(
            out,
            "loop {i}: header {} end {} exit {} induction {induction} bound {bound} {} depth {} trips {trips}",
            l.header,
            l.end,
            l.exit,
            if l.parallel { "parallel" } else { "sequential" },
            l.depth,
        );
    }
    if let Some(fl) = g.flattened {
        let _ = writeln!(out, "flattened: guard-cond {}", fl.cond);
    }
    for id in g.node_ids() {
        let node = g.node(id);
        let _ = write!(out, "{id} {}", node.kind);
        if let Some(ty) = node.ty {
            let _ = write!(out, " : {ty}");
        }
        if !node.inputs.is_empty() {
            let inputs = node
                .inputs
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            let _ = write!(out, " [data: {inputs}]");
        }
        if !g.succ(id).is_empty() {
            let succ = g
                .succ(id)
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            let _ = write!(out, " [ctrl: {succ}]");
        }
        out.push('\n');
    }
    out
}
