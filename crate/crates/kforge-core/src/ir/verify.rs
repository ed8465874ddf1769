//! Structural checker for IR graphs. Run after build and after every pass;
//! violations are report entries, never panics.

use super::*;
use std::collections::HashSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rule: &'static str,
    pub node: Option<NodeId>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(n) => write!(f, "[{}] {}: {}", self.rule, n, self.detail),
            None => write!(f, "[{}] {}", self.rule, self.detail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            write!(f, "ok")
        } else {
            for v in &self.violations {
                writeln!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

pub fn verify(g: &IrGraph) -> VerificationReport {
    let mut r = VerificationReport::default();
    let mut push = |rule: &'static str, node: Option<NodeId>, detail: String| {
        r.violations.push(Violation { rule, node, detail });
    };

    // Dangling references.
    for id in g.node_ids() {
        for &inp in &g.node(id).inputs {
            if !g.is_live(inp) {
                push("dangling input", Some(id), format!("references deleted {inp}"));
            }
        }
        for &s in g.succ(id) {
            if !g.is_live(s) {
                push("dangling successor", Some(id), format!("points at deleted {s}"));
            }
        }
    }
    if !r.violations.is_empty() {
        return r; // Everything below assumes live references.
    }

    // Unique Start / End.
    let starts: Vec<_> = g
        .node_ids()
        .filter(|&id| g.node(id).kind == NodeKind::Start)
        .collect();
    let ends: Vec<_> = g
        .node_ids()
        .filter(|&id| g.node(id).kind == NodeKind::End)
        .collect();
    if starts.len() != 1 {
        push("start count", None, format!("{} Start nodes", starts.len()));
    }
    if ends.len() != 1 {
        push("end count", None, format!("{} End nodes", ends.len()));
    }
    if starts.len() != 1 {
        return r;
    }
    let start = starts[0];

    // Reachability from Start (and the preserved flatten guard condition)
    // over control and data edges.
    let mut reached: HashSet<NodeId> = HashSet::new();
    let mut stack = vec![start];
    if let Some(fl) = g.flattened {
        stack.push(fl.cond);
    }
    while let Some(n) = stack.pop() {
        if !reached.insert(n) {
            continue;
        }
        for &s in g.succ(n) {
            stack.push(s);
        }
        for &i in &g.node(n).inputs {
            stack.push(i);
        }
    }
    for id in g.node_ids() {
        if !reached.contains(&id) {
            push(
                "reachability",
                Some(id),
                format!("{} unreachable from Start", g.node(id).kind),
            );
        }
    }

    // NDRange placement: at most one, and adjacent to Start.
    let ndranges: Vec<_> = g
        .node_ids()
        .filter(|&id| matches!(g.node(id).kind, NodeKind::NdRange(..)))
        .collect();
    if ndranges.len() > 1 {
        push("NDRange count", None, format!("{} NDRange nodes", ndranges.len()));
    }
    if let Some(&nd) = ndranges.first() {
        if g.succ(start) != [nd] {
            push(
                "NDRange placement",
                Some(nd),
                "NDRange is not the unique control successor of Start".into(),
            );
        }
        if let NodeKind::NdRange(x, y, z) = g.node(nd).kind {
            if x == 0 || y == 0 || z == 0 {
                push(
                    "NDRange components",
                    Some(nd),
                    format!("non-positive block ({x},{y},{z})"),
                );
            }
        }
    }

    for id in g.node_ids() {
        let node = g.node(id);
        match &node.kind {
            NodeKind::LoopBegin => {
                let back_edges = g
                    .preds(id)
                    .iter()
                    .filter(|&&p| g.node(p).kind == NodeKind::LoopEnd)
                    .count();
                if back_edges != 1 {
                    push(
                        "loop back edge",
                        Some(id),
                        format!("{back_edges} LoopEnd predecessors"),
                    );
                }
                let exits = g
                    .succ(id)
                    .iter()
                    .filter(|&&s| g.node(s).kind == NodeKind::LoopExit)
                    .count();
                if exits < 1 {
                    push("loop exit", Some(id), "no LoopExit successor".into());
                }
                if node.inputs.len() != 1 {
                    push(
                        "loop condition",
                        Some(id),
                        format!("{} condition inputs", node.inputs.len()),
                    );
                }
            }
            NodeKind::Phi => {
                if node.inputs.is_empty() {
                    push("phi owner", Some(id), "phi without owner".into());
                    continue;
                }
                let owner = node.inputs[0];
                let owner_kind = &g.node(owner).kind;
                if !matches!(owner_kind, NodeKind::LoopBegin | NodeKind::Merge) {
                    push(
                        "phi owner",
                        Some(id),
                        format!("owner {owner} is {owner_kind}"),
                    );
                    continue;
                }
                let preds = g.preds(owner).len();
                let values = node.inputs.len() - 1;
                if values != preds {
                    push(
                        "phi operand count",
                        Some(id),
                        format!("{values} values for {preds} predecessors of {owner}"),
                    );
                }
            }
            NodeKind::UnrollHint(_) => {
                let succ = g.succ(id);
                if succ.len() != 1 || g.node(succ[0]).kind != NodeKind::LoopBegin {
                    push(
                        "UnrollHint target",
                        Some(id),
                        "successor is not a single LoopBegin".into(),
                    );
                }
            }
            NodeKind::GlobalId(d) | NodeKind::GlobalSize(d) => {
                if *d > 2 {
                    push("index dimension", Some(id), format!("dimension {d}"));
                }
            }
            NodeKind::If => {
                if g.succ(id).len() != 2 {
                    push(
                        "if successors",
                        Some(id),
                        format!("{} successors", g.succ(id).len()),
                    );
                }
            }
            NodeKind::End => {
                if !g.succ(id).is_empty() {
                    push("end successors", Some(id), "End has successors".into());
                }
            }
            _ => {}
        }
    }

    // Loop table consistency.
    for (i, info) in g.loop_table.iter().enumerate() {
        let mut check = |id: NodeId, want: NodeKind, what: &str| {
            if !g.is_live(id) || g.node(id).kind != want {
                push(
                    "loop table",
                    Some(id),
                    format!("entry {i}: {what} is not a live {want}"),
                );
            }
        };
        check(info.header, NodeKind::LoopBegin, "header");
        check(info.end, NodeKind::LoopEnd, "end");
        check(info.exit, NodeKind::LoopExit, "exit");
        if let Some(phi) = info.induction {
            if !g.is_live(phi) || g.node(phi).kind != NodeKind::Phi {
                push("loop table", Some(phi), format!("entry {i}: induction is not a Phi"));
            }
        }
    }

    r
}
