//! Loop-unrolling pass: marks eligible innermost sequential loops with an
//! UnrollHint node, emitted later as `#pragma unroll` directives for the HLS
//! compiler. Parallel loops are never marked.

use super::PassConfig;
use crate::ir::{IrGraph, LoopInfo, NodeId, NodeKind, UnrollStrategy};

pub struct UnrollOutcome {
    /// Headers of loops that received a hint.
    pub marked: Vec<String>,
    pub note: Option<String>,
}

pub fn mark_unroll(g: &mut IrGraph, cfg: &PassConfig) -> UnrollOutcome {
    let mut marked = Vec::new();
    let mut skipped = Vec::new();

    let candidates: Vec<LoopInfo> = g.loop_table.clone();
    for info in &candidates {
        if info.parallel {
            continue;
        }
        if !g.loops_inside(info).is_empty() {
            continue; // only innermost loops are considered
        }
        if g
            .preds(info.header)
            .iter()
            .any(|&p| matches!(g.node(p).kind, NodeKind::UnrollHint(_)))
        {
            continue; // already marked
        }
        if let Some(reason) = dependency_block(g, info) {
            skipped.push(format!("{}: {reason}", info.header));
            continue;
        }
        let strategy = match info.const_trips {
            Some(trips) if trips <= cfg.lu_full_unroll_max_trips => UnrollStrategy::Full,
            _ => UnrollStrategy::Factor(cfg.lu_factor),
        };
        let hint = g.add_node(NodeKind::UnrollHint(strategy), vec![], None);
        // Splice in front of the header, leaving the back edge intact.
        g.insert_before(hint, info.header, Some(info.end));
        marked.push(info.header.to_string());
    }

    let note = if marked.is_empty() && skipped.is_empty() {
        Some("no eligible sequential innermost loop".into())
    } else if skipped.is_empty() {
        None
    } else {
        Some(format!("skipped: {}", skipped.join("; ")))
    };
    UnrollOutcome { marked, note }
}

/// Conservative dependence test. The loop is ineligible when:
/// - it stores to an array that it also loads at a structurally different
///   index (a later iteration might read what this one wrote), or
/// - it carries a scalar across iterations in any form other than a
///   reduction accumulator (`s = s + e` / `s = s - e`).
fn dependency_block(g: &IrGraph, info: &LoopInfo) -> Option<String> {
    let body = body_nodes(g, info);

    let mut loads: Vec<(NodeId, NodeId)> = Vec::new();
    let mut stores: Vec<(NodeId, NodeId)> = Vec::new();
    collect_inline_accesses(g, g.node(info.header).inputs[0], &mut loads);
    for &n in &body {
        match g.node(n).kind {
            NodeKind::ArrayLoad => loads.push((g.node(n).inputs[0], g.node(n).inputs[1])),
            NodeKind::ArrayStore => stores.push((g.node(n).inputs[0], g.node(n).inputs[1])),
            NodeKind::LoopBegin | NodeKind::If => {
                collect_inline_accesses(g, g.node(n).inputs[0], &mut loads);
            }
            _ => {}
        }
    }
    for &(s_arr, s_idx) in &stores {
        for &(l_arr, l_idx) in &loads {
            if s_arr == l_arr && !expr_equal(g, s_idx, l_idx) {
                let name = match g.node(s_arr).kind {
                    NodeKind::Param(i) => g.params[i as usize].name.clone(),
                    _ => s_arr.to_string(),
                };
                return Some(format!("loop-carried memory dependence on `{name}`"));
            }
        }
    }

    // Scalar loop-carried values must be plain reduction accumulators.
    for phi in g.node_ids() {
        let node = g.node(phi);
        if node.kind != NodeKind::Phi || node.inputs.first() != Some(&info.header) {
            continue;
        }
        if Some(phi) == info.induction {
            continue;
        }
        let back = node.inputs[2];
        if back == phi {
            continue; // value unchanged on the back edge
        }
        let ok = match &g.node(back).kind {
            NodeKind::BinOp(crate::lang::BinOp::Add) => g.node(back).inputs.contains(&phi),
            NodeKind::BinOp(crate::lang::BinOp::Sub) => g.node(back).inputs[0] == phi,
            _ => false,
        };
        if !ok {
            return Some(format!("non-reduction loop-carried scalar {phi}"));
        }
    }
    None
}

/// Control-chain nodes strictly inside the loop body.
fn body_nodes(g: &IrGraph, info: &LoopInfo) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut stack = vec![info.header];
    let mut seen = std::collections::HashSet::new();
    while let Some(n) = stack.pop() {
        if !seen.insert(n) {
            continue;
        }
        if n != info.header {
            out.push(n);
        }
        for &s in g.succ(n) {
            if s == info.header || s == info.exit {
                continue;
            }
            stack.push(s);
        }
    }
    out.sort();
    out
}

/// Array loads buried in floating condition trees.
fn collect_inline_accesses(g: &IrGraph, root: NodeId, loads: &mut Vec<(NodeId, NodeId)>) {
    let mut stack = vec![root];
    let mut seen = std::collections::HashSet::new();
    while let Some(n) = stack.pop() {
        if !seen.insert(n) {
            continue;
        }
        let node = g.node(n);
        if node.kind == NodeKind::ArrayLoad {
            loads.push((node.inputs[0], node.inputs[1]));
        }
        if !matches!(node.kind, NodeKind::Phi) {
            for &i in &node.inputs {
                stack.push(i);
            }
        }
    }
}

/// Structural equality of index expressions: same shape over the same leaf
/// nodes (params, phis, constants by value).
pub fn expr_equal(g: &IrGraph, a: NodeId, b: NodeId) -> bool {
    if a == b {
        return true;
    }
    let na = g.node(a);
    let nb = g.node(b);
    match (&na.kind, &nb.kind) {
        (NodeKind::Const(x), NodeKind::Const(y)) => x == y,
        // Phis compare by identity only; recursing would chase the back edge.
        (NodeKind::Phi, _) | (_, NodeKind::Phi) => false,
        (ka, kb) if ka == kb => {
            na.inputs.len() == nb.inputs.len()
                && na
                    .inputs
                    .iter()
                    .zip(&nb.inputs)
                    .all(|(&x, &y)| expr_equal(g, x, y))
        }
        _ => false,
    }
}
