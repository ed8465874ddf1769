//! Loop-flattening pass: removes the outermost parallel loop, replacing its
//! induction variable with the global-id value and splicing the body into the
//! surrounding control flow. Sequential loops are preserved.

use super::PassError;
use crate::ir::{FlattenInfo, IrGraph, NodeKind};

pub struct FlattenOutcome {
    pub flattened: Vec<String>,
    pub note: Option<String>,
}

pub fn flatten_parallel_loops(g: &mut IrGraph) -> Result<FlattenOutcome, PassError> {
    let targets: Vec<usize> = g
        .loop_table
        .iter()
        .enumerate()
        .filter(|(_, l)| l.parallel)
        .map(|(i, _)| i)
        .collect();
    if targets.is_empty() {
        return Ok(FlattenOutcome {
            flattened: vec![],
            note: Some("no parallel loop; flattening skipped".into()),
        });
    }
    if g.nd_range().is_none() {
        return Err(PassError::MissingNdRange);
    }

    let mut flattened = Vec::new();
    for idx in targets.into_iter().rev() {
        let info = g.loop_table[idx].clone();
        let header = info.header;
        let iphi = info.induction.expect("parallel loop has an induction phi");
        let cond = g.node(header).inputs[0];
        let init = g.node(iphi).inputs[1];
        let back = g.node(iphi).inputs[2];

        // All induction uses now read the global-id value (the phi's entry).
        g.replace_uses(iphi, init);

        // Drop the grid-stride increment and its GlobalSize feed.
        let gsize = g
            .node(back)
            .inputs
            .iter()
            .copied()
            .find(|&i| matches!(g.node(i).kind, NodeKind::GlobalSize(_)));
        g.unlink_from_chain(back);
        g.kill(iphi);
        g.kill(back);
        if let Some(gs) = gsize {
            if g.users(gs).is_empty() {
                g.unlink_from_chain(gs);
                g.kill(gs);
            }
        }

        // Splice the body over the loop scaffolding.
        let entry_pred = g
            .preds(header)
            .into_iter()
            .find(|&p| p != info.end)
            .expect("loop header has an entry predecessor");
        let body_first = g.succ(header)[0];
        let after = g.succ(info.exit)[0];
        if body_first == info.end {
            g.replace_succ(entry_pred, header, after);
        } else {
            let last_body = g
                .preds(info.end)
                .into_iter()
                .find(|&p| p != header)
                .expect("non-empty loop body ends somewhere");
            g.replace_succ(entry_pred, header, body_first);
            g.replace_succ(last_body, info.end, after);
        }
        g.kill(header);
        g.kill(info.end);
        g.kill(info.exit);
        g.loop_table.remove(idx);

        // The condition (now `gid < bound`) survives as the bounds guard.
        g.flattened = Some(FlattenInfo { cond });
        flattened.push(header.to_string());
    }
    Ok(FlattenOutcome {
        flattened,
        note: None,
    })
}
