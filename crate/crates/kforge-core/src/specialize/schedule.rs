//! Thread-scheduling pass: inserts the NDRange node carrying per-dimension
//! thread-block sizes right after Start, so the emitter can pin the
//! work-group shape with `reqd_work_group_size`.

use super::PassError;
use crate::ir::{IrGraph, NodeKind};

/// Returns a trace note; `Err(AlreadyScheduled)` when an NDRange exists.
pub fn insert_thread_scheduling(
    g: &mut IrGraph,
    block: (u32, u32, u32),
) -> Result<Option<String>, PassError> {
    if g.nd_range().is_some() {
        return Err(PassError::AlreadyScheduled);
    }
    if !g.loop_table.iter().any(|l| l.parallel) {
        return Ok(Some("no parallel loop; thread scheduling skipped".into()));
    }
    let start = g.start();
    let old_succ = g.succ(start).to_vec();
    let nd = g.add_node(NodeKind::NdRange(block.0, block.1, block.2), vec![], None);
    g.set_succ(start, vec![nd]);
    g.set_succ(nd, old_succ);
    Ok(None)
}
