//! FPGA specialization passes, applied in the fixed order TS -> LU -> LF
//! after a minimal canonicalization (constant folding + dead node removal).

mod canonicalize;
mod flatten;
mod schedule;
mod unroll;

pub use canonicalize::canonicalize;
pub use flatten::flatten_parallel_loops;
pub use schedule::insert_thread_scheduling;
pub use unroll::mark_unroll;

use crate::ir::{verify, IrGraph};
use serde::{Deserialize, Serialize};

/// Which passes run, and with what knobs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassConfig {
    pub ts_enabled: bool,
    /// Thread-block size per dimension for the NDRange node.
    pub ts_block_size: (u32, u32, u32),
    pub lu_enabled: bool,
    /// Factor for `#pragma unroll N` on dynamic-trip loops.
    pub lu_factor: u32,
    /// Constant-trip loops up to this many iterations fully unroll.
    pub lu_full_unroll_max_trips: u64,
    pub lf_enabled: bool,
}

impl Default for PassConfig {
    fn default() -> Self {
        PassConfig {
            ts_enabled: true,
            ts_block_size: (64, 1, 1),
            lu_enabled: true,
            lu_factor: 2,
            lu_full_unroll_max_trips: 128,
            lf_enabled: true,
        }
    }
}

impl PassConfig {
    /// Every pass disabled; the pipeline still canonicalizes.
    pub fn none() -> Self {
        PassConfig {
            ts_enabled: false,
            lu_enabled: false,
            lf_enabled: false,
            ..PassConfig::default()
        }
    }

    pub fn with_block(mut self, x: u32) -> Self {
        self.ts_block_size = (x, 1, 1);
        self
    }

    pub fn validate(&self) -> Result<(), PassError> {
        let (x, y, z) = self.ts_block_size;
        if x == 0 || y == 0 || z == 0 {
            return Err(PassError::InvalidConfig(format!(
                "block size components must be positive, got ({x},{y},{z})"
            )));
        }
        if self.lu_enabled && self.lu_factor < 2 {
            return Err(PassError::InvalidConfig(format!(
                "unroll factor must be at least 2, got {}",
                self.lu_factor
            )));
        }
        Ok(())
    }

    /// Stable text form, part of the artifact cache key.
    pub fn cache_key_component(&self) -> String {
        format!(
            "ts={} block={},{},{} lu={} factor={} full<={} lf={}",
            self.ts_enabled,
            self.ts_block_size.0,
            self.ts_block_size.1,
            self.ts_block_size.2,
            self.lu_enabled,
            self.lu_factor,
            self.lu_full_unroll_max_trips,
            self.lf_enabled
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PassError {
    #[error("graph already has an NDRange node")]
    AlreadyScheduled,
    #[error("loop flattening requires thread scheduling to have inserted an NDRange node")]
    MissingNdRange,
    #[error("invalid pass configuration: {0}")]
    InvalidConfig(String),
    #[error("graph failed verification after pass `{pass}`:\n{report}")]
    VerifyFailed { pass: String, report: String },
}

/// One record per executed pass, in execution order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassTraceEntry {
    pub pass: String,
    pub nodes_added: u32,
    pub nodes_removed: u32,
    /// Loop headers the pass affected, as stable node names.
    pub loops_affected: Vec<String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PassTrace {
    pub entries: Vec<PassTraceEntry>,
}

impl PassTrace {
    pub fn record(
        &mut self,
        pass: &str,
        before: (u32, usize),
        g: &IrGraph,
        loops_affected: Vec<String>,
        note: Option<String>,
    ) {
        let (next_before, live_before) = before;
        let nodes_added = g.next_id() - next_before;
        let nodes_removed =
            (live_before + nodes_added as usize).saturating_sub(g.live_count()) as u32;
        self.entries.push(PassTraceEntry {
            pass: pass.to_string(),
            nodes_added,
            nodes_removed,
            loops_affected,
            note,
        });
    }

    /// Line-oriented log form.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "pass {}: +{} -{} nodes",
                e.pass, e.nodes_added, e.nodes_removed
            ));
            if !e.loops_affected.is_empty() {
                out.push_str(&format!(" loops [{}]", e.loops_affected.join(", ")));
            }
            if let Some(n) = &e.note {
                out.push_str(&format!(" ({n})"));
            }
            out.push('\n');
        }
        out
    }

    pub fn pass_ran(&self, name: &str) -> bool {
        self.entries.iter().any(|e| e.pass == name)
    }
}

fn snapshot(g: &IrGraph) -> (u32, usize) {
    (g.next_id(), g.live_count())
}

fn check(g: &IrGraph, pass: &str) -> Result<(), PassError> {
    let report = verify(g);
    if report.ok() {
        Ok(())
    } else {
        Err(PassError::VerifyFailed {
            pass: pass.to_string(),
            report: report.to_string(),
        })
    }
}

/// Run canonicalize plus the enabled passes in the fixed order TS -> LU -> LF,
/// verifying the graph after each step.
pub fn run_pipeline(mut g: IrGraph, cfg: &PassConfig) -> Result<(IrGraph, PassTrace), PassError> {
    cfg.validate()?;
    check(&g, "input")?;
    let mut trace = PassTrace::default();

    let before = snapshot(&g);
    canonicalize(&mut g);
    trace.record("canonicalize", before, &g, vec![], None);
    check(&g, "canonicalize")?;

    if cfg.ts_enabled {
        let before = snapshot(&g);
        let note = insert_thread_scheduling(&mut g, cfg.ts_block_size)?;
        trace.record("thread-scheduling", before, &g, vec![], note);
        check(&g, "thread-scheduling")?;
    }
    if cfg.lu_enabled {
        let before = snapshot(&g);
        let outcome = mark_unroll(&mut g, cfg);
        trace.record(
            "loop-unrolling",
            before,
            &g,
            outcome.marked,
            outcome.note,
        );
        check(&g, "loop-unrolling")?;
    }
    if cfg.lf_enabled {
        let before = snapshot(&g);
        let outcome = flatten_parallel_loops(&mut g)?;
        trace.record("loop-flattening", before, &g, outcome.flattened, outcome.note);
        check(&g, "loop-flattening")?;
    }
    Ok((g, trace))
}
