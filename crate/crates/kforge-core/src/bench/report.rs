//! Run reports and the ablation table.

use crate::runtime::TimingBreakdown;
use crate::specialize::{PassConfig, PassTrace};
use serde::{Deserialize, Serialize};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correctness {
    pub max_rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub benchmark: String,
    pub size: String,
    pub mode: String,
    pub pass_config: PassConfig,
    pub block: u64,
    pub seed: u64,
    pub breakdown: TimingBreakdown,
    pub jit_compile_ns: Option<u64>,
    /// Absent only under `--no-verify`.
    pub correctness: Option<Correctness>,
    pub output_checksum: String,
    pub pass_trace: PassTrace,
    pub artifact_key: Option<String>,
}

impl RunReport {
    /// Human-readable table for standard output.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "benchmark       {}  ({}, mode {}, block {}, seed {})\n",
            self.benchmark, self.size, self.mode, self.block, self.seed
        ));
        let b = &self.breakdown;
        out.push_str(&format!(
            "kernel          {:>12} ns\nh2d             {:>12} ns\nd2h             {:>12} ns\nrest            {:>12} ns\ntotal           {:>12} ns\n",
            b.kernel_ns, b.h2d_ns, b.d2h_ns, b.rest_ns, b.total_ns
        ));
        if let Some(jit) = self.jit_compile_ns {
            out.push_str(&format!("jit compile     {jit:>12} ns (outside breakdown)\n"));
        }
        match &self.correctness {
            Some(c) => out.push_str(&format!(
                "correctness     {} (max rel err {:.3e})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.max_rel_err
            )),
            None => out.push_str("correctness     skipped (--no-verify)\n"),
        }
        out.push_str(&format!("checksum        {}\n", self.output_checksum));
        if let Some(k) = &self.artifact_key {
            out.push_str(&format!("artifact        {k}\n"));
        }
        out
    }
}

/// Structural and correctness observations for one ablation arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub config: String,
    pub block: u64,
    pub correctness_pass: bool,
    pub max_rel_err: f64,
    pub attribute_present: bool,
    pub pragma_count: usize,
    pub for_loop_count: usize,
    pub uses_global_size: bool,
    pub lu_applied: bool,
    /// Emulation wall time; informational only, not an FPGA model.
    pub wall_ns: u64,
    pub output_checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub version: u32,
    pub benchmark: String,
    pub size: String,
    pub seed: u64,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "config,block,correctness_pass,max_rel_err,attribute,pragmas,for_loops,uses_global_size,lu_applied,wall_ns,checksum\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.config,
                r.block,
                r.correctness_pass,
                r.max_rel_err,
                r.attribute_present,
                r.pragma_count,
                r.for_loop_count,
                r.uses_global_size,
                r.lu_applied,
                r.wall_ns,
                r.output_checksum
            ));
        }
        out
    }

    pub fn render_table(&self) -> String {
        let mut out = format!(
            "ablation: {} ({}, seed {})\n{:<14} {:>5} {:>8} {:>6} {:>8} {:>6} {:>10}  checksum\n",
            self.benchmark, self.size, self.seed, "config", "block", "correct", "attr", "pragmas", "fors", "wall_ms"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<14} {:>5} {:>8} {:>6} {:>8} {:>6} {:>10.3}  {}\n",
                r.config,
                r.block,
                if r.correctness_pass { "pass" } else { "FAIL" },
                r.attribute_present,
                r.pragma_count,
                r.for_loop_count,
                r.wall_ns as f64 / 1e6,
                &r.output_checksum[..16.min(r.output_checksum.len())]
            ));
        }
        out.push_str("(wall times are emulation only and carry no FPGA meaning)\n");
        out
    }
}
