//! End-to-end execution: plan construction, mode dispatch (emulation, full
//! JIT, ahead-of-time), stage-2 compilation through a pluggable HLS driver,
//! bitstream caching, and the four-phase timing breakdown.

mod backend;
mod cache;
mod plan;

pub use backend::{Backend, BackendError, ExternalHlsBackend, MockHlsBackend, HLS_CMD_ENV};
pub use cache::{BitstreamCache, CacheEntry, CacheError, ARTIFACT_MAGIC, ARTIFACT_VERSION};
pub use plan::{
    check_bindings, launch_geometry, plan, plan_with_block, validate_plan, BindingValue, Bindings,
    ExecutionPlan, PlanError, PlanOp, DEFAULT_BLOCK,
};

use crate::device::{
    AccessClass, DeviceSession, FrameArg, HostArray, DEFAULT_HEAP_CAPACITY,
};
use crate::emit::{EmitOptions, EmittedKernel, EMITTER_VERSION};
use crate::lang::{Type, ValidatedKernel};
use crate::ocl::{execute, parse_ocl};
use crate::specialize::{PassConfig, PassTrace};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecutionMode {
    Emulation,
    FullJit,
    AheadOfTime,
}

impl ExecutionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExecutionMode::Emulation => "emulation",
            ExecutionMode::FullJit => "jit",
            ExecutionMode::AheadOfTime => "aot",
        }
    }
}

impl FromStr for ExecutionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "emulation" | "emu" => Ok(ExecutionMode::Emulation),
            "jit" | "full-jit" | "fulljit" => Ok(ExecutionMode::FullJit),
            "aot" | "ahead-of-time" => Ok(ExecutionMode::AheadOfTime),
            other => Err(format!(
                "unknown mode `{other}` (expected emulation|jit|aot)"
            )),
        }
    }
}

/// A compiled-kernel package standing in for an FPGA bitstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    /// Content hash over (stage-1 source, pass config, emitter version).
    pub key: String,
    pub entry_name: String,
    pub required_block: Option<(u32, u32, u32)>,
    pub payload: Vec<u8>,
    pub producer: String,
    pub created_at_ms: u64,
}

/// Cache key: pure function of the stage-1 output and its provenance.
pub fn artifact_key(stage1_source: &str, cfg: &PassConfig) -> String {
    let mut h = Sha256::new();
    h.update(stage1_source.as_bytes());
    h.update([0u8]);
    h.update(cfg.cache_key_component().as_bytes());
    h.update([0u8]);
    h.update(EMITTER_VERSION.as_bytes());
    hex::encode(h.finalize())
}

/// Phase accounting for one run; `rest` is defined as the remainder, so the
/// conservation identity holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TimingBreakdown {
    pub kernel_ns: u64,
    pub h2d_ns: u64,
    pub d2h_ns: u64,
    pub rest_ns: u64,
    pub total_ns: u64,
}

impl TimingBreakdown {
    pub fn conserved(&self) -> bool {
        self.kernel_ns + self.h2d_ns + self.d2h_ns + self.rest_ns == self.total_ns
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Compile(#[from] crate::compile::CompileError),
    #[error(transparent)]
    Emu(#[from] crate::ocl::EmuError),
    #[error(transparent)]
    Device(#[from] crate::device::DeviceError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no cached bitstream for key {0}; run the JIT mode (or `compile`) first")]
    BitstreamNotFound(String),
    #[error("cached artifact payload is not interpretable source: {0}")]
    BadPayload(String),
}

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Copy-out results, one entry per non-read-only array, in plan order.
    pub outputs: Vec<(String, HostArray)>,
    pub breakdown: TimingBreakdown,
    /// Stage-1 + stage-2 compile time; `None` outside the full JIT mode.
    pub jit_compile_ns: Option<u64>,
    pub trace: PassTrace,
    pub artifact_key: Option<String>,
    /// The stage-1 OpenCL C, for structural inspection.
    pub stage1_source: String,
    pub plan: ExecutionPlan,
    pub geometry: crate::ocl::LaunchGeometry,
}

/// Owns the bitstream cache and the stage-2 driver for a sequence of runs.
#[derive(Debug, Clone)]
pub struct Runtime {
    cache: BitstreamCache,
    backend: Backend,
    pub heap_capacity: usize,
}

impl Runtime {
    /// Mock-backend runtime over the given cache directory.
    pub fn new(cache_dir: impl Into<std::path::PathBuf>) -> Result<Self, RuntimeError> {
        Ok(Runtime {
            cache: BitstreamCache::new(cache_dir)?,
            backend: Backend::Mock(Arc::new(MockHlsBackend::new(None))),
            heap_capacity: DEFAULT_HEAP_CAPACITY,
        })
    }

    pub fn with_mock_delay_ms(mut self, delay_ms: Option<u64>) -> Self {
        self.backend = Backend::Mock(Arc::new(MockHlsBackend::new(delay_ms)));
        self
    }

    pub fn with_external_backend(mut self, external: ExternalHlsBackend) -> Self {
        self.backend = Backend::External(external);
        self
    }

    pub fn with_heap_capacity(mut self, bytes: usize) -> Self {
        self.heap_capacity = bytes;
        self
    }

    pub fn cache(&self) -> &BitstreamCache {
        &self.cache
    }

    /// Stage-2 invocations of the mock backend so far (cache hits excluded).
    pub fn backend_calls(&self) -> u64 {
        match &self.backend {
            Backend::Mock(m) => m.calls(),
            Backend::External(_) => 0,
        }
    }

    /// Stage-2 compilation with content-addressed reuse: returns the cached
    /// artifact when the key is known, otherwise drives the backend on its
    /// worker and publishes the result. The bool is true on a cache hit.
    pub fn hls_compile(
        &self,
        emitted: &EmittedKernel,
        cfg: &PassConfig,
    ) -> Result<(Artifact, bool), RuntimeError> {
        let key = artifact_key(&emitted.source, cfg);
        if let Some(artifact) = self.cache.load(&key)? {
            return Ok((artifact, true));
        }
        let payload = self.backend.compile(&emitted.source, &emitted.entry_name)?;
        let artifact = Artifact {
            key: key.clone(),
            entry_name: emitted.entry_name.clone(),
            required_block: emitted.required_block,
            payload,
            producer: self.backend.id().to_string(),
            created_at_ms: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
        };
        self.cache.store(&artifact)?;
        Ok((artifact, false))
    }

    /// Execute the kernel end to end in the given mode. See module docs for
    /// the phase accounting.
    pub fn run(
        &self,
        vk: &ValidatedKernel,
        bindings: &Bindings,
        mode: ExecutionMode,
        cfg: &PassConfig,
        block: u64,
        emit_opts: &EmitOptions,
    ) -> Result<RunOutcome, RuntimeError> {
        // Stage 1 runs in every mode: AOT still JIT-compiles to OpenCL C to
        // recover the cache key; only the HLS stage is skipped.
        let compile_started = Instant::now();
        let stage1 = crate::compile::compile_stage1(vk, cfg, emit_opts)?;
        let (exec_source, jit_compile_ns, artifact_key_out) = match mode {
            ExecutionMode::Emulation => (None, None, None),
            ExecutionMode::FullJit => {
                let (artifact, _hit) = self.hls_compile(&stage1.emitted, cfg)?;
                (
                    None,
                    Some(compile_started.elapsed().as_nanos() as u64),
                    Some(artifact.key),
                )
            }
            ExecutionMode::AheadOfTime => {
                let key = artifact_key(&stage1.emitted.source, cfg);
                if !self.cache.contains(&key) {
                    return Err(RuntimeError::BitstreamNotFound(key));
                }
                (None, None, Some(key))
            }
        };
        let _ = exec_source;

        // The measured window: artifact load + parse, heap setup, transfers,
        // kernel execution, copy-backs.
        let t0 = Instant::now();
        let source_text: String = match (&mode, &artifact_key_out) {
            (ExecutionMode::Emulation, _) => stage1.emitted.source.clone(),
            (_, Some(key)) => {
                let artifact = self
                    .cache
                    .load(key)?
                    .ok_or_else(|| RuntimeError::BitstreamNotFound(key.clone()))?;
                String::from_utf8(artifact.payload)
                    .map_err(|e| RuntimeError::BadPayload(e.to_string()))?
            }
            _ => unreachable!(),
        };
        let ast = parse_ocl(&source_text)?;

        let plan = plan_with_block(vk, bindings, block)?;
        validate_plan(&plan)?;
        let mut session = DeviceSession::new();
        session.allocate_heap(self.heap_capacity)?;

        let mut records = std::collections::HashMap::new();
        let mut outputs: Vec<(String, HostArray)> = Vec::new();
        let mut kernel_ns: u64 = 0;
        let mut geometry = None;
        let mut frame_offset = None;

        for op in &plan.ops {
            match op {
                PlanOp::CopyIn { buffer, access } => {
                    let host = bindings
                        .array(buffer)
                        .expect("plan buffers come from checked bindings");
                    let record = session.copy_in(host, buffer, *access)?;
                    records.insert(buffer.clone(), record);
                }
                PlanOp::BuildFrame => {
                    let mut args = Vec::new();
                    for p in &vk.kernel.params {
                        match p.ty {
                            Type::Array(_) => {
                                let r = &records[&p.name];
                                args.push(FrameArg::Buffer(r.device_offset));
                            }
                            Type::Scalar(_) => {
                                let s = bindings
                                    .scalar(&p.name)
                                    .expect("plan scalars come from checked bindings");
                                args.push(FrameArg::Scalar(s));
                            }
                        }
                    }
                    let frame = session.build_frame(&args)?;
                    frame_offset = Some(frame.frame_offset);
                }
                PlanOp::Launch { geometry: geom, .. } => {
                    let fb = frame_offset.expect("frame built before launch");
                    geometry = Some(*geom);
                    let t_k = Instant::now();
                    execute(&ast, session.heap_mut()?, fb, geom)?;
                    kernel_ns += t_k.elapsed().as_nanos() as u64;
                }
                PlanOp::Barrier => {
                    // All device work in this runtime is synchronous; the
                    // barrier marks the launch/copy-out boundary in the plan.
                }
                PlanOp::CopyOut { buffer, .. } => {
                    let record = &records[buffer];
                    let mut host = bindings.array(buffer).expect("checked").clone();
                    session.copy_out(record, &mut host)?;
                    outputs.push((buffer.clone(), host));
                }
            }
        }

        let total_ns = t0.elapsed().as_nanos() as u64;
        let h2d_ns = session.ledger().total_ns(crate::device::Direction::H2D);
        let d2h_ns = session.ledger().total_ns(crate::device::Direction::D2H);
        let accounted = kernel_ns + h2d_ns + d2h_ns;
        let (total_ns, rest_ns) = match total_ns.checked_sub(accounted) {
            Some(rest) => (total_ns, rest),
            None => (accounted, 0),
        };

        Ok(RunOutcome {
            outputs,
            breakdown: TimingBreakdown {
                kernel_ns,
                h2d_ns,
                d2h_ns,
                rest_ns,
                total_ns,
            },
            jit_compile_ns,
            trace: stage1.trace,
            artifact_key: artifact_key_out,
            stage1_source: stage1.emitted.source,
            plan,
            geometry: geometry.expect("plan contains a launch"),
        })
    }
}
