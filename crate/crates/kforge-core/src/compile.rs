//! Stage-1 compilation: validated kernel -> specialized graph -> OpenCL C.

use crate::emit::{emit, EmitError, EmitOptions, EmittedKernel};
use crate::ir::{build, IrGraph};
use crate::lang::ValidatedKernel;
use crate::specialize::{run_pipeline, PassConfig, PassError, PassTrace};

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error(transparent)]
    Pass(#[from] PassError),
    #[error(transparent)]
    Emit(#[from] EmitError),
}

pub struct Stage1Result {
    pub emitted: EmittedKernel,
    pub trace: PassTrace,
    pub graph: IrGraph,
}

/// Lower, specialize and emit. Dumps of the graph before/after each pass are
/// available by rerunning the pieces; this composes them for the common path.
pub fn compile_stage1(
    vk: &ValidatedKernel,
    cfg: &PassConfig,
    opts: &EmitOptions,
) -> Result<Stage1Result, CompileError> {
    let graph = build(vk);
    let (graph, trace) = run_pipeline(graph, cfg)?;
    let emitted = emit(&graph, opts)?;
    Ok(Stage1Result {
        emitted,
        trace,
        graph,
    })
}
