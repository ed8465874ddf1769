//! Compiler and runtime for a small annotated data-parallel kernel language
//! targeting FPGA-style OpenCL execution.
//!
//! The pipeline is: parse a `.tk` kernel, validate it, lower it to a graph IR,
//! specialize the graph with the FPGA passes (thread scheduling, loop
//! unrolling, loop flattening), emit heap-addressed OpenCL C, and execute the
//! result through one of three modes (emulation, full JIT, ahead-of-time)
//! against a simulated managed device heap.

pub mod bench;
pub mod compile;
pub mod device;
pub mod emit;
pub mod ir;
pub mod lang;
pub mod ocl;
pub mod runtime;
pub mod specialize;
