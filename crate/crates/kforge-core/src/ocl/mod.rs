//! Parser and interpreter for the emitted OpenCL C dialect: the emulation
//! executor. Runs kernels one work-item at a time against a [`DeviceHeap`],
//! with IEEE-754 single-precision float arithmetic and wrapping 32-bit
//! integer arithmetic throughout. Functional only; not a performance model.

mod exec;
mod lexer;
mod parser;

pub use exec::{execute, execute_ordered, GidOrder};
pub use parser::parse_ocl;

use serde::{Deserialize, Serialize};

/// Scalar C types of the dialect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CType {
    Int,
    Uint,
    Uchar,
    Long,
    Ulong,
    Float,
}

impl CType {
    pub fn size(self) -> usize {
        match self {
            CType::Uchar => 1,
            CType::Int | CType::Uint | CType::Float => 4,
            CType::Long | CType::Ulong => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CType::Int => "int",
            CType::Uint => "uint",
            CType::Uchar => "uchar",
            CType::Long => "long",
            CType::Ulong => "ulong",
            CType::Float => "float",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Loc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum COp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CBuiltin {
    Sin,
    Cos,
    Sqrt,
    Exp,
    Log,
    Pow,
    Fabs,
    Floor,
    Fmin,
    Fmax,
}

impl CBuiltin {
    pub fn from_name(name: &str) -> Option<(Self, usize)> {
        Some(match name {
            "sin" => (CBuiltin::Sin, 1),
            "cos" => (CBuiltin::Cos, 1),
            "sqrt" => (CBuiltin::Sqrt, 1),
            "exp" => (CBuiltin::Exp, 1),
            "log" => (CBuiltin::Log, 1),
            "pow" => (CBuiltin::Pow, 2),
            "fabs" => (CBuiltin::Fabs, 1),
            "floor" => (CBuiltin::Floor, 1),
            "fmin" => (CBuiltin::Fmin, 2),
            "fmax" => (CBuiltin::Fmax, 2),
            _ => return None,
        })
    }
}

/// Variable slot index after name resolution.
pub type Slot = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum CExpr {
    IntLit(i32),
    U64Lit(u64),
    FloatLit(f32),
    Var(Slot),
    /// `ptr[index]`: element load through a declared heap pointer.
    PtrIndex {
        slot: Slot,
        elem: CType,
        index: Box<CExpr>,
        loc: Loc,
    },
    /// `*((__global T *) &_heap_base[addr])`
    HeapLoad {
        ty: CType,
        addr: Box<CExpr>,
        loc: Loc,
    },
    Binary {
        op: COp,
        lhs: Box<CExpr>,
        rhs: Box<CExpr>,
        loc: Loc,
    },
    Neg(Box<CExpr>),
    Not(Box<CExpr>),
    Cast {
        ty: CType,
        expr: Box<CExpr>,
    },
    Call {
        builtin: CBuiltin,
        args: Vec<CExpr>,
    },
    GlobalId(u8),
    GlobalSize(u8),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CStmt {
    Assign {
        slot: Slot,
        value: CExpr,
    },
    HeapStore {
        ty: CType,
        addr: CExpr,
        value: CExpr,
        loc: Loc,
    },
    For {
        init: Option<Box<CStmt>>,
        cond: Option<CExpr>,
        update: Option<Box<CStmt>>,
        body: Vec<CStmt>,
        /// Attached `#pragma unroll`; `Some(None)` is a full unroll request.
        pragma: Option<Option<u32>>,
    },
    While {
        cond: CExpr,
        body: Vec<CStmt>,
    },
    If {
        cond: CExpr,
        then_body: Vec<CStmt>,
        else_body: Vec<CStmt>,
    },
    /// `__global ulong *p = (__global ulong *) &_heap_base[off];`
    PtrDecl {
        slot: Slot,
        offset: CExpr,
    },
    Block(Vec<CStmt>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Scalar(CType),
    /// Pointer into the heap with a fixed element type.
    Ptr(CType),
}

/// Parsed kernel in the emitted dialect, names resolved to slots.
#[derive(Debug, Clone, PartialEq)]
pub struct OclKernelAst {
    pub entry_name: String,
    pub required_block: Option<(u32, u32, u32)>,
    pub body: Vec<CStmt>,
    pub var_kinds: Vec<VarKind>,
    pub var_names: Vec<String>,
    /// Count of `#pragma unroll` annotations, for structural reports.
    pub pragma_count: usize,
}

/// 1-D launch geometry. The global size must be a positive multiple of the
/// block size; the runtime rounds dataset sizes up to satisfy this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaunchGeometry {
    pub global_size: u64,
    pub block_size: u64,
}

impl LaunchGeometry {
    pub fn new(global_size: u64, block_size: u64) -> Result<Self, EmuError> {
        if global_size == 0 || block_size == 0 || global_size % block_size != 0 {
            return Err(EmuError::BadGeometry {
                global_size,
                block_size,
            });
        }
        Ok(LaunchGeometry {
            global_size,
            block_size,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmuError {
    #[error("{loc}: OpenCL syntax error: {msg}")]
    OclSyntax { loc: Loc, msg: String },
    #[error("{loc}: unsupported construct: {what}")]
    UnsupportedConstruct { loc: Loc, what: String },
    #[error("launch geometry ({global_size}, {block_size}) is not a positive block multiple")]
    BadGeometry { global_size: u64, block_size: u64 },
    #[error(
        "block size {block} conflicts with reqd_work_group_size({attr_x}, {attr_y}, {attr_z})"
    )]
    GeometryMismatch {
        attr_x: u32,
        attr_y: u32,
        attr_z: u32,
        block: u64,
    },
    #[error("work-item {gid} at {loc}: heap fault, {size} bytes at offset {offset}")]
    HeapFault {
        gid: u64,
        loc: Loc,
        offset: u64,
        size: usize,
    },
    #[error("work-item {gid} at {loc}: integer division by zero")]
    DivideByZero { gid: u64, loc: Loc },
}

/// Parse a `.cl` file from disk; the dialect accepts hand-written kernels
/// that stay inside the emitted grammar.
pub fn parse_ocl_file(path: &std::path::Path) -> Result<OclKernelAst, EmuError> {
    let text = std::fs::read_to_string(path).map_err(|e| EmuError::OclSyntax {
        loc: Loc::default(),
        msg: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_ocl(&text)
}
