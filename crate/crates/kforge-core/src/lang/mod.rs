//! Frontend for the kernel language: a statically typed data-parallel
//! language whose `for` loops may carry a `@parallel` annotation.

mod ast;
mod lexer;
mod parser;
mod pretty;
mod validate;

pub use ast::{
    AstExpr, AstStmt, BinOp, Builtin, ExprKind, NodeId, ScalarType, Span, StmtKind, Type,
    TypedParam, UnOp,
};
pub use parser::parse;
pub use pretty::{float_literal, pretty_print};
pub use validate::{validate, LoopAttrs, ValidatedKernel};

use std::fmt;

/// Parsed kernel: name, typed parameters and the statement body.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSource {
    pub name: String,
    pub params: Vec<TypedParam>,
    pub body: Vec<AstStmt>,
}

/// Frontend diagnostics. Every variant carries a source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LangError {
    #[error("{0}: syntax error: {1}")]
    Syntax(Span, String),
    #[error("{0}: duplicate parameter `{1}`")]
    DuplicateParam(Span, String),
    #[error("{0}: type error: {1}")]
    Type(Span, String),
    #[error("{0}: illegal parallel loop: {1}")]
    IllegalParallelLoop(Span, String),
    #[error("{0}: unsupported construct: {1}")]
    OutOfScopeFeature(Span, String),
}

impl LangError {
    pub fn span(&self) -> Span {
        match self {
            LangError::Syntax(s, _)
            | LangError::DuplicateParam(s, _)
            | LangError::Type(s, _)
            | LangError::IllegalParallelLoop(s, _)
            | LangError::OutOfScopeFeature(s, _) => *s,
        }
    }
}

/// Non-fatal validation notes, e.g. demoted inner `@parallel` annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: warning: {}", self.span, self.message)
    }
}

/// Nearest f32 to 3.14159265358979; the language constant `PI`.
pub const PI_F32: f32 = 3.141_592_7_f32;
