//! Type checking and parallel-loop legality for parsed kernels.

use super::ast::*;
use super::{KernelSource, LangError, Warning};
use std::collections::HashMap;

/// Attributes computed per loop statement during validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoopAttrs {
    /// Number of enclosing loops.
    pub depth: u32,
    /// Effective parallel flag after demotion.
    pub parallel: bool,
    /// True when an annotation was accepted but demoted to sequential.
    pub demoted: bool,
    /// Trip count when both bounds are compile-time integer constants.
    pub const_trips: Option<u64>,
    pub is_for: bool,
}

/// A type-checked kernel. Expression types are recorded per AST node id;
/// loop statements get a [`LoopAttrs`] entry.
#[derive(Debug, Clone)]
pub struct ValidatedKernel {
    pub kernel: KernelSource,
    pub types: HashMap<NodeId, Type>,
    pub loops: HashMap<NodeId, LoopAttrs>,
    pub warnings: Vec<Warning>,
}

impl ValidatedKernel {
    /// The single effective-parallel loop, if the kernel has one.
    pub fn outer_parallel_loop(&self) -> Option<&AstStmt> {
        fn find<'a>(stmts: &'a [AstStmt], loops: &HashMap<NodeId, LoopAttrs>) -> Option<&'a AstStmt> {
            for s in stmts {
                match &s.kind {
                    StmtKind::ForRange { body, .. } => {
                        if loops.get(&s.id).is_some_and(|a| a.parallel) {
                            return Some(s);
                        }
                        if let Some(found) = find(body, loops) {
                            return Some(found);
                        }
                    }
                    StmtKind::While { body, .. } | StmtKind::Block(body) => {
                        if let Some(found) = find(body, loops) {
                            return Some(found);
                        }
                    }
                    StmtKind::If {
                        then_body,
                        else_body,
                        ..
                    } => {
                        if let Some(found) = find(then_body, loops) {
                            return Some(found);
                        }
                        if let Some(found) = find(else_body, loops) {
                            return Some(found);
                        }
                    }
                    _ => {}
                }
            }
            None
        }
        find(&self.kernel.body, &self.loops)
    }

    pub fn expr_type(&self, id: NodeId) -> Type {
        self.types[&id]
    }

    pub fn array_params(&self) -> impl Iterator<Item = &TypedParam> {
        self.kernel
            .params
            .iter()
            .filter(|p| matches!(p.ty, Type::Array(_)))
    }
}

/// Type-check the kernel and resolve loop attributes.
pub fn validate(kernel: KernelSource) -> Result<ValidatedKernel, LangError> {
    let mut cx = Checker {
        types: HashMap::new(),
        loops: HashMap::new(),
        warnings: Vec::new(),
        scopes: Vec::new(),
        params: HashMap::new(),
        loop_depth: 0,
        parallel_taken: false,
    };
    for p in &kernel.params {
        cx.params.insert(p.name.clone(), p.ty);
    }
    cx.scopes.push(Scope::default());
    cx.check_body(&kernel.body)?;
    Ok(ValidatedKernel {
        kernel,
        types: cx.types,
        loops: cx.loops,
        warnings: cx.warnings,
    })
}

#[derive(Default)]
struct Scope {
    vars: HashMap<String, ScalarType>,
    /// Set when the scope is a parallel-annotated loop body; holds its span.
    parallel_span: Option<Span>,
    /// Loop variables are read-only inside their body.
    loop_vars: HashMap<String, ()>,
}

struct Checker {
    types: HashMap<NodeId, Type>,
    loops: HashMap<NodeId, LoopAttrs>,
    warnings: Vec<Warning>,
    scopes: Vec<Scope>,
    params: HashMap<String, Type>,
    loop_depth: u32,
    /// True once the first outermost parallel loop has been accepted.
    parallel_taken: bool,
}

impl Checker {
    fn lookup_var(&self, name: &str) -> Option<(usize, ScalarType, bool)> {
        for (idx, scope) in self.scopes.iter().enumerate().rev() {
            if let Some(ty) = scope.vars.get(name) {
                let is_loop_var = scope.loop_vars.contains_key(name);
                return Some((idx, *ty, is_loop_var));
            }
        }
        None
    }

    fn declare(&mut self, span: Span, name: &str, ty: ScalarType) -> Result<(), LangError> {
        if self.params.contains_key(name) || self.lookup_var(name).is_some() {
            return Err(LangError::Type(
                span,
                format!("`{name}` is already declared; shadowing is not allowed"),
            ));
        }
        self.scopes
            .last_mut()
            .unwrap()
            .vars
            .insert(name.to_string(), ty);
        Ok(())
    }

    fn check_body(&mut self, stmts: &[AstStmt]) -> Result<(), LangError> {
        for s in stmts {
            self.check_stmt(s)?;
        }
        Ok(())
    }

    fn check_stmt(&mut self, stmt: &AstStmt) -> Result<(), LangError> {
        match &stmt.kind {
            StmtKind::VarDecl { name, ty, init } => {
                let init_ty = self.check_scalar_expr(init)?;
                if let Some(want) = ty {
                    if *want != init_ty {
                        return Err(LangError::Type(
                            stmt.span,
                            format!("`{name}` declared as {want} but initialized with {init_ty}"),
                        ));
                    }
                }
                self.declare(stmt.span, name, init_ty)
            }
            StmtKind::Assign { name, value } => {
                let value_ty = self.check_scalar_expr(value)?;
                let Some((scope_idx, var_ty, is_loop_var)) = self.lookup_var(name) else {
                    if self.params.contains_key(name) {
                        return Err(LangError::Type(
                            stmt.span,
                            format!("cannot assign to parameter `{name}`"),
                        ));
                    }
                    return Err(LangError::Type(
                        stmt.span,
                        format!("assignment to undeclared variable `{name}`"),
                    ));
                };
                if is_loop_var {
                    return Err(LangError::Type(
                        stmt.span,
                        format!("cannot assign to loop variable `{name}`"),
                    ));
                }
                if var_ty != value_ty {
                    return Err(LangError::Type(
                        stmt.span,
                        format!("`{name}` has type {var_ty}, assigned {value_ty}"),
                    ));
                }
                // A parallel loop may not write scalars that outlive its iteration.
                for scope in &self.scopes[scope_idx + 1..] {
                    if let Some(pspan) = scope.parallel_span {
                        return Err(LangError::IllegalParallelLoop(
                            stmt.span,
                            format!(
                                "writes scalar `{name}` declared outside the parallel loop at {pspan}"
                            ),
                        ));
                    }
                }
                Ok(())
            }
            StmtKind::ArrayStore {
                array,
                index,
                value,
            } => {
                let elem = self.array_elem(stmt.span, array)?;
                let idx_ty = self.check_scalar_expr(index)?;
                if idx_ty != ScalarType::I32 {
                    return Err(LangError::Type(
                        index.span,
                        format!("array index must be i32, found {idx_ty}"),
                    ));
                }
                let value_ty = self.check_scalar_expr(value)?;
                if value_ty != elem {
                    return Err(LangError::Type(
                        stmt.span,
                        format!("storing {value_ty} into array of {elem}"),
                    ));
                }
                Ok(())
            }
            StmtKind::ForRange {
                var,
                lo,
                hi,
                parallel,
                body,
            } => {
                let lo_ty = self.check_scalar_expr(lo)?;
                let hi_ty = self.check_scalar_expr(hi)?;
                if lo_ty != ScalarType::I32 || hi_ty != ScalarType::I32 {
                    return Err(LangError::Type(
                        stmt.span,
                        "loop bounds must be i32".into(),
                    ));
                }

                let mut effective = *parallel;
                let mut demoted = false;
                if *parallel {
                    if self.loop_depth > 0 || self.parallel_taken {
                        effective = false;
                        demoted = true;
                        self.warnings.push(Warning {
                            span: stmt.span,
                            message: format!(
                                "`@parallel` on loop `{var}` demoted to sequential; only the \
                                 outermost parallel loop maps to the global index space"
                            ),
                        });
                    } else {
                        self.parallel_taken = true;
                    }
                }

                let const_trips = match (eval_const_i64(lo), eval_const_i64(hi)) {
                    (Some(a), Some(b)) => Some((b - a).max(0) as u64),
                    _ => None,
                };
                self.loops.insert(
                    stmt.id,
                    LoopAttrs {
                        depth: self.loop_depth,
                        parallel: effective,
                        demoted,
                        const_trips,
                        is_for: true,
                    },
                );

                let mut scope = Scope::default();
                if *parallel {
                    scope.parallel_span = Some(stmt.span);
                }
                scope.vars.insert(var.clone(), ScalarType::I32);
                scope.loop_vars.insert(var.clone(), ());
                if self.params.contains_key(var) {
                    return Err(LangError::Type(
                        stmt.span,
                        format!("loop variable `{var}` shadows a parameter"),
                    ));
                }
                if self.lookup_var(var).is_some() {
                    return Err(LangError::Type(
                        stmt.span,
                        format!("loop variable `{var}` shadows an existing variable"),
                    ));
                }
                self.scopes.push(scope);
                self.loop_depth += 1;
                self.check_body(body)?;
                self.loop_depth -= 1;
                self.scopes.pop();
                Ok(())
            }
            StmtKind::While { cond, body } => {
                let cond_ty = self.check_scalar_expr(cond)?;
                if cond_ty != ScalarType::I32 {
                    return Err(LangError::Type(
                        cond.span,
                        format!("condition must be i32, found {cond_ty}"),
                    ));
                }
                self.loops.insert(
                    stmt.id,
                    LoopAttrs {
                        depth: self.loop_depth,
                        parallel: false,
                        demoted: false,
                        const_trips: None,
                        is_for: false,
                    },
                );
                self.scopes.push(Scope::default());
                self.loop_depth += 1;
                self.check_body(body)?;
                self.loop_depth -= 1;
                self.scopes.pop();
                Ok(())
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let cond_ty = self.check_scalar_expr(cond)?;
                if cond_ty != ScalarType::I32 {
                    return Err(LangError::Type(
                        cond.span,
                        format!("condition must be i32, found {cond_ty}"),
                    ));
                }
                self.scopes.push(Scope::default());
                self.check_body(then_body)?;
                self.scopes.pop();
                self.scopes.push(Scope::default());
                self.check_body(else_body)?;
                self.scopes.pop();
                Ok(())
            }
            StmtKind::Block(body) => {
                self.scopes.push(Scope::default());
                self.check_body(body)?;
                self.scopes.pop();
                Ok(())
            }
        }
    }

    fn array_elem(&self, span: Span, name: &str) -> Result<ScalarType, LangError> {
        match self.params.get(name) {
            Some(Type::Array(elem)) => Ok(*elem),
            Some(Type::Scalar(_)) => Err(LangError::Type(
                span,
                format!("`{name}` is a scalar parameter, not an array"),
            )),
            None => Err(LangError::Type(span, format!("unknown array `{name}`"))),
        }
    }

    fn check_scalar_expr(&mut self, e: &AstExpr) -> Result<ScalarType, LangError> {
        let ty = self.infer(e)?;
        self.types.insert(e.id, Type::Scalar(ty));
        Ok(ty)
    }

    fn infer(&mut self, e: &AstExpr) -> Result<ScalarType, LangError> {
        match &e.kind {
            ExprKind::IntLit(_) => Ok(ScalarType::I32),
            ExprKind::FloatLit(_) | ExprKind::Pi => Ok(ScalarType::F32),
            ExprKind::Var(name) => {
                if let Some((_, ty, _)) = self.lookup_var(name) {
                    return Ok(ty);
                }
                match self.params.get(name) {
                    Some(Type::Scalar(ty)) => Ok(*ty),
                    Some(Type::Array(_)) => Err(LangError::Type(
                        e.span,
                        format!("array `{name}` used as a scalar value"),
                    )),
                    None => Err(LangError::Type(
                        e.span,
                        format!("unknown identifier `{name}`"),
                    )),
                }
            }
            ExprKind::ArrayLoad { array, index } => {
                let elem = self.array_elem(e.span, array)?;
                let idx_ty = self.check_scalar_expr(index)?;
                if idx_ty != ScalarType::I32 {
                    return Err(LangError::Type(
                        index.span,
                        format!("array index must be i32, found {idx_ty}"),
                    ));
                }
                Ok(elem)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let lt = self.check_scalar_expr(lhs)?;
                let rt = self.check_scalar_expr(rhs)?;
                if lt != rt {
                    return Err(LangError::Type(
                        e.span,
                        format!(
                            "operands of `{}` must have the same type, found {lt} and {rt}",
                            op.symbol()
                        ),
                    ));
                }
                if *op == BinOp::Rem && lt == ScalarType::F32 {
                    return Err(LangError::Type(
                        e.span,
                        "`%` is defined for i32 only".into(),
                    ));
                }
                if op.is_logical() && lt != ScalarType::I32 {
                    return Err(LangError::Type(
                        e.span,
                        format!("`{}` is defined for i32 only", op.symbol()),
                    ));
                }
                if op.is_comparison() || op.is_logical() {
                    Ok(ScalarType::I32)
                } else {
                    Ok(lt)
                }
            }
            ExprKind::Unary { op: UnOp::Neg, operand } => self.check_scalar_expr(operand),
            ExprKind::Call { builtin, args } => {
                if args.len() != builtin.arity() {
                    return Err(LangError::Type(
                        e.span,
                        format!(
                            "`{}` takes {} argument(s), found {}",
                            builtin.name(),
                            builtin.arity(),
                            args.len()
                        ),
                    ));
                }
                for a in args {
                    let t = self.check_scalar_expr(a)?;
                    if t != ScalarType::F32 {
                        return Err(LangError::Type(
                            a.span,
                            format!("`{}` arguments must be f32, found {t}", builtin.name()),
                        ));
                    }
                }
                Ok(ScalarType::F32)
            }
            ExprKind::Convert { to, operand } => {
                self.check_scalar_expr(operand)?;
                Ok(*to)
            }
        }
    }
}

/// Constant folding over integer expressions, used for trip counts.
fn eval_const_i64(e: &AstExpr) -> Option<i64> {
    match &e.kind {
        ExprKind::IntLit(v) => Some(*v as i64),
        ExprKind::Unary { op: UnOp::Neg, operand } => eval_const_i64(operand).map(|v| -v),
        ExprKind::Binary { op, lhs, rhs } => {
            let a = eval_const_i64(lhs)?;
            let b = eval_const_i64(rhs)?;
            match op {
                BinOp::Add => Some(a.wrapping_add(b)),
                BinOp::Sub => Some(a.wrapping_sub(b)),
                BinOp::Mul => Some(a.wrapping_mul(b)),
                BinOp::Div => (b != 0).then(|| a.wrapping_div(b)),
                BinOp::Rem => (b != 0).then(|| a.wrapping_rem(b)),
                _ => None,
            }
        }
        _ => None,
    }
}
