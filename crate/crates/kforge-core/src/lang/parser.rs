//! Recursive-descent parser. One left-to-right pass, no backtracking.

use super::ast::*;
use super::lexer::{tokenize, SpannedTok, Tok};
use super::{KernelSource, LangError};
use std::collections::HashSet;

/// Parse a kernel definition from source text.
pub fn parse(text: &str) -> Result<KernelSource, LangError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        next_id: 0,
    };
    let kernel = p.kernel()?;
    p.expect(&Tok::Eof)?;
    Ok(kernel)
}

struct Parser {
    toks: Vec<SpannedTok>,
    pos: usize,
    next_id: NodeId,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn advance(&mut self) -> SpannedTok {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok) -> Result<Span, LangError> {
        let t = self.advance();
        if &t.tok == want {
            Ok(t.span)
        } else {
            Err(LangError::Syntax(
                t.span,
                format!("expected `{}`, found `{}`", want, t.tok),
            ))
        }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == want {
            self.advance();
            true
        } else {
            false
        }
    }

    fn fresh_id(&mut self) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn ident(&mut self) -> Result<(String, Span), LangError> {
        let t = self.advance();
        match t.tok {
            Tok::Ident(name) => Ok((name, t.span)),
            other => Err(LangError::Syntax(
                t.span,
                format!("expected identifier, found `{other}`"),
            )),
        }
    }

    fn kernel(&mut self) -> Result<KernelSource, LangError> {
        self.expect(&Tok::Kernel)?;
        let (name, _) = self.ident()?;
        self.expect(&Tok::LParen)?;
        let mut params = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let (pname, pspan) = self.ident()?;
                self.expect(&Tok::Colon)?;
                let ty = self.param_type()?;
                if !seen.insert(pname.clone()) {
                    return Err(LangError::DuplicateParam(pspan, pname));
                }
                params.push(TypedParam {
                    name: pname,
                    ty,
                    span: pspan,
                });
                if self.eat(&Tok::Comma) {
                    continue;
                }
                self.expect(&Tok::RParen)?;
                break;
            }
        }
        let body = self.block()?;
        Ok(KernelSource { name, params, body })
    }

    fn param_type(&mut self) -> Result<Type, LangError> {
        let t = self.advance();
        let scalar = match t.tok {
            Tok::TyF32 => ScalarType::F32,
            Tok::TyI32 => ScalarType::I32,
            other => {
                return Err(LangError::Syntax(
                    t.span,
                    format!("expected type, found `{other}`"),
                ))
            }
        };
        if self.eat(&Tok::LBracket) {
            self.expect(&Tok::RBracket)?;
            Ok(Type::Array(scalar))
        } else {
            Ok(Type::Scalar(scalar))
        }
    }

    fn block(&mut self) -> Result<Vec<AstStmt>, LangError> {
        self.expect(&Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.eat(&Tok::RBrace) {
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<AstStmt, LangError> {
        let span = self.peek_span();
        let id = self.fresh_id();
        match self.peek().clone() {
            Tok::Var => {
                self.advance();
                let (name, _) = self.ident()?;
                let ty = if self.eat(&Tok::Colon) {
                    let t = self.advance();
                    match t.tok {
                        Tok::TyF32 => Some(ScalarType::F32),
                        Tok::TyI32 => Some(ScalarType::I32),
                        other => {
                            return Err(LangError::Syntax(
                                t.span,
                                format!("expected scalar type, found `{other}`"),
                            ))
                        }
                    }
                } else {
                    None
                };
                self.expect(&Tok::Assign)?;
                let init = self.expr()?;
                self.expect(&Tok::Semi)?;
                Ok(AstStmt {
                    id,
                    span,
                    kind: StmtKind::VarDecl { name, ty, init },
                })
            }
            Tok::Parallel => {
                self.advance();
                let t = self.advance();
                if t.tok != Tok::For {
                    return Err(LangError::Syntax(
                        t.span,
                        "`@parallel` must be followed by a `for` loop".into(),
                    ));
                }
                self.for_rest(id, span, true)
            }
            Tok::For => {
                self.advance();
                self.for_rest(id, span, false)
            }
            Tok::While => {
                self.advance();
                let cond = self.expr()?;
                let body = self.block()?;
                Ok(AstStmt {
                    id,
                    span,
                    kind: StmtKind::While { cond, body },
                })
            }
            Tok::If => {
                self.advance();
                let cond = self.expr()?;
                let then_body = self.block()?;
                let else_body = if self.eat(&Tok::Else) {
                    if *self.peek() == Tok::If {
                        // `else if` chains nest as a single-statement else block.
                        vec![self.stmt()?]
                    } else {
                        self.block()?
                    }
                } else {
                    Vec::new()
                };
                Ok(AstStmt {
                    id,
                    span,
                    kind: StmtKind::If {
                        cond,
                        then_body,
                        else_body,
                    },
                })
            }
            Tok::LBrace => {
                let body = self.block()?;
                Ok(AstStmt {
                    id,
                    span,
                    kind: StmtKind::Block(body),
                })
            }
            Tok::Ident(_) => {
                let (name, _) = self.ident()?;
                if self.eat(&Tok::LBracket) {
                    let index = self.expr()?;
                    self.expect(&Tok::RBracket)?;
                    self.expect(&Tok::Assign)?;
                    let value = self.expr()?;
                    self.expect(&Tok::Semi)?;
                    Ok(AstStmt {
                        id,
                        span,
                        kind: StmtKind::ArrayStore {
                            array: name,
                            index,
                            value,
                        },
                    })
                } else {
                    self.expect(&Tok::Assign)?;
                    let value = self.expr()?;
                    self.expect(&Tok::Semi)?;
                    Ok(AstStmt {
                        id,
                        span,
                        kind: StmtKind::Assign { name, value },
                    })
                }
            }
            other => Err(LangError::Syntax(
                span,
                format!("expected statement, found `{other}`"),
            )),
        }
    }

    /// Parses the remainder of a for loop after `for` (and any annotation).
    fn for_rest(&mut self, id: NodeId, span: Span, parallel: bool) -> Result<AstStmt, LangError> {
        let (var, _) = self.ident()?;
        self.expect(&Tok::In)?;
        let lo = self.expr()?;
        self.expect(&Tok::DotDot)?;
        if *self.peek() == Tok::LBrace {
            return Err(LangError::Syntax(
                self.peek_span(),
                "missing upper bound in range".into(),
            ));
        }
        let hi = self.expr()?;
        let body = self.block()?;
        Ok(AstStmt {
            id,
            span,
            kind: StmtKind::ForRange {
                var,
                lo,
                hi,
                parallel,
                body,
            },
        })
    }

    // Expression precedence, loosest first: || < && < comparisons < +- < */% < unary < primary.

    fn expr(&mut self) -> Result<AstExpr, LangError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<AstExpr, LangError> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::OrOr {
            let span = self.advance().span;
            let rhs = self.and_expr()?;
            lhs = self.binary(span, BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<AstExpr, LangError> {
        let mut lhs = self.cmp_expr()?;
        while *self.peek() == Tok::AndAnd {
            let span = self.advance().span;
            let rhs = self.cmp_expr()?;
            lhs = self.binary(span, BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Result<AstExpr, LangError> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            _ => return Ok(lhs),
        };
        let span = self.advance().span;
        let rhs = self.add_expr()?;
        Ok(self.binary(span, op, lhs, rhs))
    }

    fn add_expr(&mut self) -> Result<AstExpr, LangError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            let span = self.advance().span;
            let rhs = self.mul_expr()?;
            lhs = self.binary(span, op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> Result<AstExpr, LangError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Rem,
                _ => break,
            };
            let span = self.advance().span;
            let rhs = self.unary_expr()?;
            lhs = self.binary(span, op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<AstExpr, LangError> {
        if *self.peek() == Tok::Minus {
            let span = self.advance().span;
            let operand = self.unary_expr()?;
            let id = self.fresh_id();
            return Ok(AstExpr {
                id,
                span,
                kind: ExprKind::Unary {
                    op: UnOp::Neg,
                    operand: Box::new(operand),
                },
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<AstExpr, LangError> {
        let t = self.advance();
        let span = t.span;
        match t.tok {
            Tok::IntLit(v) => {
                if v > i32::MAX as i64 || v < i32::MIN as i64 {
                    return Err(LangError::Syntax(
                        span,
                        format!("integer literal `{v}` out of i32 range"),
                    ));
                }
                let id = self.fresh_id();
                Ok(AstExpr {
                    id,
                    span,
                    kind: ExprKind::IntLit(v as i32),
                })
            }
            Tok::FloatLit(v) => {
                let id = self.fresh_id();
                Ok(AstExpr {
                    id,
                    span,
                    kind: ExprKind::FloatLit(v),
                })
            }
            Tok::Pi => {
                let id = self.fresh_id();
                Ok(AstExpr {
                    id,
                    span,
                    kind: ExprKind::Pi,
                })
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::TyF32 | Tok::TyI32 => {
                let to = if t.tok == Tok::TyF32 {
                    ScalarType::F32
                } else {
                    ScalarType::I32
                };
                self.expect(&Tok::LParen)?;
                let operand = self.expr()?;
                self.expect(&Tok::RParen)?;
                let id = self.fresh_id();
                Ok(AstExpr {
                    id,
                    span,
                    kind: ExprKind::Convert {
                        to,
                        operand: Box::new(operand),
                    },
                })
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    let builtin = Builtin::from_name(&name).ok_or_else(|| {
                        LangError::Syntax(span, format!("unknown function `{name}`"))
                    })?;
                    self.advance();
                    let mut args = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(&Tok::Comma) {
                                continue;
                            }
                            self.expect(&Tok::RParen)?;
                            break;
                        }
                    }
                    let id = self.fresh_id();
                    Ok(AstExpr {
                        id,
                        span,
                        kind: ExprKind::Call { builtin, args },
                    })
                } else if *self.peek() == Tok::LBracket {
                    self.advance();
                    let index = self.expr()?;
                    self.expect(&Tok::RBracket)?;
                    let id = self.fresh_id();
                    Ok(AstExpr {
                        id,
                        span,
                        kind: ExprKind::ArrayLoad {
                            array: name,
                            index: Box::new(index),
                        },
                    })
                } else {
                    let id = self.fresh_id();
                    Ok(AstExpr {
                        id,
                        span,
                        kind: ExprKind::Var(name),
                    })
                }
            }
            other => Err(LangError::Syntax(
                span,
                format!("expected expression, found `{other}`"),
            )),
        }
    }

    fn binary(&mut self, span: Span, op: BinOp, lhs: AstExpr, rhs: AstExpr) -> AstExpr {
        let id = self.fresh_id();
        AstExpr {
            id,
            span,
            kind: ExprKind::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
        }
    }
}
