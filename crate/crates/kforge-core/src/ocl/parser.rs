//! Recursive-descent parser for the emitted OpenCL C dialect, with name
//! resolution to variable slots.

use super::lexer::{tokenize, CTok, SpannedCTok};
use super::*;
use std::collections::HashMap;

/// Statement keywords outside the dialect, rejected by name.
const UNSUPPORTED: &[&str] = &[
    "goto", "return", "break", "continue", "switch", "do", "barrier", "double", "local",
    "__local", "private",
];

pub fn parse_ocl(source: &str) -> Result<OclKernelAst, EmuError> {
    let toks = tokenize(source)?;
    let mut p = OclParser {
        toks,
        pos: 0,
        slots: HashMap::new(),
        var_kinds: Vec::new(),
        var_names: Vec::new(),
        heap_param: String::new(),
        pragma_count: 0,
    };
    p.kernel()
}

struct OclParser {
    toks: Vec<SpannedCTok>,
    pos: usize,
    slots: HashMap<String, Slot>,
    var_kinds: Vec<VarKind>,
    var_names: Vec<String>,
    heap_param: String,
    pragma_count: usize,
}

impl OclParser {
    fn peek(&self) -> &CTok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, ahead: usize) -> &CTok {
        let i = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].loc
    }

    fn advance(&mut self) -> SpannedCTok {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, loc: Loc, msg: impl Into<String>) -> Result<T, EmuError> {
        Err(EmuError::OclSyntax {
            loc,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, want: &CTok) -> Result<Loc, EmuError> {
        let t = self.advance();
        if &t.tok == want {
            Ok(t.loc)
        } else {
            self.syntax(t.loc, format!("expected `{want}`, found `{t}`", t = t.tok))
        }
    }

    fn eat(&mut self, want: &CTok) -> bool {
        if self.peek() == want {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self, want: &str) -> Result<Loc, EmuError> {
        let t = self.advance();
        match &t.tok {
            CTok::Ident(s) if s == want => Ok(t.loc),
            other => self.syntax(t.loc, format!("expected `{want}`, found `{other}`")),
        }
    }

    fn ident(&mut self) -> Result<(String, Loc), EmuError> {
        let t = self.advance();
        match t.tok {
            CTok::Ident(s) => Ok((s, t.loc)),
            other => self.syntax(t.loc, format!("expected identifier, found `{other}`")),
        }
    }

    fn type_name(name: &str) -> Option<CType> {
        Some(match name {
            "int" => CType::Int,
            "uint" => CType::Uint,
            "uchar" => CType::Uchar,
            "long" => CType::Long,
            "ulong" => CType::Ulong,
            "float" => CType::Float,
            _ => return None,
        })
    }

    fn define_var(&mut self, name: &str, kind: VarKind, loc: Loc) -> Result<Slot, EmuError> {
        if self.slots.contains_key(name) {
            return self.syntax(loc, format!("`{name}` is already declared"));
        }
        let slot = self.var_kinds.len();
        self.slots.insert(name.to_string(), slot);
        self.var_kinds.push(kind);
        self.var_names.push(name.to_string());
        Ok(slot)
    }

    fn lookup(&self, name: &str, loc: Loc) -> Result<Slot, EmuError> {
        self.slots.get(name).copied().ok_or(EmuError::OclSyntax {
            loc,
            msg: format!("use of undeclared identifier `{name}`"),
        })
    }

    fn kernel(&mut self) -> Result<OclKernelAst, EmuError> {
        // Optional scheduling attribute.
        let mut required_block = None;
        if matches!(self.peek(), CTok::Ident(s) if s == "__attribute__") {
            self.advance();
            self.expect(&CTok::LParen)?;
            self.expect(&CTok::LParen)?;
            self.expect_ident("reqd_work_group_size")?;
            self.expect(&CTok::LParen)?;
            let x = self.int_lit()?;
            self.expect(&CTok::Comma)?;
            let y = self.int_lit()?;
            self.expect(&CTok::Comma)?;
            let z = self.int_lit()?;
            self.expect(&CTok::RParen)?;
            self.expect(&CTok::RParen)?;
            self.expect(&CTok::RParen)?;
            required_block = Some((x as u32, y as u32, z as u32));
        }

        self.expect_ident("__kernel")?;
        self.expect_ident("void")?;
        let (entry_name, _) = self.ident()?;
        self.expect(&CTok::LParen)?;
        self.expect_ident("__global")?;
        self.expect_ident("uchar")?;
        self.expect(&CTok::Star)?;
        let (heap_name, _) = self.ident()?;
        self.heap_param = heap_name;
        self.expect(&CTok::Comma)?;
        self.expect_ident("ulong")?;
        let (frame_name, floc) = self.ident()?;
        // The frame base behaves as a pre-initialized ulong variable.
        self.define_var(&frame_name, VarKind::Scalar(CType::Ulong), floc)?;
        self.expect(&CTok::RParen)?;

        let body = self.block()?;
        self.expect(&CTok::Eof)?;

        Ok(OclKernelAst {
            entry_name,
            required_block,
            body,
            var_kinds: std::mem::take(&mut self.var_kinds),
            var_names: std::mem::take(&mut self.var_names),
            pragma_count: self.pragma_count,
        })
    }

    fn int_lit(&mut self) -> Result<u64, EmuError> {
        let t = self.advance();
        match t.tok {
            CTok::IntLit(v) => Ok(v),
            other => self.syntax(t.loc, format!("expected integer literal, found `{other}`")),
        }
    }

    fn block(&mut self) -> Result<Vec<CStmt>, EmuError> {
        self.expect(&CTok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.eat(&CTok::RBrace) {
            if let Some(s) = self.item()?
            {
                stmts.push(s);
            }
        }
        Ok(stmts)
    }

    /// One declaration or statement; plain declarations produce no code.
    fn item(&mut self) -> Result<Option<CStmt>, EmuError> {
        let loc = self.loc();
        match self.peek().clone() {
            CTok::Ident(name) if name == "__global" => {
                // `__global T *p = (__global T *) &heap[off];`
                self.advance();
                let (tname, tloc) = self.ident()?;
                let elem = match Self::type_name(&tname) {
                    Some(t) => t,
                    None => return self.syntax(tloc, format!("unknown type `{tname}`")),
                };
                self.expect(&CTok::Star)?;
                let (pname, ploc) = self.ident()?;
                self.expect(&CTok::Assign)?;
                self.expect(&CTok::LParen)?;
                self.expect_ident("__global")?;
                let (t2, t2loc) = self.ident()?;
                if Self::type_name(&t2) != Some(elem) {
                    return self.syntax(t2loc, "pointer cast type mismatch".to_string());
                }
                self.expect(&CTok::Star)?;
                self.expect(&CTok::RParen)?;
                self.expect(&CTok::Amp)?;
                let (base, bloc) = self.ident()?;
                if base != self.heap_param {
                    return Err(EmuError::UnsupportedConstruct {
                        loc: bloc,
                        what: format!("address-of on `{base}`; only the heap parameter is addressable"),
                    });
                }
                self.expect(&CTok::LBracket)?;
                let offset = self.expr()?;
                self.expect(&CTok::RBracket)?;
                self.expect(&CTok::Semi)?;
                let slot = self.define_var(&pname, VarKind::Ptr(elem), ploc)?;
                Ok(Some(CStmt::PtrDecl { slot, offset }))
            }
            CTok::Ident(name) if Self::type_name(&name).is_some() => {
                self.advance();
                let ty = Self::type_name(&name).unwrap();
                loop {
                    let (vname, vloc) = self.ident()?;
                    self.define_var(&vname, VarKind::Scalar(ty), vloc)?;
                    if self.eat(&CTok::Comma) {
                        continue;
                    }
                    self.expect(&CTok::Semi)?;
                    break;
                }
                Ok(None)
            }
            _ => self.stmt(loc).map(Some),
        }
    }

    fn stmt(&mut self, loc: Loc) -> Result<CStmt, EmuError> {
        match self.peek().clone() {
            CTok::Pragma(factor) => {
                self.advance();
                self.pragma_count += 1;
                let next_loc = self.loc();
                match self.peek() {
                    CTok::Ident(k) if k == "for" => {
                        let mut inner = self.stmt(next_loc)?;
                        if let CStmt::For { pragma, .. } = &mut inner {
                            *pragma = Some(factor);
                        }
                        Ok(inner)
                    }
                    _ => self.syntax(next_loc, "#pragma unroll must precede a for loop"),
                }
            }
            CTok::LBrace => Ok(CStmt::Block(self.block()?)),
            CTok::Star => {
                let (ty, addr, sloc) = self.heap_access()?;
                self.expect(&CTok::Assign)?;
                let value = self.expr()?;
                self.expect(&CTok::Semi)?;
                Ok(CStmt::HeapStore {
                    ty,
                    addr,
                    value,
                    loc: sloc,
                })
            }
            CTok::Ident(name) if name == "for" => {
                self.advance();
                self.expect(&CTok::LParen)?;
                let init = if self.peek() == &CTok::Semi {
                    None
                } else {
                    Some(Box::new(self.simple_assign()?))
                };
                self.expect(&CTok::Semi)?;
                let cond = if self.peek() == &CTok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(&CTok::Semi)?;
                let update = if self.peek() == &CTok::RParen {
                    None
                } else {
                    Some(Box::new(self.simple_assign()?))
                };
                self.expect(&CTok::RParen)?;
                let body = self.stmt_or_block()?;
                Ok(CStmt::For {
                    init,
                    cond,
                    update,
                    body,
                    pragma: None,
                })
            }
            CTok::Ident(name) if name == "while" => {
                self.advance();
                self.expect(&CTok::LParen)?;
                let cond = self.expr()?;
                self.expect(&CTok::RParen)?;
                let body = self.stmt_or_block()?;
                Ok(CStmt::While { cond, body })
            }
            CTok::Ident(name) if name == "if" => {
                self.advance();
                self.expect(&CTok::LParen)?;
                let cond = self.expr()?;
                self.expect(&CTok::RParen)?;
                let then_body = self.stmt_or_block()?;
                let else_body = if matches!(self.peek(), CTok::Ident(k) if k == "else") {
                    self.advance();
                    self.stmt_or_block()?
                } else {
                    Vec::new()
                };
                Ok(CStmt::If {
                    cond,
                    then_body,
                    else_body,
                })
            }
            CTok::Ident(name) if UNSUPPORTED.contains(&name.as_str()) => {
                Err(EmuError::UnsupportedConstruct {
                    loc,
                    what: format!("`{name}`"),
                })
            }
            CTok::Ident(_) => {
                let s = self.simple_assign()?;
                self.expect(&CTok::Semi)?;
                Ok(s)
            }
            other => self.syntax(loc, format!("expected statement, found `{other}`")),
        }
    }

    fn stmt_or_block(&mut self) -> Result<Vec<CStmt>, EmuError> {
        if self.peek() == &CTok::LBrace {
            self.block()
        } else {
            let loc = self.loc();
            Ok(vec![self.stmt(loc)?])
        }
    }

    /// `name = expr` without the trailing semicolon (for-clauses share it).
    fn simple_assign(&mut self) -> Result<CStmt, EmuError> {
        let (name, loc) = self.ident()?;
        if UNSUPPORTED.contains(&name.as_str()) {
            return Err(EmuError::UnsupportedConstruct {
                loc,
                what: format!("`{name}`"),
            });
        }
        let slot = self.lookup(&name, loc)?;
        self.expect(&CTok::Assign)?;
        let value = self.expr()?;
        Ok(CStmt::Assign { slot, value })
    }

    /// `*((__global T *) &heap[expr])`, used for both loads and stores.
    fn heap_access(&mut self) -> Result<(CType, CExpr, Loc), EmuError> {
        let loc = self.expect(&CTok::Star)?;
        self.expect(&CTok::LParen)?;
        self.expect(&CTok::LParen)?;
        self.expect_ident("__global")?;
        let (tname, tloc) = self.ident()?;
        let ty = match Self::type_name(&tname) {
            Some(t) => t,
            None => return self.syntax(tloc, format!("unknown type `{tname}`")),
        };
        self.expect(&CTok::Star)?;
        self.expect(&CTok::RParen)?;
        self.expect(&CTok::Amp)?;
        let (base, bloc) = self.ident()?;
        if base != self.heap_param {
            return Err(EmuError::UnsupportedConstruct {
                loc: bloc,
                what: format!("pointer access through `{base}`; only the heap parameter is addressable"),
            });
        }
        self.expect(&CTok::LBracket)?;
        let addr = self.expr()?;
        self.expect(&CTok::RBracket)?;
        self.expect(&CTok::RParen)?;
        Ok((ty, addr, loc))
    }

    // Expression grammar, C precedence.

    fn expr(&mut self) -> Result<CExpr, EmuError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<CExpr, EmuError> {
        let mut lhs = self.and_expr()?;
        while self.peek() == &CTok::OrOr {
            let loc = self.advance().loc;
            let rhs = self.and_expr()?;
            lhs = CExpr::Binary {
                op: COp::Or,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                loc,
            };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<CExpr, EmuError> {
        let mut lhs = self.eq_expr()?;
        while self.peek() == &CTok::AndAnd {
            let loc = self.advance().loc;
            let rhs = self.eq_expr()?;
            lhs = CExpr::Binary {
                op: COp::And,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                loc,
            };
        }
        Ok(lhs)
    }

    fn eq_expr(&mut self) -> Result<CExpr, EmuError> {
        let mut lhs = self.rel_expr()?;
        loop {
            let op = match self.peek() {
                CTok::EqEq => COp::Eq,
                CTok::Ne => COp::Ne,
                _ => break,
            };
            let loc = self.advance().loc;
            let rhs = self.rel_expr()?;
            lhs = CExpr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                loc,
            };
        }
        Ok(lhs)
    }

    fn rel_expr(&mut self) -> Result<CExpr, EmuError> {
        let mut lhs = self.add_expr()?;
        loop {
            let op = match self.peek() {
                CTok::Lt => COp::Lt,
                CTok::Le => COp::Le,
                CTok::Gt => COp::Gt,
                CTok::Ge => COp::Ge,
                _ => break,
            };
            let loc = self.advance().loc;
            let rhs = self.add_expr()?;
            lhs = CExpr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                loc,
            };
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> Result<CExpr, EmuError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                CTok::Plus => COp::Add,
                CTok::Minus => COp::Sub,
                _ => break,
            };
            let loc = self.advance().loc;
            let rhs = self.mul_expr()?;
            lhs = CExpr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                loc,
            };
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> Result<CExpr, EmuError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                CTok::Star => COp::Mul,
                CTok::Slash => COp::Div,
                CTok::Percent => COp::Rem,
                _ => break,
            };
            let loc = self.advance().loc;
            let rhs = self.unary_expr()?;
            lhs = CExpr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                loc,
            };
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<CExpr, EmuError> {
        match self.peek().clone() {
            CTok::Minus => {
                self.advance();
                Ok(CExpr::Neg(Box::new(self.unary_expr()?)))
            }
            CTok::Not => {
                self.advance();
                Ok(CExpr::Not(Box::new(self.unary_expr()?)))
            }
            CTok::Star => {
                let (ty, addr, loc) = self.heap_access()?;
                Ok(CExpr::HeapLoad {
                    ty,
                    addr: Box::new(addr),
                    loc,
                })
            }
            CTok::LParen => {
                // `(type) unary` is a cast; `(expr)` is grouping.
                if let CTok::Ident(name) = self.peek_at(1) {
                    if let Some(ty) = Self::type_name(name) {
                        if self.peek_at(2) == &CTok::RParen {
                            self.advance();
                            self.advance();
                            self.advance();
                            let e = self.unary_expr()?;
                            return Ok(CExpr::Cast {
                                ty,
                                expr: Box::new(e),
                            });
                        }
                    }
                }
                self.advance();
                let e = self.expr()?;
                self.expect(&CTok::RParen)?;
                Ok(e)
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<CExpr, EmuError> {
        let t = self.advance();
        let loc = t.loc;
        match t.tok {
            CTok::IntLit(v) => {
                if v <= i32::MAX as u64 {
                    Ok(CExpr::IntLit(v as i32))
                } else {
                    Ok(CExpr::U64Lit(v))
                }
            }
            CTok::FloatLit(v) => Ok(CExpr::FloatLit(v)),
            CTok::Ident(name) => match name.as_str() {
                "INFINITY" => Ok(CExpr::FloatLit(f32::INFINITY)),
                "NAN" => Ok(CExpr::FloatLit(f32::NAN)),
                "get_global_id" | "get_global_size" => {
                    self.expect(&CTok::LParen)?;
                    let dim = self.int_lit()?;
                    self.expect(&CTok::RParen)?;
                    if dim > 2 {
                        return self.syntax(loc, format!("index dimension {dim} out of range"));
                    }
                    if name == "get_global_id" {
                        Ok(CExpr::GlobalId(dim as u8))
                    } else {
                        Ok(CExpr::GlobalSize(dim as u8))
                    }
                }
                _ => {
                    if let Some((builtin, arity)) = CBuiltin::from_name(&name) {
                        self.expect(&CTok::LParen)?;
                        let mut args = Vec::new();
                        if !self.eat(&CTok::RParen) {
                            loop {
                                args.push(self.expr()?);
                                if self.eat(&CTok::Comma) {
                                    continue;
                                }
                                self.expect(&CTok::RParen)?;
                                break;
                            }
                        }
                        if args.len() != arity {
                            return self.syntax(
                                loc,
                                format!("`{name}` takes {arity} argument(s), found {}", args.len()),
                            );
                        }
                        return Ok(CExpr::Call { builtin, args });
                    }
                    if UNSUPPORTED.contains(&name.as_str()) {
                        return Err(EmuError::UnsupportedConstruct {
                            loc,
                            what: format!("`{name}`"),
                        });
                    }
                    if name == self.heap_param {
                        return Err(EmuError::UnsupportedConstruct {
                            loc,
                            what: "raw use of the heap parameter".into(),
                        });
                    }
                    let slot = self.lookup(&name, loc)?;
                    if self.peek() == &CTok::LBracket {
                        self.advance();
                        let index = self.expr()?;
                        self.expect(&CTok::RBracket)?;
                        match self.var_kinds[slot] {
                            VarKind::Ptr(elem) => Ok(CExpr::PtrIndex {
                                slot,
                                elem,
                                index: Box::new(index),
                                loc,
                            }),
                            VarKind::Scalar(_) => {
                                self.syntax(loc, format!("`{name}` is not a pointer"))
                            }
                        }
                    } else {
                        Ok(CExpr::Var(slot))
                    }
                }
            },
            other => self.syntax(loc, format!("expected expression, found `{other}`")),
        }
    }
}
