//! Work-item interpreter. Executes the kernel body once per global id, in
//! ascending order by default, mutating the device heap through pointer-cast
//! loads and stores. Unroll pragmas are semantic no-ops.

use super::*;
use crate::device::DeviceHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GidOrder {
    Ascending,
    Descending,
}

/// Runtime value. Integer arithmetic wraps; float arithmetic is IEEE-754
/// single precision with no double intermediates.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Value {
    I32(i32),
    U64(u64),
    F32(f32),
}

impl Value {
    fn zero_of(kind: VarKind) -> Value {
        match kind {
            VarKind::Scalar(CType::Float) => Value::F32(0.0),
            VarKind::Scalar(CType::Long) | VarKind::Scalar(CType::Ulong) | VarKind::Ptr(_) => {
                Value::U64(0)
            }
            VarKind::Scalar(_) => Value::I32(0),
        }
    }

    fn truthy(self) -> bool {
        match self {
            Value::I32(v) => v != 0,
            Value::U64(v) => v != 0,
            Value::F32(v) => v != 0.0,
        }
    }

    fn as_u64(self) -> u64 {
        match self {
            Value::I32(v) => (v as i64) as u64,
            Value::U64(v) => v,
            Value::F32(v) => v as u64,
        }
    }

    fn as_f32(self) -> f32 {
        match self {
            Value::I32(v) => v as f32,
            Value::U64(v) => v as f32,
            Value::F32(v) => v,
        }
    }

    fn as_i32(self) -> i32 {
        match self {
            Value::I32(v) => v,
            Value::U64(v) => v as i32,
            Value::F32(v) => v as i32,
        }
    }

    /// C-style conversion on assignment and casts.
    fn convert_to(self, ty: CType) -> Value {
        match ty {
            CType::Int => Value::I32(self.as_i32()),
            CType::Uint => Value::I32(match self {
                Value::I32(v) => v,
                Value::U64(v) => v as u32 as i32,
                Value::F32(v) => (v as u32) as i32,
            }),
            CType::Uchar => Value::I32((self.as_u64() as u8) as i32),
            CType::Long | CType::Ulong => Value::U64(self.as_u64()),
            CType::Float => Value::F32(self.as_f32()),
        }
    }
}

struct WorkItem<'a> {
    heap: &'a mut DeviceHeap,
    vars: Vec<Value>,
    gid: u64,
    global_size: u64,
}

pub fn execute(
    ast: &OclKernelAst,
    heap: &mut DeviceHeap,
    frame_base: u64,
    geom: &LaunchGeometry,
) -> Result<(), EmuError> {
    execute_ordered(ast, heap, frame_base, geom, GidOrder::Ascending)
}

/// [`execute`] with an explicit work-item order; race-free kernels produce
/// identical heaps either way.
pub fn execute_ordered(
    ast: &OclKernelAst,
    heap: &mut DeviceHeap,
    frame_base: u64,
    geom: &LaunchGeometry,
    order: GidOrder,
) -> Result<(), EmuError> {
    if let Some((x, y, z)) = ast.required_block {
        if geom.block_size != x as u64 {
            return Err(EmuError::GeometryMismatch {
                attr_x: x,
                attr_y: y,
                attr_z: z,
                block: geom.block_size,
            });
        }
    }
    if geom.global_size == 0 || geom.global_size % geom.block_size != 0 {
        return Err(EmuError::BadGeometry {
            global_size: geom.global_size,
            block_size: geom.block_size,
        });
    }

    let template: Vec<Value> = ast.var_kinds.iter().map(|&k| Value::zero_of(k)).collect();
    // Slot 0 is the frame-base parameter, registered first by the parser.
    let run_one = |gid: u64, heap: &mut DeviceHeap| -> Result<(), EmuError> {
        let mut item = WorkItem {
            heap,
            vars: template.clone(),
            gid,
            global_size: geom.global_size,
        };
        item.vars[0] = Value::U64(frame_base);
        for stmt in &ast.body {
            item.exec_stmt(ast, stmt)?;
        }
        Ok(())
    };

    match order {
        GidOrder::Ascending => {
            for gid in 0..geom.global_size {
                run_one(gid, heap)?;
            }
        }
        GidOrder::Descending => {
            for gid in (0..geom.global_size).rev() {
                run_one(gid, heap)?;
            }
        }
    }
    Ok(())
}

impl<'a> WorkItem<'a> {
    fn exec_stmt(&mut self, ast: &OclKernelAst, stmt: &CStmt) -> Result<(), EmuError> {
        match stmt {
            CStmt::Assign { slot, value } => {
                let v = self.eval(ast, value)?;
                let target = match ast.var_kinds[*slot] {
                    VarKind::Scalar(t) => t,
                    VarKind::Ptr(_) => CType::Ulong,
                };
                self.vars[*slot] = v.convert_to(target);
                Ok(())
            }
            CStmt::PtrDecl { slot, offset } => {
                let off = self.eval(ast, offset)?.as_u64();
                self.vars[*slot] = Value::U64(off);
                Ok(())
            }
            CStmt::HeapStore {
                ty,
                addr,
                value,
                loc,
            } => {
                let offset = self.eval(ast, addr)?.as_u64();
                let v = self.eval(ast, value)?.convert_to(*ty);
                let bytes = match (ty, v) {
                    (CType::Float, Value::F32(x)) => x.to_le_bytes().to_vec(),
                    (CType::Int | CType::Uint, Value::I32(x)) => x.to_le_bytes().to_vec(),
                    (CType::Long | CType::Ulong, Value::U64(x)) => x.to_le_bytes().to_vec(),
                    (CType::Uchar, Value::I32(x)) => vec![x as u8],
                    _ => unreachable!("convert_to normalizes the representation"),
                };
                self.heap
                    .write(offset, &bytes)
                    .map_err(|_| EmuError::HeapFault {
                        gid: self.gid,
                        loc: *loc,
                        offset,
                        size: ty.size(),
                    })
            }
            CStmt::For {
                init,
                cond,
                update,
                body,
                pragma: _,
            } => {
                if let Some(init) = init {
                    self.exec_stmt(ast, init)?;
                }
                loop {
                    if let Some(cond) = cond {
                        if !self.eval(ast, cond)?.truthy() {
                            break;
                        }
                    }
                    for s in body {
                        self.exec_stmt(ast, s)?;
                    }
                    if let Some(update) = update {
                        self.exec_stmt(ast, update)?;
                    }
                }
                Ok(())
            }
            CStmt::While { cond, body } => {
                while self.eval(ast, cond)?.truthy() {
                    for s in body {
                        self.exec_stmt(ast, s)?;
                    }
                }
                Ok(())
            }
            CStmt::If {
                cond,
                then_body,
                else_body,
            } => {
                let branch = if self.eval(ast, cond)?.truthy() {
                    then_body
                } else {
                    else_body
                };
                for s in branch {
                    self.exec_stmt(ast, s)?;
                }
                Ok(())
            }
            CStmt::Block(body) => {
                for s in body {
                    self.exec_stmt(ast, s)?;
                }
                Ok(())
            }
        }
    }

    fn load(&mut self, ty: CType, offset: u64, loc: Loc) -> Result<Value, EmuError> {
        let bytes = self
            .heap
            .read(offset, ty.size())
            .map_err(|_| EmuError::HeapFault {
                gid: self.gid,
                loc,
                offset,
                size: ty.size(),
            })?;
        Ok(match ty {
            CType::Float => Value::F32(f32::from_le_bytes(bytes.try_into().unwrap())),
            CType::Int => Value::I32(i32::from_le_bytes(bytes.try_into().unwrap())),
            CType::Uint => Value::I32(u32::from_le_bytes(bytes.try_into().unwrap()) as i32),
            CType::Long | CType::Ulong => Value::U64(u64::from_le_bytes(bytes.try_into().unwrap())),
            CType::Uchar => Value::I32(bytes[0] as i32),
        })
    }

    fn eval(&mut self, ast: &OclKernelAst, expr: &CExpr) -> Result<Value, EmuError> {
        Ok(match expr {
            CExpr::IntLit(v) => Value::I32(*v),
            CExpr::U64Lit(v) => Value::U64(*v),
            CExpr::FloatLit(v) => Value::F32(*v),
            CExpr::Var(slot) => self.vars[*slot],
            CExpr::PtrIndex {
                slot,
                elem,
                index,
                loc,
            } => {
                let base = self.vars[*slot].as_u64();
                let idx = self.eval(ast, index)?.as_u64();
                let offset = base.wrapping_add(idx.wrapping_mul(elem.size() as u64));
                self.load(*elem, offset, *loc)?
            }
            CExpr::HeapLoad { ty, addr, loc } => {
                let offset = self.eval(ast, addr)?.as_u64();
                self.load(*ty, offset, *loc)?
            }
            CExpr::Binary { op, lhs, rhs, loc } => {
                // Short-circuit logical operators, C semantics.
                if *op == COp::And {
                    let l = self.eval(ast, lhs)?;
                    if !l.truthy() {
                        return Ok(Value::I32(0));
                    }
                    return Ok(Value::I32(self.eval(ast, rhs)?.truthy() as i32));
                }
                if *op == COp::Or {
                    let l = self.eval(ast, lhs)?;
                    if l.truthy() {
                        return Ok(Value::I32(1));
                    }
                    return Ok(Value::I32(self.eval(ast, rhs)?.truthy() as i32));
                }
                let l = self.eval(ast, lhs)?;
                let r = self.eval(ast, rhs)?;
                self.binop(*op, l, r, *loc)?
            }
            CExpr::Neg(e) => match self.eval(ast, e)? {
                Value::I32(v) => Value::I32(v.wrapping_neg()),
                Value::U64(v) => Value::U64(v.wrapping_neg()),
                Value::F32(v) => Value::F32(-v),
            },
            CExpr::Not(e) => Value::I32(!self.eval(ast, e)?.truthy() as i32),
            CExpr::Cast { ty, expr } => self.eval(ast, expr)?.convert_to(*ty),
            CExpr::Call { builtin, args } => {
                let mut vals = [0f32; 2];
                for (i, a) in args.iter().enumerate() {
                    vals[i] = self.eval(ast, a)?.as_f32();
                }
                let x = vals[0];
                let y = vals[1];
                Value::F32(match builtin {
                    CBuiltin::Sin => x.sin(),
                    CBuiltin::Cos => x.cos(),
                    CBuiltin::Sqrt => x.sqrt(),
                    CBuiltin::Exp => x.exp(),
                    CBuiltin::Log => x.ln(),
                    CBuiltin::Pow => x.powf(y),
                    CBuiltin::Fabs => x.abs(),
                    CBuiltin::Floor => x.floor(),
                    CBuiltin::Fmin => x.min(y),
                    CBuiltin::Fmax => x.max(y),
                })
            }
            CExpr::GlobalId(_) => Value::U64(self.gid),
            CExpr::GlobalSize(_) => Value::U64(self.global_size),
        })
    }

    /// Usual arithmetic conversions: float wins, then 64-bit, then int.
    fn binop(&self, op: COp, l: Value, r: Value, loc: Loc) -> Result<Value, EmuError> {
        use Value::*;
        if matches!(l, F32(_)) || matches!(r, F32(_)) {
            let a = l.as_f32();
            let b = r.as_f32();
            return Ok(match op {
                COp::Add => F32(a + b),
                COp::Sub => F32(a - b),
                COp::Mul => F32(a * b),
                COp::Div => F32(a / b),
                COp::Rem => F32(a % b),
                COp::Lt => I32((a < b) as i32),
                COp::Le => I32((a <= b) as i32),
                COp::Gt => I32((a > b) as i32),
                COp::Ge => I32((a >= b) as i32),
                COp::Eq => I32((a == b) as i32),
                COp::Ne => I32((a != b) as i32),
                COp::And | COp::Or => unreachable!("short-circuited above"),
            });
        }
        if matches!(l, U64(_)) || matches!(r, U64(_)) {
            let a = l.as_u64();
            let b = r.as_u64();
            return Ok(match op {
                COp::Add => U64(a.wrapping_add(b)),
                COp::Sub => U64(a.wrapping_sub(b)),
                COp::Mul => U64(a.wrapping_mul(b)),
                COp::Div => {
                    if b == 0 {
                        return Err(EmuError::DivideByZero { gid: self.gid, loc });
                    }
                    U64(a / b)
                }
                COp::Rem => {
                    if b == 0 {
                        return Err(EmuError::DivideByZero { gid: self.gid, loc });
                    }
                    U64(a % b)
                }
                COp::Lt => I32((a < b) as i32),
                COp::Le => I32((a <= b) as i32),
                COp::Gt => I32((a > b) as i32),
                COp::Ge => I32((a >= b) as i32),
                COp::Eq => I32((a == b) as i32),
                COp::Ne => I32((a != b) as i32),
                COp::And | COp::Or => unreachable!("short-circuited above"),
            });
        }
        let a = l.as_i32();
        let b = r.as_i32();
        Ok(match op {
            COp::Add => I32(a.wrapping_add(b)),
            COp::Sub => I32(a.wrapping_sub(b)),
            COp::Mul => I32(a.wrapping_mul(b)),
            COp::Div => {
                if b == 0 {
                    return Err(EmuError::DivideByZero { gid: self.gid, loc });
                }
                I32(a.wrapping_div(b))
            }
            COp::Rem => {
                if b == 0 {
                    return Err(EmuError::DivideByZero { gid: self.gid, loc });
                }
                I32(a.wrapping_rem(b))
            }
            COp::Lt => I32((a < b) as i32),
            COp::Le => I32((a <= b) as i32),
            COp::Gt => I32((a > b) as i32),
            COp::Ge => I32((a >= b) as i32),
            COp::Eq => I32((a == b) as i32),
            COp::Ne => I32((a != b) as i32),
            COp::And | COp::Or => unreachable!("short-circuited above"),
        })
    }
}
