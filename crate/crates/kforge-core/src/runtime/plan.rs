//! Execution plans: the ordered offload operations for one kernel run
//! (copy-in of every array, frame build, launch, barrier, copy-out of every
//! non-read-only array).

use crate::device::{classify_accesses, AccessClass, HostArray, ScalarValue};
use crate::lang::{AstExpr, ExprKind, ScalarType, StmtKind, Type, UnOp, ValidatedKernel};
use crate::ocl::LaunchGeometry;
use serde::{Deserialize, Serialize};

pub const DEFAULT_BLOCK: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlanOp {
    CopyIn { buffer: String, access: AccessClass },
    BuildFrame,
    Launch { kernel: String, geometry: LaunchGeometry },
    Barrier,
    CopyOut { buffer: String, access: AccessClass },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub ops: Vec<PlanOp>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("binding mismatch: {0}")]
    BindingMismatch(String),
    #[error("cannot resolve the parallel loop bound: {0}")]
    UnresolvableBound(String),
    #[error("illegal plan: {0}")]
    IllegalPlan(String),
}

/// One bound argument per kernel parameter, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub enum BindingValue {
    Array(HostArray),
    Scalar(ScalarValue),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bindings {
    pub values: Vec<(String, BindingValue)>,
}

impl Bindings {
    pub fn push_array(&mut self, name: &str, array: HostArray) {
        self.values.push((name.to_string(), BindingValue::Array(array)));
    }

    pub fn push_scalar(&mut self, name: &str, value: ScalarValue) {
        self.values
            .push((name.to_string(), BindingValue::Scalar(value)));
    }

    pub fn array(&self, name: &str) -> Option<&HostArray> {
        self.values.iter().find_map(|(n, v)| match v {
            BindingValue::Array(a) if n == name => Some(a),
            _ => None,
        })
    }

    pub fn scalar(&self, name: &str) -> Option<ScalarValue> {
        self.values.iter().find_map(|(n, v)| match v {
            BindingValue::Scalar(s) if n == name => Some(*s),
            _ => None,
        })
    }
}

/// Check bindings against the kernel's parameter list.
pub fn check_bindings(vk: &ValidatedKernel, bindings: &Bindings) -> Result<(), PlanError> {
    let params = &vk.kernel.params;
    if params.len() != bindings.values.len() {
        return Err(PlanError::BindingMismatch(format!(
            "kernel `{}` has {} parameters, {} bindings given",
            vk.kernel.name,
            params.len(),
            bindings.values.len()
        )));
    }
    for (p, (bname, bval)) in params.iter().zip(&bindings.values) {
        if p.name != *bname {
            return Err(PlanError::BindingMismatch(format!(
                "expected binding for `{}`, found `{bname}`",
                p.name
            )));
        }
        let ok = matches!(
            (p.ty, bval),
            (Type::Array(ScalarType::F32), BindingValue::Array(HostArray::F32(_)))
                | (Type::Array(ScalarType::I32), BindingValue::Array(HostArray::I32(_)))
                | (Type::Scalar(ScalarType::F32), BindingValue::Scalar(ScalarValue::F32(_)))
                | (Type::Scalar(ScalarType::I32), BindingValue::Scalar(ScalarValue::I32(_)))
        );
        if !ok {
            return Err(PlanError::BindingMismatch(format!(
                "binding for `{}` does not match its type {}",
                p.name, p.ty
            )));
        }
    }
    Ok(())
}

/// Build the ordered plan with the default block size.
pub fn plan(vk: &ValidatedKernel, bindings: &Bindings) -> Result<ExecutionPlan, PlanError> {
    plan_with_block(vk, bindings, DEFAULT_BLOCK)
}

pub fn plan_with_block(
    vk: &ValidatedKernel,
    bindings: &Bindings,
    block: u64,
) -> Result<ExecutionPlan, PlanError> {
    check_bindings(vk, bindings)?;
    let geometry = launch_geometry(vk, bindings, block)?;
    let classes = classify_accesses(vk);
    let mut ops = Vec::new();
    for (name, access) in &classes {
        ops.push(PlanOp::CopyIn {
            buffer: name.clone(),
            access: *access,
        });
    }
    ops.push(PlanOp::BuildFrame);
    ops.push(PlanOp::Launch {
        kernel: vk.kernel.name.clone(),
        geometry,
    });
    ops.push(PlanOp::Barrier);
    for (name, access) in &classes {
        if *access != AccessClass::ReadOnly {
            ops.push(PlanOp::CopyOut {
                buffer: name.clone(),
                access: *access,
            });
        }
    }
    let plan = ExecutionPlan { ops };
    validate_plan(&plan)?;
    Ok(plan)
}

/// Plan invariants, re-checked at execution time:
/// exactly one barrier, after the last launch and before the first copy-out;
/// every copy-out targets a non-read-only buffer; every launch is preceded by
/// the copy-ins and frame build.
pub fn validate_plan(plan: &ExecutionPlan) -> Result<(), PlanError> {
    let barrier_positions: Vec<usize> = plan
        .ops
        .iter()
        .enumerate()
        .filter(|(_, op)| matches!(op, PlanOp::Barrier))
        .map(|(i, _)| i)
        .collect();
    if barrier_positions.len() != 1 {
        return Err(PlanError::IllegalPlan(format!(
            "{} barriers in plan",
            barrier_positions.len()
        )));
    }
    let barrier = barrier_positions[0];
    let last_launch = plan
        .ops
        .iter()
        .rposition(|op| matches!(op, PlanOp::Launch { .. }));
    let first_copy_out = plan
        .ops
        .iter()
        .position(|op| matches!(op, PlanOp::CopyOut { .. }));
    if let Some(l) = last_launch {
        if barrier < l {
            return Err(PlanError::IllegalPlan(
                "barrier precedes the last launch".into(),
            ));
        }
    }
    if let Some(c) = first_copy_out {
        if barrier > c {
            return Err(PlanError::IllegalPlan(
                "barrier follows the first copy-out".into(),
            ));
        }
    }
    for op in &plan.ops {
        if let PlanOp::CopyOut { buffer, access } = op {
            if *access == AccessClass::ReadOnly {
                return Err(PlanError::IllegalPlan(format!(
                    "copy-out of read-only buffer `{buffer}`"
                )));
            }
        }
    }
    // Every launch must come after the frame build, which itself must follow
    // every copy-in.
    let frame_pos = plan
        .ops
        .iter()
        .position(|op| matches!(op, PlanOp::BuildFrame));
    if let (Some(f), Some(l)) = (frame_pos, last_launch) {
        if f > l {
            return Err(PlanError::IllegalPlan("frame built after launch".into()));
        }
        for (i, op) in plan.ops.iter().enumerate() {
            if matches!(op, PlanOp::CopyIn { .. }) && i > f {
                return Err(PlanError::IllegalPlan("copy-in after frame build".into()));
            }
        }
    }
    Ok(())
}

/// Global size is the smallest block multiple covering the outermost parallel
/// loop's trip count; kernels with no parallel loop launch a single work-item.
pub fn launch_geometry(
    vk: &ValidatedKernel,
    bindings: &Bindings,
    block: u64,
) -> Result<LaunchGeometry, PlanError> {
    let Some(stmt) = vk.outer_parallel_loop() else {
        return Ok(LaunchGeometry {
            global_size: 1,
            block_size: 1,
        });
    };
    let StmtKind::ForRange { lo, hi, .. } = &stmt.kind else {
        unreachable!("parallel loops are range loops");
    };
    let lo_v = eval_bound(lo, bindings)?;
    let hi_v = eval_bound(hi, bindings)?;
    let trips = (hi_v - lo_v).max(0) as u64;
    let global_size = (trips.max(1)).div_ceil(block) * block;
    Ok(LaunchGeometry {
        global_size,
        block_size: block,
    })
}

/// Loop bounds may reference scalar parameters, literals and arithmetic over
/// them; anything else is unresolvable at plan time.
fn eval_bound(e: &AstExpr, bindings: &Bindings) -> Result<i64, PlanError> {
    match &e.kind {
        ExprKind::IntLit(v) => Ok(*v as i64),
        ExprKind::Var(name) => match bindings.scalar(name) {
            Some(ScalarValue::I32(v)) => Ok(v as i64),
            _ => Err(PlanError::UnresolvableBound(format!(
                "`{name}` is not a bound i32 scalar"
            ))),
        },
        ExprKind::Unary {
            op: UnOp::Neg,
            operand,
        } => Ok(-eval_bound(operand, bindings)?),
        ExprKind::Binary { op, lhs, rhs } => {
            let a = eval_bound(lhs, bindings)?;
            let b = eval_bound(rhs, bindings)?;
            use crate::lang::BinOp;
            match op {
                BinOp::Add => Ok(a.wrapping_add(b)),
                BinOp::Sub => Ok(a.wrapping_sub(b)),
                BinOp::Mul => Ok(a.wrapping_mul(b)),
                BinOp::Div if b != 0 => Ok(a.wrapping_div(b)),
                BinOp::Rem if b != 0 => Ok(a.wrapping_rem(b)),
                _ => Err(PlanError::UnresolvableBound(format!(
                    "operator `{}` in loop bound",
                    op.symbol()
                ))),
            }
        }
        _ => Err(PlanError::UnresolvableBound(
            "loop bound is not an affine expression over scalars".into(),
        )),
    }
}
