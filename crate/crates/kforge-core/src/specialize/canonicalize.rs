//! Constant folding (f32 arithmetic folded in f32) and dead-node elimination.

use crate::ir::{ConstValue, IrGraph, NodeId, NodeKind};
use crate::lang::{BinOp, Builtin, ScalarType};
use std::collections::{HashMap, HashSet};

pub fn canonicalize(g: &mut IrGraph) {
    fold_constants(g);
    remove_unused_chain_values(g);
    sweep_orphans(g);
}

fn const_of(g: &IrGraph, id: NodeId) -> Option<ConstValue> {
    match g.node(id).kind {
        NodeKind::Const(v) => Some(v),
        _ => None,
    }
}

fn fold_constants(g: &mut IrGraph) {
    // Existing constants, for reuse instead of minting duplicates.
    let mut pool: HashMap<ConstValue, NodeId> = HashMap::new();
    for id in g.node_ids().collect::<Vec<_>>() {
        if let NodeKind::Const(v) = g.node(id).kind {
            pool.entry(v).or_insert(id);
        }
    }

    loop {
        let mut changed = false;
        for id in g.node_ids().collect::<Vec<_>>() {
            if !g.is_live(id) {
                continue;
            }
            let node = g.node(id).clone();
            let replacement: Option<Replacement> = match &node.kind {
                NodeKind::BinOp(op) => {
                    let l = const_of(g, node.inputs[0]);
                    let r = const_of(g, node.inputs[1]);
                    match (l, r) {
                        (Some(a), Some(b)) => fold_binop(*op, a, b).map(Replacement::Const),
                        _ => identity_simplify(g, *op, node.inputs[0], node.inputs[1]),
                    }
                }
                NodeKind::Builtin(b) => {
                    let args: Option<Vec<ConstValue>> =
                        node.inputs.iter().map(|&i| const_of(g, i)).collect();
                    args.and_then(|a| fold_builtin(*b, &a)).map(Replacement::Const)
                }
                NodeKind::Convert { from, to } => {
                    const_of(g, node.inputs[0]).map(|v| Replacement::Const(fold_convert(v, *from, *to)))
                }
                _ => None,
            };
            let Some(replacement) = replacement else {
                continue;
            };
            let new_id = match replacement {
                Replacement::Const(v) => *pool.entry(v).or_insert_with(|| {
                    g.add_node(NodeKind::Const(v), vec![], Some(crate::lang::Type::Scalar(v.ty())))
                }),
                Replacement::Node(n) => n,
            };
            if new_id == id {
                continue;
            }
            g.replace_uses(id, new_id);
            if !g.succ(id).is_empty() || !g.preds(id).is_empty() {
                g.unlink_from_chain(id);
            }
            g.kill(id);
            changed = true;
        }
        if !changed {
            break;
        }
    }
}

enum Replacement {
    Const(ConstValue),
    Node(NodeId),
}

/// Integer identities only; float identities like `x + 0.0` are not applied
/// because they are not bit-exact for negative zero.
fn identity_simplify(g: &IrGraph, op: BinOp, l: NodeId, r: NodeId) -> Option<Replacement> {
    let lc = const_of(g, l);
    let rc = const_of(g, r);
    let zero = Some(ConstValue::I32(0));
    let one = Some(ConstValue::I32(1));
    match op {
        BinOp::Add if lc == zero => Some(Replacement::Node(r)),
        BinOp::Add if rc == zero => Some(Replacement::Node(l)),
        BinOp::Sub if rc == zero && rc.is_some() => Some(Replacement::Node(l)),
        BinOp::Mul if lc == one => Some(Replacement::Node(r)),
        BinOp::Mul if rc == one => Some(Replacement::Node(l)),
        _ => None,
    }
}

/// Wrapping i32 / IEEE f32 evaluation, matching the emulator's semantics.
fn fold_binop(op: BinOp, a: ConstValue, b: ConstValue) -> Option<ConstValue> {
    use ConstValue::*;
    Some(match (a, b) {
        (I32(x), I32(y)) => match op {
            BinOp::Add => I32(x.wrapping_add(y)),
            BinOp::Sub => I32(x.wrapping_sub(y)),
            BinOp::Mul => I32(x.wrapping_mul(y)),
            BinOp::Div => {
                if y == 0 {
                    return None; // left for the runtime to trap
                }
                I32(x.wrapping_div(y))
            }
            BinOp::Rem => {
                if y == 0 {
                    return None;
                }
                I32(x.wrapping_rem(y))
            }
            BinOp::Lt => I32((x < y) as i32),
            BinOp::Le => I32((x <= y) as i32),
            BinOp::Gt => I32((x > y) as i32),
            BinOp::Ge => I32((x >= y) as i32),
            BinOp::Eq => I32((x == y) as i32),
            BinOp::Ne => I32((x != y) as i32),
            BinOp::And => I32((x != 0 && y != 0) as i32),
            BinOp::Or => I32((x != 0 || y != 0) as i32),
        },
        (F32(x), F32(y)) => match op {
            BinOp::Add => F32(x + y),
            BinOp::Sub => F32(x - y),
            BinOp::Mul => F32(x * y),
            BinOp::Div => F32(x / y),
            BinOp::Rem => return None,
            BinOp::Lt => I32((x < y) as i32),
            BinOp::Le => I32((x <= y) as i32),
            BinOp::Gt => I32((x > y) as i32),
            BinOp::Ge => I32((x >= y) as i32),
            BinOp::Eq => I32((x == y) as i32),
            BinOp::Ne => I32((x != y) as i32),
            BinOp::And | BinOp::Or => return None,
        },
        _ => return None,
    })
}

fn fold_builtin(b: Builtin, args: &[ConstValue]) -> Option<ConstValue> {
    let f = |v: &ConstValue| match v {
        ConstValue::F32(x) => Some(*x),
        ConstValue::I32(_) => None,
    };
    let x = f(args.first()?)?;
    let v = match b {
        Builtin::Sin => x.sin(),
        Builtin::Cos => x.cos(),
        Builtin::Sqrt => x.sqrt(),
        Builtin::Exp => x.exp(),
        Builtin::Log => x.ln(),
        Builtin::Fabs => x.abs(),
        Builtin::Floor => x.floor(),
        Builtin::Pow => x.powf(f(args.get(1)?)?),
        Builtin::Min => x.min(f(args.get(1)?)?),
        Builtin::Max => x.max(f(args.get(1)?)?),
    };
    Some(ConstValue::F32(v))
}

fn fold_convert(v: ConstValue, _from: ScalarType, to: ScalarType) -> ConstValue {
    match (v, to) {
        (ConstValue::I32(x), ScalarType::F32) => ConstValue::F32(x as f32),
        (ConstValue::F32(x), ScalarType::I32) => ConstValue::I32(x as i32),
        (v, _) => v,
    }
}

/// Kinds safe to drop when nothing consumes their value.
fn is_removable_value(kind: &NodeKind) -> bool {
    matches!(
        kind,
        NodeKind::BinOp(_)
            | NodeKind::Builtin(_)
            | NodeKind::Convert { .. }
            | NodeKind::GlobalId(_)
            | NodeKind::GlobalSize(_)
            | NodeKind::ArrayLoad
    )
}

fn pinned(g: &IrGraph) -> HashSet<NodeId> {
    let mut pins = HashSet::new();
    for l in &g.loop_table {
        pins.insert(l.header);
        pins.insert(l.end);
        pins.insert(l.exit);
        if let Some(i) = l.induction {
            pins.insert(i);
        }
        if let Some(b) = l.bound {
            pins.insert(b);
        }
    }
    if let Some(fl) = g.flattened {
        pins.insert(fl.cond);
    }
    pins
}

fn remove_unused_chain_values(g: &mut IrGraph) {
    let pins = pinned(g);
    loop {
        let mut removed = false;
        for id in g.node_ids().collect::<Vec<_>>() {
            if !g.is_live(id) || pins.contains(&id) {
                continue;
            }
            if !is_removable_value(&g.node(id).kind) {
                continue;
            }
            if !g.users(id).is_empty() {
                continue;
            }
            g.unlink_from_chain(id);
            g.kill(id);
            removed = true;
        }
        if !removed {
            break;
        }
    }
}

/// Drop floating nodes no longer reachable from the graph roots.
fn sweep_orphans(g: &mut IrGraph) {
    let mut reached: HashSet<NodeId> = HashSet::new();
    let mut stack = vec![g.start()];
    if let Some(fl) = g.flattened {
        stack.push(fl.cond);
    }
    while let Some(n) = stack.pop() {
        if !reached.insert(n) {
            continue;
        }
        for &s in g.succ(n) {
            stack.push(s);
        }
        for &i in &g.node(n).inputs {
            stack.push(i);
        }
    }
    for id in g.node_ids().collect::<Vec<_>>() {
        if !reached.contains(&id) {
            if let NodeKind::Param(index) = g.node(id).kind {
                g.params[index as usize].node = None;
            }
            g.kill(id);
        }
    }
}
