//! AST-to-graph lowering.
//!
//! Scalars are in SSA form: straight-line assignments track the current value
//! node, loops get header phis for every variable they reassign, if/else
//! merges get phis at the Merge node. Parallel range loops lower to the
//! grid-stride form: induction starts at GlobalID(0) (plus the lower bound
//! when nonzero) and the back edge advances by GlobalSize(0).

use super::*;
use crate::lang::{
    AstExpr, AstStmt, BinOp, ExprKind, ScalarType, StmtKind, Type, UnOp, ValidatedKernel,
};
use std::collections::HashMap;

/// Lower a validated kernel to the graph IR. Deterministic: identical input
/// produces an identical graph with identical node numbering.
pub fn build(vk: &ValidatedKernel) -> IrGraph {
    let mut b = Builder {
        graph: IrGraph::new(vk.kernel.name.clone()),
        vk,
        scopes: vec![HashMap::new()],
        cursor: NodeId(0),
        const_pool: HashMap::new(),
        param_nodes: HashMap::new(),
        loop_depth: 0,
    };
    let start = b.graph.add_node(NodeKind::Start, vec![], None);
    b.cursor = start;
    for p in &vk.kernel.params {
        b.graph.params.push(GraphParam {
            name: p.name.clone(),
            ty: p.ty,
            node: None,
        });
    }
    b.lower_body(&vk.kernel.body);
    let end = b.graph.add_node(NodeKind::End, vec![], None);
    b.append(end);
    b.graph
}

struct Builder<'a> {
    graph: IrGraph,
    vk: &'a ValidatedKernel,
    /// Variable name -> current SSA value, one map per lexical scope.
    scopes: Vec<HashMap<String, NodeId>>,
    /// Last node of the chain under construction.
    cursor: NodeId,
    const_pool: HashMap<ConstValue, NodeId>,
    param_nodes: HashMap<String, NodeId>,
    loop_depth: u32,
}

impl<'a> Builder<'a> {
    /// Link `node` as the next control successor of the cursor. Pushing (not
    /// overwriting) lets branching nodes accumulate [then, else] or
    /// [body, exit] slots in order.
    fn append(&mut self, node: NodeId) {
        self.graph.succ_push(self.cursor, node);
        self.cursor = node;
    }

    fn constant(&mut self, value: ConstValue) -> NodeId {
        if let Some(&id) = self.const_pool.get(&value) {
            return id;
        }
        let ty = Type::Scalar(value.ty());
        let id = self
            .graph
            .add_node(NodeKind::Const(value), vec![], Some(ty));
        self.const_pool.insert(value, id);
        id
    }

    fn param_node(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.param_nodes.get(name) {
            return id;
        }
        let (index, ty) = self
            .vk
            .kernel
            .params
            .iter()
            .enumerate()
            .find(|(_, p)| p.name == name)
            .map(|(i, p)| (i as u32, p.ty))
            .expect("validated parameter");
        let id = self
            .graph
            .add_node(NodeKind::Param(index), vec![], Some(ty));
        self.graph.params[index as usize].node = Some(id);
        self.param_nodes.insert(name.to_string(), id);
        id
    }

    fn lookup(&self, name: &str) -> Option<NodeId> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn bind(&mut self, name: &str, value: NodeId) {
        for scope in self.scopes.iter_mut().rev() {
            if let Some(slot) = scope.get_mut(name) {
                *slot = value;
                return;
            }
        }
        self.scopes
            .last_mut()
            .unwrap()
            .insert(name.to_string(), value);
    }

    fn declare(&mut self, name: &str, value: NodeId) {
        self.scopes
            .last_mut()
            .unwrap()
            .insert(name.to_string(), value);
    }

    fn resolve_value(&mut self, name: &str) -> NodeId {
        if let Some(v) = self.lookup(name) {
            v
        } else {
            self.param_node(name)
        }
    }

    fn lower_body(&mut self, stmts: &[AstStmt]) {
        for s in stmts {
            self.lower_stmt(s);
        }
    }

    fn lower_stmt(&mut self, stmt: &AstStmt) {
        match &stmt.kind {
            StmtKind::VarDecl { name, init, .. } => {
                let v = self.lower_expr(init);
                self.declare(name, v);
            }
            StmtKind::Assign { name, value } => {
                let v = self.lower_expr(value);
                self.bind(name, v);
            }
            StmtKind::ArrayStore {
                array,
                index,
                value,
            } => {
                let base = self.param_node(array);
                let idx = self.lower_expr(index);
                let val = self.lower_expr(value);
                let st = self
                    .graph
                    .add_node(NodeKind::ArrayStore, vec![base, idx, val], None);
                self.append(st);
            }
            StmtKind::ForRange {
                var,
                lo,
                hi,
                body,
                ..
            } => {
                let attrs = self.vk.loops[&stmt.id];
                if attrs.parallel {
                    self.lower_parallel_for(var, lo, hi, body, attrs.const_trips);
                } else {
                    self.lower_sequential_for(var, lo, hi, body, attrs.const_trips);
                }
            }
            StmtKind::While { cond, body } => self.lower_while(cond, body),
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => self.lower_if(cond, then_body, else_body),
            StmtKind::Block(body) => {
                self.scopes.push(HashMap::new());
                self.lower_body(body);
                self.scopes.pop();
            }
        }
    }

    /// Creates header phis for every outer variable the loop body reassigns.
    /// Returns (name, phi, entry value) triples in first-assignment order.
    fn make_loop_phis(
        &mut self,
        header: NodeId,
        body: &[AstStmt],
    ) -> Vec<(String, NodeId, NodeId)> {
        let mut out = Vec::new();
        for name in assigned_vars(body) {
            if let Some(entry) = self.lookup(&name) {
                let ty = self.graph.node(entry).ty;
                let phi = self
                    .graph
                    .add_node(NodeKind::Phi, vec![header, entry], ty);
                self.bind(&name, phi);
                out.push((name, phi, entry));
            }
        }
        out
    }

    fn finish_loop_phis(&mut self, phis: &[(String, NodeId, NodeId)]) {
        for (name, phi, _) in phis {
            let back = self.lookup(name).expect("loop phi variable in scope");
            self.graph.node_mut(*phi).inputs.push(back);
        }
    }

    fn lower_sequential_for(
        &mut self,
        var: &str,
        lo: &AstExpr,
        hi: &AstExpr,
        body: &[AstStmt],
        const_trips: Option<u64>,
    ) {
        // Range bounds are evaluated once, before the loop.
        let lo_v = self.lower_expr(lo);
        let hi_v = self.lower_expr(hi);
        let i_ty = Some(Type::Scalar(ScalarType::I32));

        let header = self.graph.add_node(NodeKind::LoopBegin, vec![], None);
        self.scopes.push(HashMap::new());
        let phis = self.make_loop_phis(header, body);
        let iphi = self.graph.add_node(NodeKind::Phi, vec![header, lo_v], i_ty);
        self.declare(var, iphi);
        let cond = self
            .graph
            .add_node(NodeKind::BinOp(BinOp::Lt), vec![iphi, hi_v], i_ty);
        self.graph.node_mut(header).inputs.push(cond);
        self.append(header);

        self.loop_depth += 1;
        self.lower_body(body);
        self.loop_depth -= 1;

        let one = self.constant(ConstValue::I32(1));
        let next = self
            .graph
            .add_node(NodeKind::BinOp(BinOp::Add), vec![iphi, one], i_ty);
        self.append(next);
        self.graph.node_mut(iphi).inputs.push(next);
        self.finish_loop_phis(&phis);
        self.close_loop(header, Some(iphi), Some(hi_v), false, const_trips, LoopKind::For);
    }

    fn lower_parallel_for(
        &mut self,
        var: &str,
        lo: &AstExpr,
        hi: &AstExpr,
        body: &[AstStmt],
        const_trips: Option<u64>,
    ) {
        let lo_v = self.lower_expr(lo);
        let hi_v = self.lower_expr(hi);
        let i_ty = Some(Type::Scalar(ScalarType::I32));

        let gid = self.graph.add_node(NodeKind::GlobalId(0), vec![], i_ty);
        self.append(gid);
        let init = if matches!(
            self.graph.node(lo_v).kind,
            NodeKind::Const(ConstValue::I32(0))
        ) {
            gid
        } else {
            let add = self
                .graph
                .add_node(NodeKind::BinOp(BinOp::Add), vec![lo_v, gid], i_ty);
            self.append(add);
            add
        };

        let header = self.graph.add_node(NodeKind::LoopBegin, vec![], None);
        self.scopes.push(HashMap::new());
        let phis = self.make_loop_phis(header, body);
        debug_assert!(
            phis.is_empty(),
            "validated parallel loop cannot reassign outer scalars"
        );
        let iphi = self.graph.add_node(NodeKind::Phi, vec![header, init], i_ty);
        self.declare(var, iphi);
        let cond = self
            .graph
            .add_node(NodeKind::BinOp(BinOp::Lt), vec![iphi, hi_v], i_ty);
        self.graph.node_mut(header).inputs.push(cond);
        self.append(header);

        self.loop_depth += 1;
        self.lower_body(body);
        self.loop_depth -= 1;

        // Grid stride: iv += get_global_size(0).
        let gsize = self.graph.add_node(NodeKind::GlobalSize(0), vec![], i_ty);
        self.append(gsize);
        let next = self
            .graph
            .add_node(NodeKind::BinOp(BinOp::Add), vec![gsize, iphi], i_ty);
        self.append(next);
        self.graph.node_mut(iphi).inputs.push(next);
        self.finish_loop_phis(&phis);
        self.close_loop(header, Some(iphi), Some(hi_v), true, const_trips, LoopKind::For);
    }

    fn lower_while(&mut self, cond: &AstExpr, body: &[AstStmt]) {
        let header = self.graph.add_node(NodeKind::LoopBegin, vec![], None);
        self.scopes.push(HashMap::new());
        let phis = self.make_loop_phis(header, body);
        let cond_v = self.lower_inline_expr(cond);
        self.graph.node_mut(header).inputs.push(cond_v);
        self.append(header);

        self.loop_depth += 1;
        self.lower_body(body);
        self.loop_depth -= 1;
        self.finish_loop_phis(&phis);
        self.close_loop(header, None, None, false, None, LoopKind::While);
    }

    /// Appends LoopEnd (with its back edge) and LoopExit, records the loop,
    /// pops the loop scope and leaves the cursor at the exit.
    fn close_loop(
        &mut self,
        header: NodeId,
        induction: Option<NodeId>,
        bound: Option<NodeId>,
        parallel: bool,
        const_trips: Option<u64>,
        kind: LoopKind,
    ) {
        let end = self.graph.add_node(NodeKind::LoopEnd, vec![], None);
        self.append(end);
        self.graph.set_succ(end, vec![header]);

        let exit = self.graph.add_node(NodeKind::LoopExit, vec![], None);
        self.graph.succ_push(header, exit);
        self.cursor = exit;
        self.scopes.pop();

        self.graph.loop_table.push(LoopInfo {
            header,
            end,
            exit,
            induction,
            bound,
            parallel,
            depth: self.loop_depth,
            const_trips,
            kind,
        });
    }

    fn lower_if(&mut self, cond: &AstExpr, then_body: &[AstStmt], else_body: &[AstStmt]) {
        let cond_v = self.lower_inline_expr(cond);
        let if_node = self.graph.add_node(NodeKind::If, vec![cond_v], None);
        self.append(if_node);

        // Pre-branch values of every variable either branch assigns.
        let mut names = assigned_vars(then_body);
        for n in assigned_vars(else_body) {
            if !names.contains(&n) {
                names.push(n);
            }
        }
        names.retain(|n| self.lookup(n).is_some());
        let pre: Vec<NodeId> = names.iter().map(|n| self.lookup(n).unwrap()).collect();

        self.scopes.push(HashMap::new());
        self.lower_body(then_body);
        self.scopes.pop();
        let then_last = self.cursor;
        let then_vals: Vec<NodeId> = names.iter().map(|n| self.lookup(n).unwrap()).collect();
        for (name, v) in names.iter().zip(&pre) {
            self.bind(name, *v);
        }

        self.cursor = if_node;
        self.scopes.push(HashMap::new());
        self.lower_body(else_body);
        self.scopes.pop();
        let else_last = self.cursor;
        let else_vals: Vec<NodeId> = names.iter().map(|n| self.lookup(n).unwrap()).collect();

        // Wire both branch tails into the merge. An empty branch contributes
        // a direct If -> Merge edge in its successor slot.
        let merge = self.graph.add_node(NodeKind::Merge, vec![], None);
        if then_last == if_node {
            let mut s = self.graph.succ(if_node).to_vec();
            s.insert(0, merge);
            self.graph.set_succ(if_node, s);
        } else {
            self.graph.set_succ(then_last, vec![merge]);
        }
        if else_last == if_node {
            self.graph.succ_push(if_node, merge);
        } else {
            self.graph.set_succ(else_last, vec![merge]);
        }

        for ((name, then_v), else_v) in names.iter().zip(then_vals).zip(else_vals) {
            if then_v == else_v {
                self.bind(name, then_v);
                continue;
            }
            let ty = self.graph.node(then_v).ty;
            let phi = self
                .graph
                .add_node(NodeKind::Phi, vec![merge, then_v, else_v], ty);
            self.bind(name, phi);
        }
        self.cursor = merge;
    }

    /// Lower an expression into chain temporaries. Compound nodes are
    /// appended to the control chain in evaluation order.
    fn lower_expr(&mut self, e: &AstExpr) -> NodeId {
        self.lower_expr_mode(e, false)
    }

    /// Lower a branch/loop condition: compound nodes float and are rendered
    /// inline by the emitter, re-evaluated at each test of the condition.
    fn lower_inline_expr(&mut self, e: &AstExpr) -> NodeId {
        self.lower_expr_mode(e, true)
    }

    fn lower_expr_mode(&mut self, e: &AstExpr, inline: bool) -> NodeId {
        let ty = self.vk.types.get(&e.id).copied();
        match &e.kind {
            ExprKind::IntLit(v) => self.constant(ConstValue::I32(*v)),
            ExprKind::FloatLit(v) => self.constant(ConstValue::F32(*v)),
            ExprKind::Pi => self.constant(ConstValue::F32(crate::lang::PI_F32)),
            ExprKind::Var(name) => self.resolve_value(name),
            ExprKind::ArrayLoad { array, index } => {
                let base = self.param_node(array);
                let idx = self.lower_expr_mode(index, inline);
                let node = self
                    .graph
                    .add_node(NodeKind::ArrayLoad, vec![base, idx], ty);
                if !inline {
                    self.append(node);
                }
                node
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.lower_expr_mode(lhs, inline);
                let r = self.lower_expr_mode(rhs, inline);
                let node = self.graph.add_node(NodeKind::BinOp(*op), vec![l, r], ty);
                if !inline {
                    self.append(node);
                }
                node
            }
            ExprKind::Unary {
                op: UnOp::Neg,
                operand,
            } => {
                // Negation lowers to arithmetic with exact semantics:
                // 0 - x for i32 (wrapping), -1.0 * x for f32 (sign flip).
                let v = self.lower_expr_mode(operand, inline);
                let scalar = match ty {
                    Some(Type::Scalar(s)) => s,
                    _ => ScalarType::I32,
                };
                let node = match scalar {
                    ScalarType::I32 => {
                        let zero = self.constant(ConstValue::I32(0));
                        self.graph
                            .add_node(NodeKind::BinOp(BinOp::Sub), vec![zero, v], ty)
                    }
                    ScalarType::F32 => {
                        let neg_one = self.constant(ConstValue::F32(-1.0));
                        self.graph
                            .add_node(NodeKind::BinOp(BinOp::Mul), vec![neg_one, v], ty)
                    }
                };
                if !inline {
                    self.append(node);
                }
                node
            }
            ExprKind::Call { builtin, args } => {
                let mut inputs = Vec::with_capacity(args.len());
                for a in args {
                    inputs.push(self.lower_expr_mode(a, inline));
                }
                let node = self.graph.add_node(NodeKind::Builtin(*builtin), inputs, ty);
                if !inline {
                    self.append(node);
                }
                node
            }
            ExprKind::Convert { to, operand } => {
                let v = self.lower_expr_mode(operand, inline);
                let from = match self.graph.node(v).ty {
                    Some(Type::Scalar(s)) => s,
                    _ => *to,
                };
                if from == *to {
                    return v;
                }
                let node = self
                    .graph
                    .add_node(NodeKind::Convert { from, to: *to }, vec![v], ty);
                if !inline {
                    self.append(node);
                }
                node
            }
        }
    }
}

/// Variable names assigned anywhere in the statement list (including nested
/// bodies), ordered by first assignment.
fn assigned_vars(stmts: &[AstStmt]) -> Vec<String> {
    fn walk(stmts: &[AstStmt], out: &mut Vec<String>) {
        for s in stmts {
            match &s.kind {
                StmtKind::Assign { name, .. } => {
                    if !out.contains(name) {
                        out.push(name.clone());
                    }
                }
                StmtKind::ForRange { body, .. }
                | StmtKind::While { body, .. }
                | StmtKind::Block(body) => walk(body, out),
                StmtKind::If {
                    then_body,
                    else_body,
                    ..
                } => {
                    walk(then_body, out);
                    walk(else_body, out);
                }
                _ => {}
            }
        }
    }
    let mut out = Vec::new();
    walk(stmts, &mut out);
    out
}
