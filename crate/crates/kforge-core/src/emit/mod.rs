//! OpenCL C code generation from a specialized graph.
//!
//! The generated kernel follows the heap-and-frame calling convention: a
//! single `__global uchar *_heap_base` plus a `ulong _frame_base` offset. The
//! frame is an array of 8-byte slots; slots 0..6 are a reserved runtime
//! header and user parameters occupy slots 6, 7, ... in declaration order.
//! Each device array is laid out as [u64 length][elements], so element
//! addressing is `base + 8 + index * sizeof(elem)`.

use crate::ir::{ConstValue, IrGraph, NodeId, NodeKind, UnrollStrategy};
use crate::lang::{BinOp, Builtin, ScalarType, Type};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write;

/// First frame slot holding user data; lower slots are the runtime header.
pub const FIRST_USER_SLOT: usize = 6;

/// Version string mixed into artifact cache keys; bump when the generated
/// code shape changes.
pub const EMITTER_VERSION: &str = "kforge-emitter-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmitOptions {
    /// Wrap the flattened body in `if (gid < bound)`. The runtime rounds the
    /// global size up to a block multiple, so the guard is on by default.
    pub guard_global_bounds: bool,
    pub emit_comments: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions {
            guard_global_bounds: true,
            emit_comments: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmittedKernel {
    pub source: String,
    pub entry_name: String,
    /// Parameter name -> frame slot index (starting at 6).
    pub frame_layout: Vec<(String, usize)>,
    pub required_block: Option<(u32, u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmitError {
    #[error("no emission rule for node {node} ({kind})")]
    UnsupportedNode { node: String, kind: String },
}

/// Generate OpenCL C for a verified graph.
pub fn emit(g: &IrGraph, opts: &EmitOptions) -> Result<EmittedKernel, EmitError> {
    let mut e = Emitter {
        g,
        opts,
        body: String::new(),
        names: HashMap::new(),
        decls: Vec::new(),
        indent: 1,
        synth: g.next_id(),
    };

    // Prologue: frame pointer plus one load per parameter, in declaration order.
    if opts.emit_comments {
        e.line("// frame and parameter setup");
    }
    e.line("__global ulong *_frame = (__global ulong *) &_heap_base[_frame_base];");
    let mut frame_layout = Vec::new();
    for (i, p) in g.params.iter().enumerate() {
        let slot = FIRST_USER_SLOT + i;
        frame_layout.push((p.name.clone(), slot));
        let name = match p.node {
            Some(n) => e.name_of(n),
            None => e.synth_name(ctype_of(p.ty)),
        };
        match p.ty {
            Type::Array(_) => e.push_line(format!("{name} = (ulong) _frame[{slot}];")),
            Type::Scalar(ScalarType::I32) => {
                e.push_line(format!("{name} = (int) _frame[{slot}];"))
            }
            Type::Scalar(ScalarType::F32) => e.push_line(format!(
                "{name} = *((__global float *) &_heap_base[_frame_base + {}]);",
                slot * 8
            )),
        }
    }

    // Guarded region: everything after the base loads.
    let guard = match (g.flattened, opts.guard_global_bounds) {
        (Some(fl), true) => Some(fl.cond),
        _ => None,
    };
    if let Some(cond) = guard {
        if opts.emit_comments {
            e.line("// global-bounds guard");
        }
        let cond_text = e.render_inline_root(cond);
        e.push_line(format!("if ({cond_text}) {{"));
        e.indent += 1;
    }

    let start = g.start();
    let mut cursor = g.succ(start).first().copied();
    while let Some(n) = cursor {
        cursor = e.emit_chain_node(n)?;
    }

    if guard.is_some() {
        e.indent -= 1;
        e.line("}");
    }

    // Assemble the final text.
    let mut out = String::new();
    let required_block = g.nd_range().map(|(_, b)| b);
    if let Some((x, y, z)) = required_block {
        if opts.emit_comments {
            out.push_str("// scheduling attributes\n");
        }
        let _ = writeln!(out, "__attribute__((reqd_work_group_size({x}, {y}, {z})))");
    }
    let _ = writeln!(
        out,
        "__kernel void {}(__global uchar *_heap_base, ulong _frame_base)",
        g.kernel_name
    );
    out.push_str("{\n");
    if !e.decls.is_empty() {
        if opts.emit_comments {
            out.push_str("  // variable declaration\n");
        }
        for (cty, name) in &e.decls {
            let _ = writeln!(out, "  {cty} {name};");
        }
    }
    out.push_str(&e.body);
    out.push_str("}\n");

    Ok(EmittedKernel {
        source: out,
        entry_name: g.kernel_name.clone(),
        frame_layout,
        required_block,
    })
}

fn ctype_of(ty: Type) -> &'static str {
    match ty {
        Type::Array(_) => "ulong",
        Type::Scalar(ScalarType::I32) => "int",
        Type::Scalar(ScalarType::F32) => "float",
    }
}

fn prefix_of(cty: &str) -> &'static str {
    match cty {
        "ulong" => "ul",
        "int" => "i",
        "float" => "f",
        _ => "v",
    }
}

fn elem_ctype(s: ScalarType) -> &'static str {
    match s {
        ScalarType::I32 => "int",
        ScalarType::F32 => "float",
    }
}

fn elem_size(s: ScalarType) -> usize {
    match s {
        ScalarType::I32 | ScalarType::F32 => 4,
    }
}

struct Emitter<'g> {
    g: &'g IrGraph,
    opts: &'g EmitOptions,
    body: String,
    names: HashMap<NodeId, String>,
    decls: Vec<(&'static str, String)>,
    indent: usize,
    synth: u32,
}

impl<'g> Emitter<'g> {
    fn line(&mut self, text: &str) {
        self.push_line(text.to_string());
    }

    fn push_line(&mut self, text: String) {
        for _ in 0..self.indent {
            self.body.push_str("  ");
        }
        self.body.push_str(&text);
        self.body.push('\n');
    }

    /// Temporary named `<type-prefix>_<node-id>`, declared at function head.
    fn name_of(&mut self, id: NodeId) -> String {
        if let Some(n) = self.names.get(&id) {
            return n.clone();
        }
        let cty = ctype_of(
            self.g
                .node(id)
                .ty
                .unwrap_or(Type::Scalar(ScalarType::I32)),
        );
        let name = format!("{}_{}", prefix_of(cty), id.0);
        self.decls.push((cty, name.clone()));
        self.names.insert(id, name.clone());
        name
    }

    fn synth_name(&mut self, cty: &'static str) -> String {
        let name = format!("{}_{}", prefix_of(cty), self.synth);
        self.synth += 1;
        self.decls.push((cty, name.clone()));
        name
    }

    fn scalar_ty(&self, id: NodeId) -> ScalarType {
        match self.g.node(id).ty {
            Some(Type::Scalar(s)) => s,
            Some(Type::Array(s)) => s,
            None => ScalarType::I32,
        }
    }

    /// Reference to a value: temp name, phi variable, literal, or an inline
    /// rendering for floating condition subexpressions.
    fn refer(&mut self, id: NodeId) -> String {
        if let Some(n) = self.names.get(&id) {
            return n.clone();
        }
        let node = self.g.node(id);
        match &node.kind {
            NodeKind::Const(c) => literal(*c),
            NodeKind::Param(_) | NodeKind::Phi => self.name_of(id),
            NodeKind::GlobalId(d) => format!("get_global_id({d})"),
            NodeKind::GlobalSize(d) => format!("get_global_size({d})"),
            _ => self.render_inline(id),
        }
    }

    /// Inline rendering for floating expression trees (conditions).
    fn render_inline(&mut self, id: NodeId) -> String {
        let node = self.g.node(id).clone();
        match &node.kind {
            NodeKind::BinOp(op) => {
                let l = self.refer(node.inputs[0]);
                let r = self.refer(node.inputs[1]);
                format!("({l} {} {r})", c_binop(*op))
            }
            NodeKind::Builtin(b) => {
                let args = node
                    .inputs
                    .iter()
                    .map(|&a| self.refer(a))
                    .collect::<Vec<_>>()
                    .join(", ");
                format!("{}({args})", c_builtin(*b))
            }
            NodeKind::Convert { to, .. } => {
                let v = self.refer(node.inputs[0]);
                format!("(({}) {v})", elem_ctype(*to))
            }
            NodeKind::ArrayLoad => {
                let elem = self.scalar_ty(id);
                let addr = self.address_expr(node.inputs[0], node.inputs[1], elem);
                format!("(*((__global {} *) &_heap_base[{addr}]))", elem_ctype(elem))
            }
            other => format!("/* {other} */ 0"),
        }
    }

    /// Root of a condition renders without its outermost parentheses,
    /// matching the `for (; i_11 < i_8; )` shape of hand-written kernels.
    fn render_inline_root(&mut self, id: NodeId) -> String {
        if self.names.contains_key(&id) {
            return self.names[&id].clone();
        }
        match self.g.node(id).kind.clone() {
            NodeKind::BinOp(op) => {
                let inputs = self.g.node(id).inputs.clone();
                let l = self.refer(inputs[0]);
                let r = self.refer(inputs[1]);
                format!("{l} {} {r}", c_binop(op))
            }
            NodeKind::Const(c) => literal(c),
            NodeKind::Param(_) | NodeKind::Phi => self.name_of(id),
            _ => self.refer(id),
        }
    }

    fn address_expr(&mut self, base: NodeId, index: NodeId, elem: ScalarType) -> String {
        let base_name = self.refer(base);
        let idx = self.refer(index);
        format!("{base_name} + 8 + ((ulong) {idx}) * {}", elem_size(elem))
    }

    /// Emit one control-chain node; returns the next chain position.
    fn emit_chain_node(&mut self, id: NodeId) -> Result<Option<NodeId>, EmitError> {
        let node = self.g.node(id).clone();
        match &node.kind {
            NodeKind::End => Ok(None),
            NodeKind::NdRange(..) => Ok(self.g.succ(id).first().copied()),
            NodeKind::ArrayStore => {
                let elem = self.scalar_ty(node.inputs[0]);
                let addr = self.address_expr(node.inputs[0], node.inputs[1], elem);
                let addr_temp = self.synth_name("ulong");
                self.push_line(format!("{addr_temp} = {addr};"));
                let value = self.refer(node.inputs[2]);
                self.push_line(format!(
                    "*((__global {} *) &_heap_base[{addr_temp}]) = {value};",
                    elem_ctype(elem)
                ));
                Ok(self.g.succ(id).first().copied())
            }
            NodeKind::ArrayLoad => {
                let elem = self.scalar_ty(id);
                let addr = self.address_expr(node.inputs[0], node.inputs[1], elem);
                let addr_temp = self.synth_name("ulong");
                self.push_line(format!("{addr_temp} = {addr};"));
                let name = self.name_of(id);
                self.push_line(format!(
                    "{name} = *((__global {} *) &_heap_base[{addr_temp}]);",
                    elem_ctype(elem)
                ));
                Ok(self.g.succ(id).first().copied())
            }
            NodeKind::BinOp(op) => {
                let l = self.refer(node.inputs[0]);
                let r = self.refer(node.inputs[1]);
                let name = self.name_of(id);
                self.push_line(format!("{name} = {l} {} {r};", c_binop(*op)));
                Ok(self.g.succ(id).first().copied())
            }
            NodeKind::Builtin(b) => {
                let args = node
                    .inputs
                    .iter()
                    .map(|&a| self.refer(a))
                    .collect::<Vec<_>>()
                    .join(", ");
                let name = self.name_of(id);
                self.push_line(format!("{name} = {}({args});", c_builtin(*b)));
                Ok(self.g.succ(id).first().copied())
            }
            NodeKind::Convert { to, .. } => {
                let v = self.refer(node.inputs[0]);
                let name = self.name_of(id);
                self.push_line(format!("{name} = ({}) {v};", elem_ctype(*to)));
                Ok(self.g.succ(id).first().copied())
            }
            NodeKind::GlobalId(d) => {
                let name = self.name_of(id);
                self.push_line(format!("{name} = get_global_id({d});"));
                Ok(self.g.succ(id).first().copied())
            }
            NodeKind::GlobalSize(d) => {
                let name = self.name_of(id);
                self.push_line(format!("{name} = get_global_size({d});"));
                Ok(self.g.succ(id).first().copied())
            }
            NodeKind::UnrollHint(strategy) => {
                let header = self.g.succ(id)[0];
                self.emit_loop(header, Some(*strategy))
            }
            NodeKind::LoopBegin => self.emit_loop(id, None),
            NodeKind::If => self.emit_if(id),
            other => Err(EmitError::UnsupportedNode {
                node: id.to_string(),
                kind: other.to_string(),
            }),
        }
    }

    /// Phis owned by `owner`, in id order.
    fn phis_of(&self, owner: NodeId) -> Vec<NodeId> {
        self.g
            .node_ids()
            .filter(|&n| {
                self.g.node(n).kind == NodeKind::Phi
                    && self.g.node(n).inputs.first() == Some(&owner)
            })
            .collect()
    }

    fn emit_loop(
        &mut self,
        header: NodeId,
        pragma: Option<UnrollStrategy>,
    ) -> Result<Option<NodeId>, EmitError> {
        let info = self
            .g
            .loop_for_header(header)
            .expect("loop table entry for header")
            .clone();

        // Phi initializations precede the loop statement.
        let phis = self.phis_of(header);
        for &phi in &phis {
            let init = self.g.node(phi).inputs[1];
            let init_ref = self.refer(init);
            let name = self.name_of(phi);
            self.push_line(format!("{name} = {init_ref};"));
        }
        match pragma {
            Some(UnrollStrategy::Full) => {
                if self.opts.emit_comments {
                    self.line("#pragma unroll // full unroll, constant trip count");
                } else {
                    self.line("#pragma unroll");
                }
            }
            Some(UnrollStrategy::Factor(n)) => {
                if self.opts.emit_comments {
                    self.push_line(format!("#pragma unroll {n} // loop unrolling with factor {n}"));
                } else {
                    self.push_line(format!("#pragma unroll {n}"));
                }
            }
            None => {}
        }
        let cond = self.g.node(header).inputs[0];
        let cond_text = self.render_inline_root(cond);
        // Source `while` loops also render in headerless-for form.
        self.push_line(format!("for (; {cond_text}; ) {{"));
        self.indent += 1;

        let mut cursor = Some(self.g.succ(header)[0]);
        while let Some(n) = cursor {
            if n == info.end {
                break;
            }
            cursor = self.emit_chain_node(n)?;
        }

        for &phi in &phis {
            let back = self.g.node(phi).inputs[2];
            let back_ref = self.refer(back);
            let name = self.name_of(phi);
            self.push_line(format!("{name} = {back_ref};"));
        }
        self.indent -= 1;
        self.line("}");
        Ok(self.g.succ(info.exit).first().copied())
    }

    fn emit_if(&mut self, id: NodeId) -> Result<Option<NodeId>, EmitError> {
        let cond = self.g.node(id).inputs[0];
        let succ = self.g.succ(id).to_vec();
        let merge = find_merge(self.g, id);
        let phis = self.phis_of(merge);

        let cond_text = self.render_inline_root(cond);
        self.push_line(format!("if ({cond_text}) {{"));
        self.indent += 1;
        let mut cursor = Some(succ[0]);
        while let Some(n) = cursor {
            if n == merge {
                break;
            }
            cursor = self.emit_chain_node(n)?;
        }
        for &phi in &phis {
            let v = self.g.node(phi).inputs[1];
            let v_ref = self.refer(v);
            let name = self.name_of(phi);
            self.push_line(format!("{name} = {v_ref};"));
        }
        self.indent -= 1;

        let else_has_stmts = succ[1] != merge;
        if else_has_stmts || !phis.is_empty() {
            self.line("} else {");
            self.indent += 1;
            let mut cursor = Some(succ[1]);
            while let Some(n) = cursor {
                if n == merge {
                    break;
                }
                cursor = self.emit_chain_node(n)?;
            }
            for &phi in &phis {
                let v = self.g.node(phi).inputs[2];
                let v_ref = self.refer(v);
                let name = self.name_of(phi);
                self.push_line(format!("{name} = {v_ref};"));
            }
            self.indent -= 1;
        }
        self.line("}");
        Ok(self.g.succ(merge).first().copied())
    }
}

/// The merge node where both branches of `if_node` reconvene: follow either
/// branch chain to its tail.
fn find_merge(g: &IrGraph, if_node: NodeId) -> NodeId {
    let mut n = g.succ(if_node)[0];
    loop {
        if g.node(n).kind == NodeKind::Merge && g.preds(n).len() >= 2 {
            // The first merge with multiple predecessors reached by straight
            // successor-walking from the then branch is the reconvene point.
            return n;
        }
        match g.node(n).kind {
            NodeKind::LoopBegin => {
                let info = g.loop_for_header(n).expect("loop table entry");
                n = g.succ(info.exit)[0];
            }
            NodeKind::If => {
                n = g.succ(find_merge(g, n))[0];
            }
            _ => n = g.succ(n)[0],
        }
    }
}

fn literal(c: ConstValue) -> String {
    match c {
        ConstValue::I32(v) => format!("{v}"),
        ConstValue::F32(v) => {
            if v.is_nan() {
                "NAN".to_string()
            } else if v.is_infinite() {
                if v > 0.0 {
                    "INFINITY".to_string()
                } else {
                    "-INFINITY".to_string()
                }
            } else {
                format!("{}F", crate::lang::float_literal(v))
            }
        }
    }
}

fn c_binop(op: BinOp) -> &'static str {
    op.symbol()
}

fn c_builtin(b: Builtin) -> &'static str {
    match b {
        Builtin::Min => "fmin",
        Builtin::Max => "fmax",
        other => other.name(),
    }
}
