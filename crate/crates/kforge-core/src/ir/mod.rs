//! Graph IR: control-flow and data-flow edges over one node table, with the
//! FPGA-specific node kinds (NDRange, UnrollHint, GlobalID/GlobalSize).
//!
//! The graph is structured: loops stay explicit as LoopBegin/LoopEnd/LoopExit
//! triples rather than dissolving into an arbitrary CFG, so the specialization
//! passes are local rewrites. Value computations produced while lowering
//! statements are *fixed* (they appear in the control successor chain in
//! evaluation order); constants, parameters, phis and condition expression
//! trees float and are referenced through data edges only.

mod build;
mod dump;
mod verify;

pub use build::build;
pub use dump::dump;
pub use verify::{verify, VerificationReport, Violation};

use crate::lang::{BinOp, Builtin, ScalarType, Type};
use std::fmt;

/// Identity of an IR node. Numbering is stable: build assigns ids in AST
/// pre-order and passes extend monotonically, so golden dumps and cache keys
/// are reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Constant payload. f32 compares by bit pattern so folded NaN/negative-zero
/// values still give a total, hashable equality.
#[derive(Debug, Clone, Copy)]
pub enum ConstValue {
    I32(i32),
    F32(f32),
}

impl ConstValue {
    pub fn ty(self) -> ScalarType {
        match self {
            ConstValue::I32(_) => ScalarType::I32,
            ConstValue::F32(_) => ScalarType::F32,
        }
    }

    fn key(self) -> (u8, u32) {
        match self {
            ConstValue::I32(v) => (0, v as u32),
            ConstValue::F32(v) => (1, v.to_bits()),
        }
    }
}

impl PartialEq for ConstValue {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for ConstValue {}
impl std::hash::Hash for ConstValue {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl fmt::Display for ConstValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstValue::I32(v) => write!(f, "{v}"),
            ConstValue::F32(v) => write!(f, "{v:?}f"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnrollStrategy {
    /// Constant trip count within the full-unroll budget; emits `#pragma unroll`.
    Full,
    /// Dynamic trip count; emits `#pragma unroll N`.
    Factor(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Start,
    End,
    /// Kernel parameter, by declaration index.
    Param(u32),
    Const(ConstValue),
    LoopBegin,
    LoopEnd,
    LoopExit,
    /// inputs\[0\] is the owning LoopBegin or Merge; inputs\[1..\] the values,
    /// one per control predecessor of the owner.
    Phi,
    /// inputs\[0\] is the condition; successors are \[then, else\].
    If,
    Merge,
    BinOp(BinOp),
    Builtin(Builtin),
    Convert { from: ScalarType, to: ScalarType },
    /// inputs: \[array param, index\].
    ArrayLoad,
    /// inputs: \[array param, index, value\].
    ArrayStore,
    GlobalId(u8),
    GlobalSize(u8),
    NdRange(u32, u32, u32),
    UnrollHint(UnrollStrategy),
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Start => write!(f, "Start"),
            NodeKind::End => write!(f, "End"),
            NodeKind::Param(i) => write!(f, "Param({i})"),
            NodeKind::Const(c) => write!(f, "Const({c})"),
            NodeKind::LoopBegin => write!(f, "LoopBegin"),
            NodeKind::LoopEnd => write!(f, "LoopEnd"),
            NodeKind::LoopExit => write!(f, "LoopExit"),
            NodeKind::Phi => write!(f, "Phi"),
            NodeKind::If => write!(f, "If"),
            NodeKind::Merge => write!(f, "Merge"),
            NodeKind::BinOp(op) => write!(f, "BinOp({})", op.symbol()),
            NodeKind::Builtin(b) => write!(f, "Builtin({})", b.name()),
            NodeKind::Convert { from, to } => write!(f, "Convert({from}->{to})"),
            NodeKind::ArrayLoad => write!(f, "ArrayLoad"),
            NodeKind::ArrayStore => write!(f, "ArrayStore"),
            NodeKind::GlobalId(d) => write!(f, "GlobalID({d})"),
            NodeKind::GlobalSize(d) => write!(f, "GlobalSize({d})"),
            NodeKind::NdRange(x, y, z) => write!(f, "NDRange({x},{y},{z})"),
            NodeKind::UnrollHint(UnrollStrategy::Full) => write!(f, "UnrollHint(FULL)"),
            NodeKind::UnrollHint(UnrollStrategy::Factor(n)) => write!(f, "UnrollHint(FACTOR,{n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrNode {
    pub kind: NodeKind,
    /// Data operands ("black dashed arrows").
    pub inputs: Vec<NodeId>,
    /// Result type for value-producing nodes.
    pub ty: Option<Type>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    For,
    While,
}

/// Per-loop record kept alongside the node table.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopInfo {
    pub header: NodeId,
    pub end: NodeId,
    pub exit: NodeId,
    /// Induction phi for range loops.
    pub induction: Option<NodeId>,
    /// Upper-bound value node for range loops.
    pub bound: Option<NodeId>,
    pub parallel: bool,
    pub depth: u32,
    pub const_trips: Option<u64>,
    pub kind: LoopKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphParam {
    pub name: String,
    pub ty: Type,
    /// IR node for the parameter; `None` when the kernel never references it.
    pub node: Option<NodeId>,
}

/// Set when the outermost parallel loop has been flattened away.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlattenInfo {
    /// The surviving bounds condition (`gid < bound`), used for the emitted
    /// global-bounds guard.
    pub cond: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrGraph {
    pub kernel_name: String,
    nodes: Vec<Option<IrNode>>,
    /// Ordered control successors ("red arrows").
    succ: Vec<Vec<NodeId>>,
    pub params: Vec<GraphParam>,
    pub loop_table: Vec<LoopInfo>,
    pub flattened: Option<FlattenInfo>,
}

impl IrGraph {
    pub fn new(kernel_name: String) -> Self {
        IrGraph {
            kernel_name,
            nodes: Vec::new(),
            succ: Vec::new(),
            params: Vec::new(),
            loop_table: Vec::new(),
            flattened: None,
        }
    }

    pub fn add_node(&mut self, kind: NodeKind, inputs: Vec<NodeId>, ty: Option<Type>) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Some(IrNode { kind, inputs, ty }));
        self.succ.push(Vec::new());
        id
    }

    pub fn node(&self, id: NodeId) -> &IrNode {
        self.nodes[id.index()]
            .as_ref()
            .unwrap_or_else(|| panic!("use of deleted node {id}"))
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut IrNode {
        self.nodes[id.index()]
            .as_mut()
            .unwrap_or_else(|| panic!("use of deleted node {id}"))
    }

    pub fn try_node(&self, id: NodeId) -> Option<&IrNode> {
        self.nodes.get(id.index()).and_then(|n| n.as_ref())
    }

    pub fn is_live(&self, id: NodeId) -> bool {
        self.try_node(id).is_some()
    }

    /// Remove a node from the table. The caller is responsible for having
    /// unlinked it from chains and operand lists first.
    pub fn kill(&mut self, id: NodeId) {
        self.nodes[id.index()] = None;
        self.succ[id.index()].clear();
    }

    pub fn succ(&self, id: NodeId) -> &[NodeId] {
        &self.succ[id.index()]
    }

    pub fn set_succ(&mut self, id: NodeId, succ: Vec<NodeId>) {
        self.succ[id.index()] = succ;
    }

    pub fn succ_push(&mut self, id: NodeId, next: NodeId) {
        self.succ[id.index()].push(next);
    }

    /// Replace `old` with `new` in the successor list of `of`.
    pub fn replace_succ(&mut self, of: NodeId, old: NodeId, new: NodeId) {
        for s in &mut self.succ[of.index()] {
            if *s == old {
                *s = new;
            }
        }
    }

    /// Live node ids in id order.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_some())
            .map(|(i, _)| NodeId(i as u32))
    }

    pub fn live_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_some()).count()
    }

    pub fn next_id(&self) -> u32 {
        self.nodes.len() as u32
    }

    pub fn start(&self) -> NodeId {
        self.node_ids()
            .find(|id| self.node(*id).kind == NodeKind::Start)
            .expect("graph has no Start node")
    }

    pub fn find_kind(&self, kind: &NodeKind) -> Option<NodeId> {
        self.node_ids().find(|id| &self.node(*id).kind == kind)
    }

    pub fn nd_range(&self) -> Option<(NodeId, (u32, u32, u32))> {
        self.node_ids().find_map(|id| match self.node(id).kind {
            NodeKind::NdRange(x, y, z) => Some((id, (x, y, z))),
            _ => None,
        })
    }

    /// Control predecessors of `id`, in scan order; a node appears once per
    /// edge it holds to `id`.
    pub fn preds(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        for from in self.node_ids() {
            for s in self.succ(from) {
                if *s == id {
                    out.push(from);
                }
            }
        }
        out
    }

    /// Nodes whose operand lists mention `id`.
    pub fn users(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        for n in self.node_ids() {
            if self.node(n).inputs.contains(&id) {
                out.push(n);
            }
        }
        out
    }

    /// Rewrite every operand reference of `old` to `new`, including value
    /// references held by the loop table and flatten metadata.
    pub fn replace_uses(&mut self, old: NodeId, new: NodeId) {
        for slot in self.nodes.iter_mut().flatten() {
            for input in &mut slot.inputs {
                if *input == old {
                    *input = new;
                }
            }
        }
        for info in &mut self.loop_table {
            if info.bound == Some(old) {
                info.bound = Some(new);
            }
            if info.induction == Some(old) {
                info.induction = Some(new);
            }
        }
        if let Some(fl) = &mut self.flattened {
            if fl.cond == old {
                fl.cond = new;
            }
        }
    }

    /// Unlink a single-successor node from the control chain, connecting its
    /// predecessors to its successor. Does not kill the node.
    pub fn unlink_from_chain(&mut self, id: NodeId) {
        let succ = self.succ(id).to_vec();
        assert!(succ.len() <= 1, "unlink_from_chain on branching node {id}");
        let next = succ.first().copied();
        for p in self.preds(id) {
            if let Some(next) = next {
                self.replace_succ(p, id, next);
            } else {
                self.succ[p.index()].retain(|s| *s != id);
            }
        }
        self.succ[id.index()].clear();
    }

    /// Insert `node` into the chain directly before `before`.
    pub fn insert_before(&mut self, node: NodeId, before: NodeId, skip_pred: Option<NodeId>) {
        for p in self.preds(before) {
            if Some(p) == skip_pred {
                continue;
            }
            self.replace_succ(p, before, node);
        }
        self.set_succ(node, vec![before]);
    }

    /// Kinds that occupy a place in the control chain.
    pub fn is_control(&self, id: NodeId) -> bool {
        matches!(
            self.node(id).kind,
            NodeKind::Start
                | NodeKind::End
                | NodeKind::LoopBegin
                | NodeKind::LoopEnd
                | NodeKind::LoopExit
                | NodeKind::If
                | NodeKind::Merge
                | NodeKind::ArrayStore
                | NodeKind::NdRange
                | NodeKind::UnrollHint
        )
    }

    pub fn loop_for_header(&self, header: NodeId) -> Option<&LoopInfo> {
        self.loop_table.iter().find(|l| l.header == header)
    }

    /// Number of loops that contain `child` strictly inside `parent` is not
    /// tracked; innermost-ness is judged by whether a loop's body contains
    /// another loop header. Returns headers of loops nested directly or
    /// transitively inside the given loop.
    pub fn loops_inside(&self, info: &LoopInfo) -> Vec<NodeId> {
        let mut inside = Vec::new();
        let mut stack = vec![info.header];
        let mut seen = std::collections::HashSet::new();
        // Walk the control chain from the loop body until the matching end.
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            for &s in self.succ(n) {
                if s == info.header || s == info.exit {
                    continue;
                }
                if self.node(s).kind == NodeKind::LoopBegin && s != info.header {
                    inside.push(s);
                }
                stack.push(s);
            }
        }
        inside.sort();
        inside.dedup();
        inside
    }
}
