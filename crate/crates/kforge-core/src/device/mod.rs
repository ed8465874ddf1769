//! Simulated device global memory: a single managed heap sub-allocated for
//! stack frames and array buffers, plus a byte-accurate transfer ledger.
//!
//! The real driver is out of scope; pinned host memory is modeled as a
//! metadata tag on the allocation and transfers are memcpys timed with a
//! monotonic clock.

use crate::lang::{AstExpr, AstStmt, ExprKind, StmtKind, Type, ValidatedKernel};
use serde::{Deserialize, Serialize};
use std::time::Instant;

pub const DEFAULT_ALIGNMENT: usize = 64;
pub const DEFAULT_HEAP_CAPACITY: usize = 256 * 1024 * 1024;
/// Reserved header slots below the first user slot of a stack frame.
pub const FRAME_RESERVED_SLOTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeviceError {
    #[error("device heap already allocated for this session")]
    DoubleAllocation,
    #[error("device heap capacity must be nonzero")]
    CapacityZero,
    #[error("no device heap allocated")]
    NoHeap,
    #[error("out of device memory: need {need} bytes, {free} free")]
    OutOfDeviceMemory { need: usize, free: usize },
    #[error("copy-out of a read-only buffer `{0}` is refused")]
    ReadOnlyCopyOut(String),
    #[error("host array `{host}` has {host_len} elements, buffer records {buf_len}")]
    LengthMismatch {
        host: String,
        host_len: usize,
        buf_len: usize,
    },
    #[error("heap fault: {size} bytes at offset {offset}")]
    HeapFault { offset: u64, size: usize },
}

/// Buffer access classification, assigned before any transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccessClass {
    ReadOnly,
    WriteOnly,
    ReadWrite,
}

impl std::fmt::Display for AccessClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AccessClass::ReadOnly => write!(f, "read-only"),
            AccessClass::WriteOnly => write!(f, "write-only"),
            AccessClass::ReadWrite => write!(f, "read-write"),
        }
    }
}

/// Host-side array data, the transfer unit between host and device.
#[derive(Debug, Clone, PartialEq)]
pub enum HostArray {
    F32(Vec<f32>),
    I32(Vec<i32>),
}

impl HostArray {
    pub fn len(&self) -> usize {
        match self {
            HostArray::F32(v) => v.len(),
            HostArray::I32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn elem_size(&self) -> usize {
        4
    }

    pub fn data_bytes(&self) -> usize {
        self.len() * self.elem_size()
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data_bytes());
        match self {
            HostArray::F32(v) => {
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            HostArray::I32(v) => {
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn fill_from_le_bytes(&mut self, bytes: &[u8]) {
        match self {
            HostArray::F32(v) => {
                for (i, chunk) in bytes.chunks_exact(4).enumerate().take(v.len()) {
                    v[i] = f32::from_le_bytes(chunk.try_into().unwrap());
                }
            }
            HostArray::I32(v) => {
                for (i, chunk) in bytes.chunks_exact(4).enumerate().take(v.len()) {
                    v[i] = i32::from_le_bytes(chunk.try_into().unwrap());
                }
            }
        }
    }
}

/// Scalar kernel argument; widened to 8 bytes in its frame slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarValue {
    I32(i32),
    F32(f32),
}

impl ScalarValue {
    pub fn widen(self) -> u64 {
        match self {
            ScalarValue::I32(v) => (v as i64) as u64,
            ScalarValue::F32(v) => v.to_bits() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BufferRecord {
    pub host_id: String,
    pub device_offset: u64,
    pub length: usize,
    pub elem_size: usize,
    pub access: AccessClass,
    pub resident: bool,
}

impl BufferRecord {
    /// Bytes occupied on device: 8-byte length header plus the elements.
    pub fn device_bytes(&self) -> usize {
        8 + self.length * self.elem_size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackFrame {
    pub frame_offset: u64,
    pub slots: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    H2D,
    D2H,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::H2D => write!(f, "H2D"),
            Direction::D2H => write!(f, "D2H"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferEntry {
    pub direction: Direction,
    pub host_id: String,
    pub bytes: u64,
    pub t_start_ns: u64,
    pub t_end_ns: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransferLedger {
    entries: Vec<TransferEntry>,
}

impl TransferLedger {
    pub fn entries(&self) -> &[TransferEntry] {
        &self.entries
    }

    pub fn total_bytes(&self, direction: Direction) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.direction == direction)
            .map(|e| e.bytes)
            .sum()
    }

    /// Sum of transfer durations for one direction, in nanoseconds.
    pub fn total_ns(&self, direction: Direction) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.direction == direction)
            .map(|e| e.t_end_ns - e.t_start_ns)
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("direction,host_id,bytes,t_start_ns,t_end_ns\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.direction, e.host_id, e.bytes, e.t_start_ns, e.t_end_ns
            ));
        }
        out
    }
}

/// One kernel-execution session: owns the single heap allocation and the
/// transfer ledger. Confined to one owner; transferable between threads.
#[derive(Debug)]
pub struct DeviceSession {
    started: Instant,
    heap: Option<DeviceHeap>,
    allocation_count: u32,
    ledger: TransferLedger,
}

impl Default for DeviceSession {
    fn default() -> Self {
        Self::new()
    }
}

impl DeviceSession {
    pub fn new() -> Self {
        DeviceSession {
            started: Instant::now(),
            heap: None,
            allocation_count: 0,
            ledger: TransferLedger::default(),
        }
    }

    pub fn now_ns(&self) -> u64 {
        self.started.elapsed().as_nanos() as u64
    }

    pub fn allocation_count(&self) -> u32 {
        self.allocation_count
    }

    pub fn ledger(&self) -> &TransferLedger {
        &self.ledger
    }

    /// The one-and-only heap allocation of this session; zero-initialized and
    /// tagged as pinned-equivalent memory.
    pub fn allocate_heap(&mut self, capacity: usize) -> Result<(), DeviceError> {
        if self.allocation_count > 0 {
            return Err(DeviceError::DoubleAllocation);
        }
        if capacity == 0 {
            return Err(DeviceError::CapacityZero);
        }
        self.allocation_count = 1;
        self.heap = Some(DeviceHeap::new(capacity));
        Ok(())
    }

    pub fn heap(&self) -> Result<&DeviceHeap, DeviceError> {
        self.heap.as_ref().ok_or(DeviceError::NoHeap)
    }

    pub fn heap_mut(&mut self) -> Result<&mut DeviceHeap, DeviceError> {
        self.heap.as_mut().ok_or(DeviceError::NoHeap)
    }

    /// Copy a host array onto the device as `[u64 length][elements]` at a
    /// fresh aligned offset; appends an H2D ledger entry covering header and
    /// data bytes.
    pub fn copy_in(
        &mut self,
        host: &HostArray,
        host_id: &str,
        access: AccessClass,
    ) -> Result<BufferRecord, DeviceError> {
        let t_start = self.now_ns();
        let heap = self.heap.as_mut().ok_or(DeviceError::NoHeap)?;
        let bytes = 8 + host.data_bytes();
        let offset = heap.reserve(bytes)?;
        heap.storage[offset as usize..offset as usize + 8]
            .copy_from_slice(&(host.len() as u64).to_le_bytes());
        heap.storage[offset as usize + 8..offset as usize + bytes]
            .copy_from_slice(&host.to_le_bytes());
        heap.regions.push(Region {
            offset,
            size: bytes,
        });
        let t_end = self.now_ns();
        self.ledger.entries.push(TransferEntry {
            direction: Direction::H2D,
            host_id: host_id.to_string(),
            bytes: bytes as u64,
            t_start_ns: t_start,
            t_end_ns: t_end,
        });
        Ok(BufferRecord {
            host_id: host_id.to_string(),
            device_offset: offset,
            length: host.len(),
            elem_size: host.elem_size(),
            access,
            resident: true,
        })
    }

    /// Copy buffer elements back into the host array (no header on the way
    /// out); refused for read-only buffers.
    pub fn copy_out(
        &mut self,
        record: &BufferRecord,
        host: &mut HostArray,
    ) -> Result<(), DeviceError> {
        if record.access == AccessClass::ReadOnly {
            return Err(DeviceError::ReadOnlyCopyOut(record.host_id.clone()));
        }
        if record.length != host.len() {
            return Err(DeviceError::LengthMismatch {
                host: record.host_id.clone(),
                host_len: host.len(),
                buf_len: record.length,
            });
        }
        let t_start = self.now_ns();
        let heap = self.heap.as_ref().ok_or(DeviceError::NoHeap)?;
        let data_start = record.device_offset as usize + 8;
        let data_len = record.length * record.elem_size;
        host.fill_from_le_bytes(&heap.storage[data_start..data_start + data_len]);
        let t_end = self.now_ns();
        self.ledger.entries.push(TransferEntry {
            direction: Direction::D2H,
            host_id: record.host_id.clone(),
            bytes: data_len as u64,
            t_start_ns: t_start,
            t_end_ns: t_end,
        });
        Ok(())
    }

    /// Write the stack frame into the heap: six zeroed header slots, then one
    /// slot per argument (buffer base offset or widened scalar). Frame bytes
    /// count as H2D traffic.
    pub fn build_frame(&mut self, args: &[FrameArg]) -> Result<StackFrame, DeviceError> {
        let t_start = self.now_ns();
        let heap = self.heap.as_mut().ok_or(DeviceError::NoHeap)?;
        let mut slots = vec![0u64; FRAME_RESERVED_SLOTS + args.len()];
        for (i, arg) in args.iter().enumerate() {
            slots[FRAME_RESERVED_SLOTS + i] = match arg {
                FrameArg::Buffer(offset) => *offset,
                FrameArg::Scalar(s) => s.widen(),
            };
        }
        let bytes = slots.len() * 8;
        let offset = heap.reserve(bytes)?;
        for (i, slot) in slots.iter().enumerate() {
            let at = offset as usize + i * 8;
            heap.storage[at..at + 8].copy_from_slice(&slot.to_le_bytes());
        }
        heap.regions.push(Region {
            offset,
            size: bytes,
        });
        let t_end = self.now_ns();
        self.ledger.entries.push(TransferEntry {
            direction: Direction::H2D,
            host_id: "<frame>".to_string(),
            bytes: bytes as u64,
            t_start_ns: t_start,
            t_end_ns: t_end,
        });
        Ok(StackFrame {
            frame_offset: offset,
            slots,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Region {
    offset: u64,
    size: usize,
}

/// The managed device heap: one zero-initialized allocation, bump
/// sub-allocation at 64-byte alignment, and live-region tracking so the
/// emulator can fault wild accesses.
#[derive(Debug)]
pub struct DeviceHeap {
    storage: Vec<u8>,
    bump: usize,
    alignment: usize,
    regions: Vec<Region>,
    /// Records the CL_MEM_ALLOC_HOST_PTR-equivalent request; metadata only.
    pub pinned: bool,
}

impl DeviceHeap {
    fn new(capacity: usize) -> Self {
        DeviceHeap {
            storage: vec![0u8; capacity],
            bump: 0,
            alignment: DEFAULT_ALIGNMENT,
            regions: Vec::new(),
            pinned: true,
        }
    }

    pub fn capacity(&self) -> usize {
        self.storage.len()
    }

    pub fn bump_offset(&self) -> usize {
        self.bump
    }

    fn reserve(&mut self, bytes: usize) -> Result<u64, DeviceError> {
        let aligned = self.bump;
        debug_assert_eq!(aligned % self.alignment, 0);
        if aligned + bytes > self.storage.len() {
            return Err(DeviceError::OutOfDeviceMemory {
                need: bytes,
                free: self.storage.len().saturating_sub(aligned),
            });
        }
        let next = aligned + bytes;
        self.bump = next.div_ceil(self.alignment) * self.alignment;
        Ok(aligned as u64)
    }

    /// True when `[offset, offset+size)` lies inside one live region.
    pub fn check_access(&self, offset: u64, size: usize) -> bool {
        if size == 0 {
            return true;
        }
        let end = match offset.checked_add(size as u64) {
            Some(e) => e,
            None => return false,
        };
        if end > self.storage.len() as u64 {
            return false;
        }
        self.regions
            .iter()
            .any(|r| offset >= r.offset && end <= r.offset + r.size as u64)
    }

    pub fn read(&self, offset: u64, size: usize) -> Result<&[u8], DeviceError> {
        if !self.check_access(offset, size) {
            return Err(DeviceError::HeapFault { offset, size });
        }
        Ok(&self.storage[offset as usize..offset as usize + size])
    }

    pub fn write(&mut self, offset: u64, bytes: &[u8]) -> Result<(), DeviceError> {
        if !self.check_access(offset, bytes.len()) {
            return Err(DeviceError::HeapFault {
                offset,
                size: bytes.len(),
            });
        }
        self.storage[offset as usize..offset as usize + bytes.len()].copy_from_slice(bytes);
        Ok(())
    }

    pub fn read_u64(&self, offset: u64) -> Result<u64, DeviceError> {
        Ok(u64::from_le_bytes(self.read(offset, 8)?.try_into().unwrap()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameArg {
    Buffer(u64),
    Scalar(ScalarValue),
}

/// Static read/write classification of a kernel's array parameters, in
/// declaration order. Loads-only arrays are read-only and never copied back;
/// stores-only arrays are write-only; both means read-write; untouched
/// arrays stay read-only (they are still copied in).
pub fn classify_accesses(vk: &ValidatedKernel) -> Vec<(String, AccessClass)> {
    let mut loads: Vec<&str> = Vec::new();
    let mut stores: Vec<&str> = Vec::new();

    fn walk_expr<'a>(e: &'a AstExpr, loads: &mut Vec<&'a str>) {
        match &e.kind {
            ExprKind::ArrayLoad { array, index } => {
                loads.push(array);
                walk_expr(index, loads);
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                walk_expr(lhs, loads);
                walk_expr(rhs, loads);
            }
            ExprKind::Unary { operand, .. } | ExprKind::Convert { operand, .. } => {
                walk_expr(operand, loads)
            }
            ExprKind::Call { args, .. } => {
                for a in args {
                    walk_expr(a, loads);
                }
            }
            _ => {}
        }
    }

    fn walk_stmt<'a>(s: &'a AstStmt, loads: &mut Vec<&'a str>, stores: &mut Vec<&'a str>) {
        match &s.kind {
            StmtKind::VarDecl { init, .. } => walk_expr(init, loads),
            StmtKind::Assign { value, .. } => walk_expr(value, loads),
            StmtKind::ArrayStore {
                array,
                index,
                value,
            } => {
                stores.push(array);
                walk_expr(index, loads);
                walk_expr(value, loads);
            }
            StmtKind::ForRange { lo, hi, body, .. } => {
                walk_expr(lo, loads);
                walk_expr(hi, loads);
                for b in body {
                    walk_stmt(b, loads, stores);
                }
            }
            StmtKind::While { cond, body } => {
                walk_expr(cond, loads);
                for b in body {
                    walk_stmt(b, loads, stores);
                }
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                walk_expr(cond, loads);
                for b in then_body.iter().chain(else_body) {
                    walk_stmt(b, loads, stores);
                }
            }
            StmtKind::Block(body) => {
                for b in body {
                    walk_stmt(b, loads, stores);
                }
            }
        }
    }

    for s in &vk.kernel.body {
        walk_stmt(s, &mut loads, &mut stores);
    }

    vk.kernel
        .params
        .iter()
        .filter(|p| matches!(p.ty, Type::Array(_)))
        .map(|p| {
            let name = p.name.as_str();
            let class = match (loads.contains(&name), stores.contains(&name)) {
                (true, true) => AccessClass::ReadWrite,
                (false, true) => AccessClass::WriteOnly,
                _ => AccessClass::ReadOnly,
            };
            (p.name.clone(), class)
        })
        .collect()
}
