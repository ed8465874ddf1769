//! Benchmark corpus: six kernels with size presets, seeded input generators
//! and reference-oracle wiring.

use super::inputs::SplitMix64;
use super::oracle;
use crate::device::{HostArray, ScalarValue};
use crate::lang::{parse, validate, ValidatedKernel};
use crate::runtime::Bindings;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

pub const NBODY_SOFTENING: f32 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenchSize {
    Small,
    Medium,
    Large,
}

impl BenchSize {
    pub fn as_str(&self) -> &'static str {
        match self {
            BenchSize::Small => "small",
            BenchSize::Medium => "medium",
            BenchSize::Large => "large",
        }
    }
}

impl FromStr for BenchSize {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "small" => Ok(BenchSize::Small),
            "medium" => Ok(BenchSize::Medium),
            "large" => Ok(BenchSize::Large),
            other => Err(format!("unknown size `{other}` (expected small|medium|large)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchmarkDef {
    pub name: &'static str,
    pub source: &'static str,
    /// Published array-length presets (small, medium, large).
    pub lengths: (u64, u64, u64),
    /// RenderTrack's presets are image side lengths; its arrays are side^2.
    pub length_is_side: bool,
    /// Comparison tolerance against the oracle (max relative error).
    pub tolerance: f64,
    /// True when the kernel uses no transcendentals and must match bitwise.
    pub bitwise: bool,
}

impl BenchmarkDef {
    pub fn preset(&self, size: BenchSize) -> u64 {
        match size {
            BenchSize::Small => self.lengths.0,
            BenchSize::Medium => self.lengths.1,
            BenchSize::Large => self.lengths.2,
        }
    }

    pub fn element_count(&self, size: BenchSize) -> usize {
        let v = self.preset(size);
        if self.length_is_side {
            (v * v) as usize
        } else {
            v as usize
        }
    }

    pub fn validated(&self) -> ValidatedKernel {
        let k = parse(self.source).expect("benchmark kernel parses");
        validate(k).expect("benchmark kernel validates")
    }

    /// Seeded inputs: one splitmix64 stream, arrays drawn in parameter order.
    pub fn generate_inputs(&self, size: BenchSize, seed: u64) -> Bindings {
        let n = self.element_count(size);
        let mut rng = SplitMix64::new(seed);
        let mut b = Bindings::default();
        match self.name {
            "vectoradd" => {
                b.push_array("a", HostArray::F32(rng.fill_f32(n, 1.0, 100.0)));
                b.push_array("b", HostArray::F32(rng.fill_f32(n, 1.0, 100.0)));
                b.push_array("c", HostArray::F32(vec![0.0; n]));
                b.push_scalar("n", ScalarValue::I32(n as i32));
            }
            "grayscale" => {
                b.push_array("pixels", HostArray::I32(rng.fill_i32(n, 0, 0xFF_FFFF)));
                b.push_array("gray", HostArray::I32(vec![0; n]));
                b.push_scalar("n", ScalarValue::I32(n as i32));
            }
            "blackscholes" => {
                b.push_array("rand", HostArray::F32(rng.fill_f32(n, 10.0, 100.0)));
                b.push_array("call", HostArray::F32(vec![0.0; n]));
                b.push_array("put", HostArray::F32(vec![0.0; n]));
                b.push_scalar("n", ScalarValue::I32(n as i32));
            }
            "rendertrack" => {
                b.push_array("status", HostArray::I32(rng.fill_i32(n, -5, 1)));
                b.push_array("out", HostArray::I32(vec![0; n]));
                b.push_scalar("n", ScalarValue::I32(n as i32));
            }
            "nbody" => {
                b.push_array("posx", HostArray::F32(rng.fill_f32(n, -10.0, 10.0)));
                b.push_array("posy", HostArray::F32(rng.fill_f32(n, -10.0, 10.0)));
                b.push_array("posz", HostArray::F32(rng.fill_f32(n, -10.0, 10.0)));
                b.push_array("accx", HostArray::F32(vec![0.0; n]));
                b.push_array("accy", HostArray::F32(vec![0.0; n]));
                b.push_array("accz", HostArray::F32(vec![0.0; n]));
                b.push_scalar("eps", ScalarValue::F32(NBODY_SOFTENING));
                b.push_scalar("n", ScalarValue::I32(n as i32));
            }
            "dft" => {
                b.push_array("inreal", HostArray::F32(rng.fill_f32(n, -1.0, 1.0)));
                b.push_array("inimag", HostArray::F32(rng.fill_f32(n, -1.0, 1.0)));
                b.push_array("outreal", HostArray::F32(vec![0.0; n]));
                b.push_array("outimag", HostArray::F32(vec![0.0; n]));
                b.push_scalar("n", ScalarValue::I32(n as i32));
            }
            other => unreachable!("unknown benchmark {other}"),
        }
        b
    }

    /// Oracle outputs for the given inputs, keyed by output parameter name.
    pub fn reference(&self, bindings: &Bindings) -> Vec<(String, HostArray)> {
        let f32s = |name: &str| match bindings.array(name) {
            Some(HostArray::F32(v)) => v.clone(),
            _ => unreachable!("benchmark binding {name}"),
        };
        let i32s = |name: &str| match bindings.array(name) {
            Some(HostArray::I32(v)) => v.clone(),
            _ => unreachable!("benchmark binding {name}"),
        };
        match self.name {
            "vectoradd" => {
                let c = oracle::vectoradd(&f32s("a"), &f32s("b"));
                vec![("c".into(), HostArray::F32(c))]
            }
            "grayscale" => {
                let gray = oracle::grayscale(&i32s("pixels"));
                vec![("gray".into(), HostArray::I32(gray))]
            }
            "blackscholes" => {
                let (call, put) = oracle::blackscholes(&f32s("rand"));
                vec![
                    ("call".into(), HostArray::F32(call)),
                    ("put".into(), HostArray::F32(put)),
                ]
            }
            "rendertrack" => {
                let out = oracle::rendertrack(&i32s("status"));
                vec![("out".into(), HostArray::I32(out))]
            }
            "nbody" => {
                let (ax, ay, az) = oracle::nbody(
                    &f32s("posx"),
                    &f32s("posy"),
                    &f32s("posz"),
                    NBODY_SOFTENING,
                );
                vec![
                    ("accx".into(), HostArray::F32(ax)),
                    ("accy".into(), HostArray::F32(ay)),
                    ("accz".into(), HostArray::F32(az)),
                ]
            }
            "dft" => {
                let (re, im) = oracle::dft(&f32s("inreal"), &f32s("inimag"));
                vec![
                    ("outreal".into(), HostArray::F32(re)),
                    ("outimag".into(), HostArray::F32(im)),
                ]
            }
            other => unreachable!("unknown benchmark {other}"),
        }
    }
}

/// The corpus, with the published per-size array lengths.
pub const BENCHMARKS: &[BenchmarkDef] = &[
    BenchmarkDef {
        name: "vectoradd",
        source: include_str!("../../benchmarks/vectoradd.tk"),
        lengths: (32768, 1048576, 67108864),
        length_is_side: false,
        tolerance: 0.0,
        bitwise: true,
    },
    BenchmarkDef {
        name: "grayscale",
        source: include_str!("../../benchmarks/grayscale.tk"),
        lengths: (32768, 1048576, 33554432),
        length_is_side: false,
        tolerance: 0.0,
        bitwise: true,
    },
    BenchmarkDef {
        name: "blackscholes",
        source: include_str!("../../benchmarks/blackscholes.tk"),
        lengths: (256, 1048576, 33554432),
        length_is_side: false,
        tolerance: 1e-4,
        bitwise: false,
    },
    BenchmarkDef {
        name: "rendertrack",
        source: include_str!("../../benchmarks/rendertrack.tk"),
        lengths: (64, 1024, 8192),
        length_is_side: true,
        tolerance: 0.0,
        bitwise: true,
    },
    BenchmarkDef {
        name: "nbody",
        source: include_str!("../../benchmarks/nbody.tk"),
        lengths: (256, 16384, 32768),
        length_is_side: false,
        tolerance: 1e-4,
        bitwise: false,
    },
    BenchmarkDef {
        name: "dft",
        source: include_str!("../../benchmarks/dft.tk"),
        lengths: (64, 65536, 262144),
        length_is_side: false,
        tolerance: 1e-4,
        bitwise: false,
    },
];

pub fn find(name: &str) -> Option<&'static BenchmarkDef> {
    BENCHMARKS.iter().find(|b| b.name == name)
}
