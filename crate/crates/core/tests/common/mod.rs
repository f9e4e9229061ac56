#![allow(dead_code)]

use std::path::PathBuf;

use lgnkit::compile::{discretize, HardLgn};
use lgnkit::{ArchitectureSpec, SoftLgnF64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mnist_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-10k")
}

pub fn spec(input_bits: usize, width: usize, depth: usize, classes: usize, seed: u64) -> ArchitectureSpec {
    let mut s = ArchitectureSpec::baseline(input_bits, 1, width, depth, classes);
    s.wiring_seed = seed;
    s
}

/// A network with random wiring and random gates.
pub fn random_hard(spec: &ArchitectureSpec) -> HardLgn {
    discretize(&SoftLgnF64::init(spec).unwrap())
}

pub fn random_inputs(n: usize, bits: usize, seed: u64) -> Vec<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..bits).map(|_| rng.random_bool(0.5)).collect()).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

use lgnkit::compile::{Netlist, Op, Signal};
use lgnkit::GateId;

/// A random single-stage DAG using every node kind, `outputs` class-index bits wide.
pub fn random_dag(seed: u64, inputs: usize, ops: usize, outputs: usize) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nl = Netlist::empty(inputs, 1 << outputs);
    let mut sigs: Vec<Signal> = Vec::new();
    for c in [false, true] {
        sigs.push(Signal::of(nl.push(Op::Const { value: c }, 0)));
    }
    for i in 0..inputs {
        sigs.push(Signal::of(nl.push(Op::Input { index: i }, 0)));
    }
    for _ in 0..ops {
        let pick = |rng: &mut ChaCha8Rng, sigs: &[Signal]| sigs[rng.random_range(0..sigs.len())];
        let op = match rng.random_range(0..10) {
            0..=5 => Op::Gate2 {
                gate: GateId::new(rng.random_range(0..16)).unwrap(),
                a: pick(&mut rng, &sigs),
                b: pick(&mut rng, &sigs),
            },
            6 => Op::Passthrough {
                src: pick(&mut rng, &sigs),
                invert: rng.random_bool(0.5),
            },
            7 => Op::FullAdder {
                a: pick(&mut rng, &sigs),
                b: pick(&mut rng, &sigs),
                c: pick(&mut rng, &sigs),
            },
            8 => Op::HalfAdder {
                a: pick(&mut rng, &sigs),
                b: pick(&mut rng, &sigs),
            },
            _ => Op::CompareSelect {
                width: 2,
                index_bits: 1,
                inputs: (0..6).map(|_| pick(&mut rng, &sigs)).collect(),
            },
        };
        let ports = op.port_count();
        let id = nl.push(op, 0);
        sigs.extend((0..ports).map(|p| Signal::new(id, p)));
    }
    let tail = sigs.len().saturating_sub(12);
    nl.outputs = (0..outputs).map(|_| sigs[rng.random_range(tail..sigs.len())]).collect();
    nl
}

pub fn random_lanes(words: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..words).map(|_| rng.random()).collect()
}
