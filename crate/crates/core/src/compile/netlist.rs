//! Gate-level netlists with pipeline-stage annotations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::GateId;

pub const NETLIST_FORMAT: &str = "lgnkit-netlist";
pub const NETLIST_VERSION: u32 = 1;

/// Output `port` of node `node`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signal {
    pub node: u32,
    pub port: u16,
}

impl Signal {
    pub fn new(node: usize, port: usize) -> Self {
        Signal {
            node: node as u32,
            port: port as u16,
        }
    }

    pub fn of(node: usize) -> Self {
        Signal::new(node, 0)
    }
}

/// Node operations.
///
/// Adders expose `sum` on port 0 and `carry` on port 1. A compare-select node
/// takes `[a_value; width] ++ [a_index; index_bits] ++ [b_value; width] ++
/// [b_index; index_bits]` (each LSB first) and outputs the value and index of
/// `b` when `b > a`, otherwise of `a`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    Input { index: usize },
    Const { value: bool },
    Gate2 { gate: GateId, a: Signal, b: Signal },
    Passthrough { src: Signal, invert: bool },
    FullAdder { a: Signal, b: Signal, c: Signal },
    HalfAdder { a: Signal, b: Signal },
    CompareSelect { width: usize, index_bits: usize, inputs: Vec<Signal> },
}

impl Op {
    pub fn port_count(&self) -> usize {
        match self {
            Op::FullAdder { .. } | Op::HalfAdder { .. } => 2,
            Op::CompareSelect { width, index_bits, .. } => width + index_bits,
            _ => 1,
        }
    }

    pub fn inputs(&self) -> Vec<Signal> {
        match self {
            Op::Input { .. } | Op::Const { .. } => Vec::new(),
            Op::Gate2 { a, b, .. } => vec![*a, *b],
            Op::Passthrough { src, .. } => vec![*src],
            Op::FullAdder { a, b, c } => vec![*a, *b, *c],
            Op::HalfAdder { a, b } => vec![*a, *b],
            Op::CompareSelect { inputs, .. } => inputs.clone(),
        }
    }

    pub(crate) fn map_inputs(&self, mut f: impl FnMut(Signal) -> Signal) -> Op {
        match self {
            Op::Input { .. } | Op::Const { .. } => self.clone(),
            Op::Gate2 { gate, a, b } => Op::Gate2 { gate: *gate, a: f(*a), b: f(*b) },
            Op::Passthrough { src, invert } => Op::Passthrough { src: f(*src), invert: *invert },
            Op::FullAdder { a, b, c } => Op::FullAdder { a: f(*a), b: f(*b), c: f(*c) },
            Op::HalfAdder { a, b } => Op::HalfAdder { a: f(*a), b: f(*b) },
            Op::CompareSelect { width, index_bits, inputs } => Op::CompareSelect {
                width: *width,
                index_bits: *index_bits,
                inputs: inputs.iter().map(|&s| f(s)).collect(),
            },
        }
    }

    /// Decision-logic nodes: the ones mapped onto LUTs by the cover.
    pub fn is_logic(&self) -> bool {
        matches!(self, Op::Gate2 { .. } | Op::Passthrough { invert: true, .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub op: Op,
    pub stage: u32,
}

/// How many stages each section of the pipeline occupies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSections {
    pub input: u32,
    pub logic: u32,
    pub adder: u32,
    pub compare: u32,
    pub output: u32,
}

impl StageSections {
    pub fn total(&self) -> u32 {
        self.input + self.logic + self.adder + self.compare + self.output
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetlistMeta {
    pub layer_count: usize,
    pub group_size: usize,
    /// Bits per class sum.
    pub sum_width: usize,
    pub index_bits: usize,
    pub adder_depth: usize,
    pub compare_depth: usize,
    pub gates_before_prune: usize,
    pub gates_after_prune: usize,
    pub sections: StageSections,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Netlist {
    pub format: String,
    pub version: u32,
    pub input_bits: usize,
    pub class_count: usize,
    /// Nodes in topological order.
    pub nodes: Vec<Node>,
    /// Class index bits, LSB first.
    pub outputs: Vec<Signal>,
    pub stage_count: u32,
    pub meta: NetlistMeta,
}

/// Per-node offset of port 0 in a flat value vector.
pub fn port_offsets(nodes: &[Node]) -> (Vec<usize>, usize) {
    let mut offs = Vec::with_capacity(nodes.len());
    let mut total = 0;
    for n in nodes {
        offs.push(total);
        total += n.op.port_count();
    }
    (offs, total)
}

impl Netlist {
    pub fn empty(input_bits: usize, class_count: usize) -> Self {
        Netlist {
            format: NETLIST_FORMAT.to_string(),
            version: NETLIST_VERSION,
            input_bits,
            class_count,
            nodes: Vec::new(),
            outputs: Vec::new(),
            stage_count: 1,
            meta: NetlistMeta::default(),
        }
    }

    pub fn push(&mut self, op: Op, stage: u32) -> usize {
        self.nodes.push(Node { op, stage });
        self.nodes.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn count(&self, pred: impl Fn(&Op) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(&n.op)).count()
    }

    pub fn gate_count(&self) -> usize {
        self.count(|op| matches!(op, Op::Gate2 { .. }))
    }

    pub fn logic_count(&self) -> usize {
        self.count(Op::is_logic)
    }

    pub fn full_adder_count(&self) -> usize {
        self.count(|op| matches!(op, Op::FullAdder { .. }))
    }

    pub fn half_adder_count(&self) -> usize {
        self.count(|op| matches!(op, Op::HalfAdder { .. }))
    }

    pub fn compare_count(&self) -> usize {
        self.count(|op| matches!(op, Op::CompareSelect { .. }))
    }

    /// Checks ordering, port ranges, stage monotonicity and output widths.
    pub fn validate(&self) -> Result<()> {
        if self.stage_count == 0 {
            return Err(Error::Internal("netlist without stages".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.stage >= self.stage_count {
                return Err(Error::Internal(format!("node {i} in stage {} of {}", n.stage, self.stage_count)));
            }
            match &n.op {
                Op::Input { index } if *index >= self.input_bits => {
                    return Err(Error::Internal(format!("node {i} reads input {index}")));
                }
                Op::CompareSelect { width, index_bits, inputs } if inputs.len() != 2 * (width + index_bits) => {
                    return Err(Error::Internal(format!("node {i} has {} compare inputs", inputs.len())));
                }
                _ => {}
            }
            for s in n.op.inputs() {
                self.check_signal(s, Some(i))?;
                if self.nodes[s.node as usize].stage > n.stage {
                    return Err(Error::Internal(format!("edge {} -> {i} goes back in stage", s.node)));
                }
            }
        }
        for &s in &self.outputs {
            self.check_signal(s, None)?;
        }
        Ok(())
    }

    fn check_signal(&self, s: Signal, consumer: Option<usize>) -> Result<()> {
        let src = s.node as usize;
        if consumer.is_some_and(|c| src >= c) || src >= self.nodes.len() {
            return Err(Error::Internal(format!("signal from node {src} is not topologically earlier")));
        }
        if s.port as usize >= self.nodes[src].op.port_count() {
            return Err(Error::Internal(format!("node {src} has no port {}", s.port)));
        }
        Ok(())
    }

    /// Evaluates 64 lanes; `inputs` holds one word per primary input.
    /// Returns every node port's value, flattened by [`port_offsets`].
    pub fn eval_lanes(&self, inputs: &[u64]) -> Vec<u64> {
        let (offs, total) = port_offsets(&self.nodes);
        let mut v = vec![0u64; total];
        for i in 0..self.nodes.len() {
            self.eval_node(i, &offs, inputs, &mut v);
        }
        v
    }

    /// Evaluates node `i` in place, reading its inputs from `v`.
    pub(crate) fn eval_node(&self, i: usize, offs: &[usize], inputs: &[u64], v: &mut [u64]) {
        let at = |v: &[u64], s: Signal| v[offs[s.node as usize] + s.port as usize];
        let o = offs[i];
        match &self.nodes[i].op {
            Op::Input { index } => v[o] = inputs[*index],
            Op::Const { value } => v[o] = if *value { !0 } else { 0 },
            Op::Gate2 { gate, a, b } => v[o] = gate.eval_word(at(v, *a), at(v, *b)),
            Op::Passthrough { src, invert } => {
                let x = at(v, *src);
                v[o] = if *invert { !x } else { x };
            }
            Op::FullAdder { a, b, c } => {
                let (a, b, c) = (at(v, *a), at(v, *b), at(v, *c));
                v[o] = a ^ b ^ c;
                v[o + 1] = (a & b) | (c & (a ^ b));
            }
            Op::HalfAdder { a, b } => {
                let (a, b) = (at(v, *a), at(v, *b));
                v[o] = a ^ b;
                v[o + 1] = a & b;
            }
            Op::CompareSelect { width, index_bits, inputs } => {
                let k = width + index_bits;
                let av: Vec<u64> = inputs[..k].iter().map(|&s| at(v, s)).collect();
                let bv: Vec<u64> = inputs[k..].iter().map(|&s| at(v, s)).collect();
                let sel = greater_lanes(&bv[..*width], &av[..*width]);
                for p in 0..k {
                    v[o + p] = (sel & bv[p]) | (!sel & av[p]);
                }
            }
        }
    }

    /// Class index for each of the 64 lanes given full port values.
    pub fn output_lanes(&self, values: &[u64]) -> [usize; 64] {
        let (offs, _) = port_offsets(&self.nodes);
        let mut out = [0usize; 64];
        for (bit, s) in self.outputs.iter().enumerate() {
            let w = values[offs[s.node as usize] + s.port as usize];
            for (lane, o) in out.iter_mut().enumerate() {
                *o |= (((w >> lane) & 1) as usize) << bit;
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let nl: Netlist = serde_json::from_str(text)?;
        if nl.format != NETLIST_FORMAT || nl.version != NETLIST_VERSION {
            return Err(Error::validation(format!("unsupported netlist {} v{}", nl.format, nl.version)));
        }
        nl.validate()?;
        Ok(nl)
    }

    /// Number of consumers of every node.
    pub fn fanouts(&self) -> Vec<Vec<u32>> {
        let mut f = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for s in n.op.inputs() {
                f[s.node as usize].push(i as u32);
            }
        }
        f
    }

    /// Signals registered at the end of each stage: produced in or before
    /// stage `s` and still needed after it. Constants are never registered.
    pub fn boundary_signals(&self) -> Vec<Vec<Signal>> {
        let (offs, total) = port_offsets(&self.nodes);
        let mut last_use = vec![None::<u32>; total];
        for n in &self.nodes {
            for s in n.op.inputs() {
                let k = offs[s.node as usize] + s.port as usize;
                last_use[k] = Some(last_use[k].map_or(n.stage, |u| u.max(n.stage)));
            }
        }
        for s in &self.outputs {
            last_use[offs[s.node as usize] + s.port as usize] = Some(self.stage_count);
        }
        let mut out = vec![Vec::new(); self.stage_count as usize];
        for (i, n) in self.nodes.iter().enumerate() {
            if matches!(n.op, Op::Const { .. }) {
                continue;
            }
            for p in 0..n.op.port_count() {
                if let Some(u) = last_use[offs[i] + p] {
                    for b in n.stage..u.min(self.stage_count) {
                        out[b as usize].push(Signal::new(i, p));
                    }
                }
            }
        }
        out
    }

    /// Width of every stage boundary.
    pub fn boundary_widths(&self) -> Vec<usize> {
        self.boundary_signals().iter().map(Vec::len).collect()
    }

    /// Total pipeline flip-flops.
    pub fn flip_flops(&self) -> usize {
        self.boundary_widths().iter().sum()
    }
}

/// Lane-wise `x > y` for LSB-first unsigned words.
pub(crate) fn greater_lanes(x: &[u64], y: &[u64]) -> u64 {
    let mut gt = 0u64;
    let mut eq = !0u64;
    for i in (0..x.len()).rev() {
        gt |= eq & x[i] & !y[i];
        eq &= !(x[i] ^ y[i]);
    }
    gt
}
