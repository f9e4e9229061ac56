//! Constant propagation, unary-gate collapsing and dead-node removal.

use super::netlist::{Netlist, Node, Op, Signal};
use crate::gate::GateId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Val {
    C(bool),
    S(Signal),
}

struct Pruner<'a> {
    src: &'a Netlist,
    out: Vec<Node>,
    /// for inverter nodes in `out`: the signal they invert
    inverts: Vec<Option<Signal>>,
    consts: [Option<u32>; 2],
}

impl Pruner<'_> {
    fn emit(&mut self, op: Op, stage: u32) -> usize {
        let inv = match op {
            Op::Passthrough { src, invert: true } => Some(src),
            _ => None,
        };
        self.out.push(Node { op, stage });
        self.inverts.push(inv);
        self.out.len() - 1
    }

    fn sig(&mut self, v: Val) -> Signal {
        match v {
            Val::S(s) => s,
            Val::C(b) => {
                let k = b as usize;
                match self.consts[k] {
                    Some(id) => Signal::of(id as usize),
                    None => {
                        let id = self.emit(Op::Const { value: b }, 0);
                        self.consts[k] = Some(id as u32);
                        Signal::of(id)
                    }
                }
            }
        }
    }

    fn inverted_source(&self, s: Signal) -> Option<Signal> {
        self.inverts[s.node as usize]
    }

    /// `!v`, reusing an existing inverter's source when possible.
    fn not(&mut self, v: Val, stage: u32) -> Val {
        match v {
            Val::C(b) => Val::C(!b),
            Val::S(s) => match self.inverted_source(s) {
                Some(x) => Val::S(x),
                None => Val::S(Signal::of(self.emit(Op::Passthrough { src: s, invert: true }, stage))),
            },
        }
    }

    /// Applies a one-input function given by its values at 0 and 1.
    fn unary(&mut self, f0: bool, f1: bool, x: Val, stage: u32) -> Val {
        match (f0, f1) {
            (false, false) => Val::C(false),
            (true, true) => Val::C(true),
            (false, true) => x,
            (true, false) => self.not(x, stage),
        }
    }

    fn gate(&mut self, mut g: GateId, a: Val, b: Val, stage: u32) -> Val {
        let mut a = a;
        let mut b = b;
        if let Val::S(s) = a {
            if let Some(x) = self.inverted_source(s) {
                a = Val::S(x);
                g = g.with_a_inverted();
            }
        }
        if let Val::S(s) = b {
            if let Some(x) = self.inverted_source(s) {
                b = Val::S(x);
                g = g.with_b_inverted();
            }
        }
        match (a, b) {
            (Val::C(x), Val::C(y)) => Val::C(g.eval(x, y)),
            (Val::C(x), y) => self.unary(g.eval(x, false), g.eval(x, true), y, stage),
            (x, Val::C(y)) => self.unary(g.eval(false, y), g.eval(true, y), x, stage),
            (Val::S(sa), Val::S(sb)) => {
                if sa == sb {
                    return self.unary(g.eval(false, false), g.eval(true, true), a, stage);
                }
                if g.is_constant() {
                    return Val::C(g.eval(false, false));
                }
                if !g.depends_on_b() {
                    return self.unary(g.eval(false, false), g.eval(true, false), a, stage);
                }
                if !g.depends_on_a() {
                    return self.unary(g.eval(false, false), g.eval(false, true), b, stage);
                }
                Val::S(Signal::of(self.emit(Op::Gate2 { gate: g, a: sa, b: sb }, stage)))
            }
        }
    }

    /// Sum and carry of `ins` when at most one input is a signal, or two equal ones.
    fn adder(&mut self, ins: &[Val], stage: u32) -> (Val, Val) {
        let k = ins.iter().filter(|v| **v == Val::C(true)).count();
        let sigs: Vec<Signal> = ins
            .iter()
            .filter_map(|v| match v {
                Val::S(s) => Some(*s),
                Val::C(_) => None,
            })
            .collect();
        let full = ins.len() == 3;
        match sigs.len() {
            0 => (Val::C(k % 2 == 1), Val::C(k >= 2)),
            1 => {
                let x = Val::S(sigs[0]);
                match k {
                    0 => (x, Val::C(false)),
                    1 => (self.not(x, stage), x),
                    _ => (x, Val::C(true)),
                }
            }
            2 if sigs[0] == sigs[1] => {
                // 2x + k
                (Val::C(k == 1), Val::S(sigs[0]))
            }
            2 if full && k == 0 => {
                let id = self.emit(Op::HalfAdder { a: sigs[0], b: sigs[1] }, stage);
                (Val::S(Signal::new(id, 0)), Val::S(Signal::new(id, 1)))
            }
            3 if sigs[0] == sigs[1] || sigs[0] == sigs[2] || sigs[1] == sigs[2] => {
                let (x, y) = if sigs[0] == sigs[1] {
                    (sigs[0], sigs[2])
                } else if sigs[0] == sigs[2] {
                    (sigs[0], sigs[1])
                } else {
                    (sigs[1], sigs[0])
                };
                // 2x + y
                (Val::S(y), Val::S(x))
            }
            _ => {
                let a: Vec<Signal> = ins.iter().map(|&v| self.sig(v)).collect();
                let op = if full {
                    Op::FullAdder { a: a[0], b: a[1], c: a[2] }
                } else {
                    Op::HalfAdder { a: a[0], b: a[1] }
                };
                let id = self.emit(op, stage);
                (Val::S(Signal::new(id, 0)), Val::S(Signal::new(id, 1)))
            }
        }
    }
}

/// Simplifies `nl` without changing any output. The node count never grows.
pub fn prune(nl: &Netlist) -> Netlist {
    let mut p = Pruner {
        src: nl,
        out: Vec::with_capacity(nl.nodes.len()),
        inverts: Vec::with_capacity(nl.nodes.len()),
        consts: [None, None],
    };
    let mut map: Vec<Vec<Val>> = Vec::with_capacity(nl.nodes.len());
    for node in &p.src.nodes {
        let get = |s: Signal, map: &Vec<Vec<Val>>| map[s.node as usize][s.port as usize];
        let stage = node.stage;
        let vals = match &node.op {
            Op::Const { value } => vec![Val::C(*value)],
            Op::Input { .. } => vec![Val::S(Signal::of(p.emit(node.op.clone(), stage)))],
            Op::Gate2 { gate, a, b } => {
                let (a, b) = (get(*a, &map), get(*b, &map));
                vec![p.gate(*gate, a, b, stage)]
            }
            Op::Passthrough { src, invert } => {
                let x = get(*src, &map);
                vec![if *invert { p.not(x, stage) } else { x }]
            }
            Op::FullAdder { a, b, c } => {
                let ins = [get(*a, &map), get(*b, &map), get(*c, &map)];
                let (s, c) = p.adder(&ins, stage);
                vec![s, c]
            }
            Op::HalfAdder { a, b } => {
                let ins = [get(*a, &map), get(*b, &map)];
                let (s, c) = p.adder(&ins, stage);
                vec![s, c]
            }
            Op::CompareSelect { width, index_bits, inputs } => {
                let k = width + index_bits;
                let ins: Vec<Val> = inputs.iter().map(|&s| get(s, &map)).collect();
                let (av, bv) = (&ins[..*width], &ins[k..k + width]);
                let decided = if av == bv {
                    Some(false)
                } else {
                    let bits = |vs: &[Val]| -> Option<Vec<bool>> {
                        vs.iter()
                            .map(|v| match v {
                                Val::C(b) => Some(*b),
                                Val::S(_) => None,
                            })
                            .collect()
                    };
                    match (bits(av), bits(bv)) {
                        (Some(x), Some(y)) => Some(greater(&y, &x)),
                        _ => None,
                    }
                };
                match decided {
                    Some(false) => ins[..k].to_vec(),
                    Some(true) => ins[k..].to_vec(),
                    None => {
                        let sigs: Vec<Signal> = ins.iter().map(|&v| p.sig(v)).collect();
                        let id = p.emit(
                            Op::CompareSelect {
                                width: *width,
                                index_bits: *index_bits,
                                inputs: sigs,
                            },
                            stage,
                        );
                        (0..k).map(|q| Val::S(Signal::new(id, q))).collect()
                    }
                }
            }
        };
        map.push(vals);
    }
    let outputs: Vec<Signal> = nl
        .outputs
        .iter()
        .map(|s| map[s.node as usize][s.port as usize])
        .collect::<Vec<_>>()
        .into_iter()
        .map(|v| p.sig(v))
        .collect();
    let (nodes, outputs) = remove_dead(p.out, outputs);
    let mut result = Netlist {
        nodes,
        outputs,
        ..nl.clone()
    };
    result.meta.gates_after_prune = result.logic_count();
    if result.nodes.len() > nl.nodes.len() {
        // constants materialized for an already minimal netlist
        return nl.clone();
    }
    result
}

fn greater(x: &[bool], y: &[bool]) -> bool {
    for i in (0..x.len()).rev() {
        if x[i] != y[i] {
            return x[i];
        }
    }
    false
}

/// Drops nodes that no output depends on and renumbers the rest.
pub(crate) fn remove_dead(nodes: Vec<Node>, outputs: Vec<Signal>) -> (Vec<Node>, Vec<Signal>) {
    let mut live = vec![false; nodes.len()];
    for s in &outputs {
        live[s.node as usize] = true;
    }
    for i in (0..nodes.len()).rev() {
        if live[i] {
            for s in nodes[i].op.inputs() {
                live[s.node as usize] = true;
            }
        }
    }
    let mut remap = vec![u32::MAX; nodes.len()];
    let mut kept = Vec::with_capacity(nodes.len());
    for (i, n) in nodes.into_iter().enumerate() {
        if live[i] {
            remap[i] = kept.len() as u32;
            kept.push(n);
        }
    }
    let fix = |s: Signal| Signal {
        node: remap[s.node as usize],
        port: s.port,
    };
    for n in kept.iter_mut() {
        n.op = n.op.map_inputs(fix);
    }
    (kept, outputs.into_iter().map(fix).collect())
}
