//! Verilog-2001 emission and a reader for the emitted structural subset.
//!
//! Every node port becomes a wire `s<stage>_n<node>_<port>`. A value needed
//! after its stage is registered at each boundary it crosses; the copy held
//! after boundary `t` is `r<t>_n<node>_<port>`. Constants are never
//! registered. Two-input gates use one fixed expression per gate id and always
//! name input `a` before input `b`, so the reader recovers the id by
//! evaluating the expression's truth table.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::netlist::{Netlist, Node, Op, Signal};
use crate::error::{Error, Result};
use crate::gate::GateId;

const GATE_EXPR: [&str; 16] = [
    "1'b0 & A & B",
    "~(A | B)",
    "~A & B",
    "~A | (1'b0 & B)",
    "A & ~B",
    "(1'b0 & A) | ~B",
    "A ^ B",
    "~(A & B)",
    "A & B",
    "~(A ^ B)",
    "(1'b0 & A) | B",
    "~A | B",
    "A | (1'b0 & B)",
    "A | ~B",
    "A | B",
    "1'b1 | A | B",
];

fn gate_expr(g: GateId, a: &str, b: &str) -> String {
    GATE_EXPR[g.id() as usize].replace('A', "\u{0}").replace('B', b).replace('\u{0}', a)
}

struct Namer<'a> {
    nl: &'a Netlist,
}

impl Namer<'_> {
    fn wire(&self, s: Signal) -> String {
        format!("s{}_n{}_{}", self.nl.nodes[s.node as usize].stage, s.node, s.port)
    }

    /// How a consumer in `stage` refers to `s`.
    fn read(&self, s: Signal, stage: u32) -> String {
        let n = &self.nl.nodes[s.node as usize];
        if matches!(n.op, Op::Const { .. }) || n.stage == stage {
            self.wire(s)
        } else {
            format!("r{}_n{}_{}", stage - 1, s.node, s.port)
        }
    }

    fn concat(&self, sigs: &[Signal], stage: u32) -> String {
        let parts: Vec<String> = sigs.iter().rev().map(|&s| self.read(s, stage)).collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// Emits `nl` as one synthesizable module. Output is a pure function of the netlist.
pub fn emit_verilog(nl: &Netlist, module_name: &str) -> String {
    let nm = Namer { nl };
    let s_count = nl.stage_count;
    let ib = nl.outputs.len().max(1);
    let mut v = String::new();
    let _ = writeln!(v, "// lgnkit netlist: {} nodes, {} stages", nl.nodes.len(), s_count);
    let _ = writeln!(v, "module {module_name} (");
    let _ = writeln!(v, "    input wire clk,");
    let _ = writeln!(v, "    input wire rst,");
    let _ = writeln!(v, "    input wire in_valid,");
    let _ = writeln!(v, "    input wire [{}:0] in_bits,", nl.input_bits.max(1) - 1);
    let _ = writeln!(v, "    output wire out_valid,");
    let _ = writeln!(v, "    output wire [{}:0] out_class", ib - 1);
    let _ = writeln!(v, ");");
    let _ = writeln!(v);
    let _ = writeln!(v, "    reg [{}:0] valid_sr;", s_count - 1);
    let _ = writeln!(v, "    always @(posedge clk) begin");
    let _ = writeln!(v, "        if (rst)");
    let _ = writeln!(v, "            valid_sr <= {}'d0;", s_count);
    let _ = writeln!(v, "        else");
    if s_count == 1 {
        let _ = writeln!(v, "            valid_sr <= in_valid;");
    } else {
        let _ = writeln!(v, "            valid_sr <= {{valid_sr[{}:0], in_valid}};", s_count - 2);
    }
    let _ = writeln!(v, "    end");
    let _ = writeln!(v, "    assign out_valid = valid_sr[{}];", s_count - 1);

    // registers: for each port, the last boundary it must survive
    let mut reg_until: BTreeMap<Signal, u32> = BTreeMap::new();
    let mut need = |s: Signal, upto: u32| {
        let n = &nl.nodes[s.node as usize];
        if matches!(n.op, Op::Const { .. }) || upto <= n.stage {
            return;
        }
        let e = reg_until.entry(s).or_insert(upto);
        *e = (*e).max(upto);
    };
    for n in &nl.nodes {
        for s in n.op.inputs() {
            need(s, n.stage);
        }
    }
    for &s in &nl.outputs {
        need(s, s_count);
    }

    for stage in 0..s_count {
        let nodes: Vec<(usize, &Node)> = nl.nodes.iter().enumerate().filter(|(_, n)| n.stage == stage).collect();
        let _ = writeln!(v);
        let _ = writeln!(v, "    // stage {stage}");
        for (i, n) in nodes {
            let w0 = nm.wire(Signal::of(i));
            let rd = |s: Signal| nm.read(s, stage);
            match &n.op {
                Op::Input { index } => {
                    let _ = writeln!(v, "    wire {w0} = in_bits[{index}];");
                }
                Op::Const { value } => {
                    let _ = writeln!(v, "    wire {w0} = 1'b{};", *value as u8);
                }
                Op::Gate2 { gate, a, b } => {
                    let _ = writeln!(v, "    wire {w0} = {};", gate_expr(*gate, &rd(*a), &rd(*b)));
                }
                Op::Passthrough { src, invert } => {
                    let _ = writeln!(v, "    wire {w0} = {}{};", if *invert { "~" } else { "" }, rd(*src));
                }
                Op::FullAdder { .. } | Op::HalfAdder { .. } | Op::CompareSelect { .. } => {
                    let ports: Vec<String> = (0..n.op.port_count()).map(|p| nm.wire(Signal::new(i, p))).collect();
                    let _ = writeln!(v, "    wire {};", ports.join(", "));
                    let lhs: Vec<&str> = ports.iter().rev().map(String::as_str).collect();
                    let rhs = match &n.op {
                        Op::FullAdder { a, b, c } => format!("{} + {} + {}", rd(*a), rd(*b), rd(*c)),
                        Op::HalfAdder { a, b } => format!("{} + {}", rd(*a), rd(*b)),
                        Op::CompareSelect { width, index_bits, inputs } => {
                            let k = width + index_bits;
                            format!(
                                "({} > {}) ? {} : {}",
                                nm.concat(&inputs[k..k + width], stage),
                                nm.concat(&inputs[..*width], stage),
                                nm.concat(&inputs[k..], stage),
                                nm.concat(&inputs[..k], stage),
                            )
                        }
                        _ => unreachable!(),
                    };
                    let _ = writeln!(v, "    assign {{{}}} = {rhs};", lhs.join(", "));
                }
            }
        }
        let crossing: Vec<Signal> = reg_until
            .iter()
            .filter(|(s, &u)| nl.nodes[s.node as usize].stage <= stage && u > stage)
            .map(|(s, _)| *s)
            .collect();
        if !crossing.is_empty() {
            let names: Vec<String> = crossing.iter().map(|s| format!("r{stage}_n{}_{}", s.node, s.port)).collect();
            for chunk in names.chunks(8) {
                let _ = writeln!(v, "    reg {};", chunk.join(", "));
            }
            let _ = writeln!(v, "    always @(posedge clk) begin");
            for s in &crossing {
                let from = if nl.nodes[s.node as usize].stage == stage {
                    nm.wire(*s)
                } else {
                    format!("r{}_n{}_{}", stage - 1, s.node, s.port)
                };
                let _ = writeln!(v, "        r{stage}_n{}_{} <= {from};", s.node, s.port);
            }
            let _ = writeln!(v, "    end");
        }
    }
    let _ = writeln!(v);
    let outs: Vec<String> = nl.outputs.iter().rev().map(|&s| nm.read(s, s_count)).collect();
    if outs.is_empty() {
        let _ = writeln!(v, "    assign out_class = 1'b0;");
    } else {
        let _ = writeln!(v, "    assign out_class = {{{}}};", outs.join(", "));
    }
    let _ = writeln!(v, "endmodule");
    v
}

/// What the reader recovers from emitted text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuralNetlist {
    pub module_name: String,
    pub input_bits: usize,
    pub stage_count: u32,
    pub nodes: Vec<Node>,
    pub outputs: Vec<Signal>,
}

impl StructuralNetlist {
    /// Whether this is the same DAG as `nl`.
    pub fn matches(&self, nl: &Netlist) -> bool {
        self.input_bits == nl.input_bits && self.stage_count == nl.stage_count && self.nodes == nl.nodes && self.outputs == nl.outputs
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Lit(bool),
    InBit(usize),
    Sym(char),
}

fn tokenize(s: &str, line: usize) -> Result<Vec<Tok>> {
    let err = |m: String| Error::Verilog { line, message: m };
    let c: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < c.len() {
        let ch = c[i];
        if ch.is_whitespace() {
            i += 1;
        } else if "~&|^+>?:(){},".contains(ch) {
            out.push(Tok::Sym(ch));
            i += 1;
        } else if ch == '1' && c.get(i + 1) == Some(&'\'') {
            match (c.get(i + 2), c.get(i + 3)) {
                (Some('b'), Some('0')) => out.push(Tok::Lit(false)),
                (Some('b'), Some('1')) => out.push(Tok::Lit(true)),
                _ => return Err(err(format!("bad literal at column {i}"))),
            }
            i += 4;
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < c.len() && (c[i].is_ascii_alphanumeric() || c[i] == '_') {
                i += 1;
            }
            let word: String = c[start..i].iter().collect();
            if word == "in_bits" {
                let rest: String = c[i..].iter().collect();
                let close = rest.find(']').ok_or_else(|| err("unterminated index".into()))?;
                let idx = rest[1..close].trim().parse().map_err(|_| err("bad input index".into()))?;
                out.push(Tok::InBit(idx));
                i += close + 1;
            } else {
                out.push(Tok::Ident(word));
            }
        } else {
            return Err(err(format!("unexpected character {ch:?}")));
        }
    }
    Ok(out)
}

/// Parses `s<stage>_n<node>_<port>` or `r<t>_n<node>_<port>`.
fn parse_name(name: &str) -> Option<(char, u32, usize, usize)> {
    let kind = name.chars().next()?;
    if kind != 's' && kind != 'r' {
        return None;
    }
    let mut parts = name[1..].split('_');
    let st = parts.next()?.parse().ok()?;
    let node = parts.next()?.strip_prefix('n')?.parse().ok()?;
    let port = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((kind, st, node, port))
}

/// Boolean expression over `~ & ^ |` with parentheses.
struct ExprParser<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
    vars: Vec<String>,
}

#[derive(Debug)]
enum Expr {
    Lit(bool),
    Var(usize),
    Not(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
}

impl Expr {
    fn eval(&self, env: &[bool]) -> bool {
        match self {
            Expr::Lit(b) => *b,
            Expr::Var(i) => env[*i],
            Expr::Not(e) => !e.eval(env),
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(env), b.eval(env));
                match op {
                    '&' => x & y,
                    '|' => x | y,
                    _ => x ^ y,
                }
            }
        }
    }
}

impl ExprParser<'_> {
    fn err(&self, m: &str) -> Error {
        Error::Verilog {
            line: self.line,
            message: m.to_string(),
        }
    }

    fn parse_level(&mut self, level: usize) -> Result<Expr> {
        const OPS: [char; 3] = ['|', '^', '&'];
        if level == OPS.len() {
            return self.parse_unary();
        }
        let mut lhs = self.parse_level(level + 1)?;
        while self.toks.get(self.pos) == Some(&Tok::Sym(OPS[level])) {
            self.pos += 1;
            let rhs = self.parse_level(level + 1)?;
            lhs = Expr::Bin(OPS[level], Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Sym('~')) => {
                self.pos += 1;
                Ok(Expr::Not(Box::new(self.parse_unary()?)))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.parse_level(0)?;
                if self.toks.get(self.pos) != Some(&Tok::Sym(')')) {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Tok::Lit(b)) => {
                self.pos += 1;
                Ok(Expr::Lit(b))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let k = match self.vars.iter().position(|v| *v == name) {
                    Some(k) => k,
                    None => {
                        self.vars.push(name);
                        self.vars.len() - 1
                    }
                };
                Ok(Expr::Var(k))
            }
            _ => Err(self.err("expected an operand")),
        }
    }
}

struct Reader {
    nodes: BTreeMap<usize, Node>,
}

impl Reader {
    fn signal(&self, name: &str, line: usize) -> Result<Signal> {
        let (_, _, node, port) = parse_name(name).ok_or_else(|| Error::Verilog {
            line,
            message: format!("unknown signal {name}"),
        })?;
        if !self.nodes.contains_key(&node) {
            return Err(Error::Verilog {
                line,
                message: format!("{name} read before it is defined"),
            });
        }
        Ok(Signal::new(node, port))
    }

    fn concat(&self, toks: &[Tok], pos: &mut usize, line: usize) -> Result<Vec<Signal>> {
        let err = |m: &str| Error::Verilog {
            line,
            message: m.to_string(),
        };
        if toks.get(*pos) != Some(&Tok::Sym('{')) {
            return Err(err("expected '{'"));
        }
        *pos += 1;
        let mut out = Vec::new();
        loop {
            match toks.get(*pos) {
                Some(Tok::Ident(n)) => out.push(self.signal(n, line)?),
                _ => return Err(err("expected a signal in concatenation")),
            }
            *pos += 1;
            match toks.get(*pos) {
                Some(Tok::Sym(',')) => *pos += 1,
                Some(Tok::Sym('}')) => {
                    *pos += 1;
                    break;
                }
                _ => return Err(err("expected ',' or '}'")),
            }
        }
        out.reverse();
        Ok(out)
    }
}

/// Reads back text produced by [`emit_verilog`].
pub fn read_structural_verilog(text: &str) -> Result<StructuralNetlist> {
    let mut rd = Reader { nodes: BTreeMap::new() };
    let mut module_name = None;
    let mut input_bits = None;
    let mut stage_count = None;
    let mut outputs = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let t = raw.trim();
        let err = |m: String| Error::Verilog { line, message: m };
        if let Some(rest) = t.strip_prefix("module ") {
            module_name = Some(rest.trim_end_matches('(').trim().to_string());
        } else if let Some(rest) = t.strip_prefix("input wire [") {
            if rest.ends_with("in_bits,") {
                let hi: usize = rest.split(':').next().unwrap_or("").parse().map_err(|_| err("bad input width".into()))?;
                input_bits = Some(hi + 1);
            }
        } else if let Some(rest) = t.strip_prefix("reg [") {
            if rest.ends_with("valid_sr;") {
                let hi: u32 = rest.split(':').next().unwrap_or("").parse().map_err(|_| err("bad stage count".into()))?;
                stage_count = Some(hi + 1);
            }
        } else if let Some(rest) = t.strip_prefix("assign out_class = ") {
            let toks = tokenize(rest.trim_end_matches(';'), line)?;
            if toks.first() == Some(&Tok::Sym('{')) {
                let mut pos = 0;
                outputs = Some(rd.concat(&toks, &mut pos, line)?);
            } else {
                outputs = Some(Vec::new());
            }
        } else if let Some(rest) = t.strip_prefix("wire ") {
            let Some((name, expr)) = rest.split_once(" = ") else {
                continue; // bare declaration of multi-output ports
            };
            let (_, stage, node, port) = parse_name(name).ok_or_else(|| err(format!("bad wire name {name}")))?;
            if port != 0 {
                return Err(err(format!("single-output node {node} defines port {port}")));
            }
            let toks = tokenize(expr.trim_end_matches(';'), line)?;
            let op = match toks.as_slice() {
                [Tok::InBit(k)] => Op::Input { index: *k },
                [Tok::Lit(b)] => Op::Const { value: *b },
                _ => {
                    let mut p = ExprParser {
                        toks: &toks,
                        pos: 0,
                        line,
                        vars: Vec::new(),
                    };
                    let e = p.parse_level(0)?;
                    if p.pos != toks.len() {
                        return Err(err("trailing tokens in expression".into()));
                    }
                    let sigs: Vec<Signal> = p.vars.iter().map(|v| rd.signal(v, line)).collect::<Result<_>>()?;
                    match sigs.len() {
                        1 => Op::Passthrough {
                            src: sigs[0],
                            invert: !e.eval(&[true]),
                        },
                        2 => {
                            let mut id = 0u8;
                            for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
                                if e.eval(&[a, b]) {
                                    id |= 1 << (2 * a as u8 + b as u8);
                                }
                            }
                            Op::Gate2 {
                                gate: GateId::new(id)?,
                                a: sigs[0],
                                b: sigs[1],
                            }
                        }
                        n => return Err(err(format!("expression over {n} signals"))),
                    }
                }
            };
            rd.nodes.insert(node, Node { op, stage });
        } else if let Some(rest) = t.strip_prefix("assign {") {
            let (lhs, rhs) = rest.split_once("} = ").ok_or_else(|| err("malformed assign".into()))?;
            let ports: Vec<(u32, usize, usize)> = lhs
                .split(',')
                .map(|n| parse_name(n.trim()).map(|(_, s, i, p)| (s, i, p)))
                .collect::<Option<_>>()
                .ok_or_else(|| err("bad port name".into()))?;
            let (stage, node, _) = ports[0];
            let k = ports.len();
            let toks = tokenize(rhs.trim_end_matches(';'), line)?;
            let op = if toks.first() == Some(&Tok::Sym('(')) {
                let mut pos = 1;
                let bv = rd.concat(&toks, &mut pos, line)?;
                if toks.get(pos) != Some(&Tok::Sym('>')) {
                    return Err(err("expected '>'".into()));
                }
                pos += 1;
                let av = rd.concat(&toks, &mut pos, line)?;
                if toks.get(pos) != Some(&Tok::Sym(')')) || toks.get(pos + 1) != Some(&Tok::Sym('?')) {
                    return Err(err("expected ') ?'".into()));
                }
                pos += 2;
                let b_all = rd.concat(&toks, &mut pos, line)?;
                if toks.get(pos) != Some(&Tok::Sym(':')) {
                    return Err(err("expected ':'".into()));
                }
                pos += 1;
                let a_all = rd.concat(&toks, &mut pos, line)?;
                let width = av.len();
                if bv.len() != width || a_all.len() != k || b_all.len() != k || a_all[..width] != av[..] || b_all[..width] != bv[..] {
                    return Err(err("inconsistent compare-select operands".into()));
                }
                let mut inputs = a_all;
                inputs.extend(b_all);
                Op::CompareSelect {
                    width,
                    index_bits: k - width,
                    inputs,
                }
            } else {
                let names: Vec<&Tok> = toks.iter().filter(|t| matches!(t, Tok::Ident(_))).collect();
                let sigs: Vec<Signal> = names
                    .iter()
                    .map(|t| match t {
                        Tok::Ident(n) => rd.signal(n, line),
                        _ => unreachable!(),
                    })
                    .collect::<Result<_>>()?;
                match sigs.as_slice() {
                    [a, b, c] => Op::FullAdder { a: *a, b: *b, c: *c },
                    [a, b] => Op::HalfAdder { a: *a, b: *b },
                    _ => return Err(err("adder with unexpected operands".into())),
                }
            };
            rd.nodes.insert(node, Node { op, stage });
        }
    }
    if rd.nodes.keys().enumerate().any(|(i, &k)| i != k) {
        return Err(Error::Verilog {
            line: 0,
            message: "node numbering has gaps".into(),
        });
    }
    let nodes: Vec<Node> = rd.nodes.into_values().collect();
    Ok(StructuralNetlist {
        module_name: module_name.ok_or_else(|| Error::Verilog { line: 0, message: "no module".into() })?,
        input_bits: input_bits.ok_or_else(|| Error::Verilog { line: 0, message: "no in_bits port".into() })?,
        stage_count: stage_count.ok_or_else(|| Error::Verilog { line: 0, message: "no valid shift register".into() })?,
        nodes,
        outputs: outputs.ok_or_else(|| Error::Verilog { line: 0, message: "no out_class assignment".into() })?,
    })
}
