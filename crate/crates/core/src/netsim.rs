//! Bit-exact, cycle-aware interpretation of netlists.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compile::{port_offsets, Netlist, Op, Signal};
use crate::error::{Error, Result};

fn check_width(nl: &Netlist, n: usize) -> Result<()> {
    if n != nl.input_bits {
        return Err(Error::domain(format!("input has {n} bits, netlist expects {}", nl.input_bits)));
    }
    Ok(())
}

/// Class chosen by the netlist for one input.
pub fn simulate(nl: &Netlist, input: &[bool]) -> Result<usize> {
    check_width(nl, input.len())?;
    let lanes: Vec<u64> = input.iter().map(|&b| b as u64).collect();
    Ok(nl.output_lanes(&nl.eval_lanes(&lanes))[0])
}

/// Classes for many inputs, 64 at a time.
pub fn simulate_many(nl: &Netlist, inputs: &[Vec<bool>]) -> Result<Vec<usize>> {
    for x in inputs {
        check_width(nl, x.len())?;
    }
    Ok(inputs
        .par_chunks(64)
        .flat_map_iter(|chunk| {
            let mut lanes = vec![0u64; nl.input_bits];
            for (lane, x) in chunk.iter().enumerate() {
                for (j, &b) in x.iter().enumerate() {
                    lanes[j] |= (b as u64) << lane;
                }
            }
            let out = nl.output_lanes(&nl.eval_lanes(&lanes));
            out.into_iter().take(chunk.len())
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub input: usize,
    pub class: usize,
    /// Cycle at which `out_valid` showed this result.
    pub cycle: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: u64,
    pub in_valid: bool,
    pub out_valid: bool,
    pub out_class: Option<usize>,
    /// Register contents after each stage boundary, when recorded.
    pub registers: Vec<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimTrace {
    pub latency_cycles: u32,
    pub results: Vec<PipelineOutput>,
    pub cycles: Vec<CycleRecord>,
}

/// Streams `inputs` one per cycle through explicit stage registers.
///
/// Input `k` is applied during cycle `k`; its class is visible with
/// `out_valid` high in cycle `k + stage_count`.
pub fn simulate_pipelined(nl: &Netlist, inputs: &[Vec<bool>]) -> Result<SimTrace> {
    simulate_pipelined_with(nl, inputs, false)
}

pub fn simulate_pipelined_with(nl: &Netlist, inputs: &[Vec<bool>], record_registers: bool) -> Result<SimTrace> {
    for x in inputs {
        check_width(nl, x.len())?;
    }
    let stages = nl.stage_count as usize;
    let crossing = nl.boundary_signals();
    let (offs, total) = port_offsets(&nl.nodes);
    let slot = |s: Signal| offs[s.node as usize] + s.port as usize;
    let by_stage: Vec<Vec<usize>> = (0..stages)
        .map(|st| (0..nl.nodes.len()).filter(|&i| nl.nodes[i].stage as usize == st).collect())
        .collect();
    let consts: Vec<usize> = (0..nl.nodes.len()).filter(|&i| matches!(nl.nodes[i].op, Op::Const { .. })).collect();

    let mut regs: Vec<Vec<u64>> = crossing.iter().map(|c| vec![0; c.len()]).collect();
    let mut valid = vec![false; stages];
    let mut tag = vec![usize::MAX; stages];
    let mut vals = vec![0u64; total];
    for &i in &consts {
        nl.eval_node(i, &offs, &[], &mut vals);
    }
    let mut trace = SimTrace {
        latency_cycles: nl.stage_count,
        results: Vec::new(),
        cycles: Vec::new(),
    };
    let horizon = inputs.len() as u64 + stages as u64;
    let mut lanes = vec![0u64; nl.input_bits];
    for cycle in 0..=horizon {
        // outputs visible this cycle
        let out_valid = valid[stages - 1];
        let out_class = out_valid.then(|| {
            let last = &crossing[stages - 1];
            nl.outputs
                .iter()
                .enumerate()
                .map(|(bit, &s)| {
                    let v = match nl.nodes[s.node as usize].op {
                        Op::Const { value } => value as u64,
                        _ => regs[stages - 1][last.iter().position(|&x| x == s).expect("output is registered")] & 1,
                    };
                    (v as usize) << bit
                })
                .sum()
        });
        if let Some(class) = out_class {
            trace.results.push(PipelineOutput {
                input: tag[stages - 1],
                class,
                cycle,
            });
        }
        let in_valid = (cycle as usize) < inputs.len();
        trace.cycles.push(CycleRecord {
            cycle,
            in_valid,
            out_valid,
            out_class,
            registers: if record_registers {
                regs.iter().map(|r| r.iter().map(|&w| w & 1 == 1).collect()).collect()
            } else {
                Vec::new()
            },
        });
        if cycle == horizon {
            break;
        }
        // clock edge
        if in_valid {
            for (l, &b) in lanes.iter_mut().zip(&inputs[cycle as usize]) {
                *l = b as u64;
            }
        } else {
            lanes.iter_mut().for_each(|l| *l = 0);
        }
        let mut next: Vec<Vec<u64>> = Vec::with_capacity(stages);
        for st in 0..stages {
            if st > 0 {
                for (k, &s) in crossing[st - 1].iter().enumerate() {
                    vals[slot(s)] = regs[st - 1][k];
                }
            }
            for &i in &by_stage[st] {
                nl.eval_node(i, &offs, &lanes, &mut vals);
            }
            next.push(crossing[st].iter().map(|&s| vals[slot(s)]).collect());
        }
        regs = next;
        for st in (1..stages).rev() {
            valid[st] = valid[st - 1];
            tag[st] = tag[st - 1];
        }
        valid[0] = in_valid;
        tag[0] = if in_valid { cycle as usize } else { usize::MAX };
    }
    Ok(trace)
}

/// Line-oriented text dump of a trace.
///
/// ```text
/// # lgnkit trace v1
/// latency <cycles>
/// cycle <n> in_valid <0|1> out_valid <0|1> out_class <k|->
/// reg <boundary> <bits, boundary order>
/// ```
pub fn write_trace(trace: &SimTrace) -> String {
    let mut s = String::from("# lgnkit trace v1\n");
    s += &format!("latency {}\n", trace.latency_cycles);
    for c in &trace.cycles {
        s += &format!(
            "cycle {} in_valid {} out_valid {} out_class {}\n",
            c.cycle,
            c.in_valid as u8,
            c.out_valid as u8,
            c.out_class.map_or("-".to_string(), |k| k.to_string())
        );
        for (b, r) in c.registers.iter().enumerate() {
            let bits: String = r.iter().map(|&x| if x { '1' } else { '0' }).collect();
            s += &format!("reg {b} {bits}\n");
        }
    }
    s
}
