//! Lowering a discretized network to a staged netlist.

use serde::{Deserialize, Serialize};

use super::hard::HardLgn;
use super::netlist::{Netlist, NetlistMeta, Op, Signal, StageSections};
use super::popcount::{compress, count_width, AdderSink, PopcountShape};
use crate::arch::ArchitectureSpec;
use crate::error::{Error, Result};
use crate::gate::GateId;

/// Register placement.
///
/// Delay is counted in adder-cell levels. A stage holds `levels_per_stage`
/// levels; a layer of two-input gates costs `1 / gate_layers_per_level` of a
/// level and one comparator step costs `1 / compare_steps_per_level`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelinePlan {
    pub levels_per_stage: u32,
    pub input_stages: u32,
    pub output_stages: u32,
    pub gate_layers_per_level: u32,
    pub compare_steps_per_level: u32,
}

impl Default for PipelinePlan {
    fn default() -> Self {
        PipelinePlan {
            levels_per_stage: 2,
            input_stages: 1,
            output_stages: 1,
            gate_layers_per_level: 4,
            compare_steps_per_level: 2,
        }
    }
}

impl PipelinePlan {
    pub fn validate(&self) -> Result<()> {
        if [
            self.levels_per_stage,
            self.input_stages,
            self.output_stages,
            self.gate_layers_per_level,
            self.compare_steps_per_level,
        ]
        .contains(&0)
        {
            return Err(Error::validation("pipeline plan fields must be at least 1"));
        }
        Ok(())
    }

    fn logic_stage_of(&self, layer: u32) -> u32 {
        layer.div_ceil(self.levels_per_stage * self.gate_layers_per_level)
    }

    fn adder_stage_of(&self, level: u32) -> u32 {
        level.div_ceil(self.levels_per_stage)
    }

    fn compare_stage_of(&self, step: u32) -> u32 {
        step.div_ceil(self.levels_per_stage * self.compare_steps_per_level)
    }

    /// Stage counts for a network with `layers` gate layers, popcount trees of
    /// depth `adder_depth` and a comparator tree of `compare_depth` steps.
    pub fn sections(&self, layers: usize, adder_depth: usize, compare_depth: usize) -> StageSections {
        StageSections {
            input: self.input_stages,
            logic: self.logic_stage_of(layers as u32),
            adder: self.adder_stage_of(adder_depth as u32),
            compare: self.compare_stage_of(compare_depth as u32),
            output: self.output_stages,
        }
    }

    /// Sections for an architecture, from its popcount and comparator depths.
    pub fn sections_for(&self, spec: &ArchitectureSpec) -> StageSections {
        let depth = PopcountShape::build(spec.group_size()).depth as usize;
        self.sections(spec.layer_count(), depth, compare_depth(spec.class_count))
    }
}

/// Levels of a pairwise comparator tree over `classes` candidates.
pub fn compare_depth(classes: usize) -> usize {
    let mut m = classes;
    let mut d = 0;
    while m > 1 {
        m = m.div_ceil(2);
        d += 1;
    }
    d
}

/// Bits needed for a class index.
pub fn index_bits(classes: usize) -> usize {
    count_width(classes.saturating_sub(1)).max(1)
}

struct NetSink<'a> {
    nl: &'a mut Netlist,
    base: u32,
    plan: PipelinePlan,
}

impl AdderSink for NetSink<'_> {
    type Sig = Signal;

    fn full_adder(&mut self, a: Signal, b: Signal, c: Signal, level: u32) -> (Signal, Signal) {
        let stage = self.base + self.plan.adder_stage_of(level) - 1;
        let id = self.nl.push(Op::FullAdder { a, b, c }, stage);
        (Signal::new(id, 0), Signal::new(id, 1))
    }

    fn half_adder(&mut self, a: Signal, b: Signal, level: u32) -> (Signal, Signal) {
        let stage = self.base + self.plan.adder_stage_of(level) - 1;
        let id = self.nl.push(Op::HalfAdder { a, b }, stage);
        (Signal::new(id, 0), Signal::new(id, 1))
    }
}

/// Lowers `h` to a netlist: gate layers, one popcount tree per class and a
/// compare-select tree. The result is not pruned.
pub fn build_netlist(h: &HardLgn, plan: &PipelinePlan) -> Result<Netlist> {
    plan.validate()?;
    h.spec.validate()?;
    let classes = h.class_count();
    let group = h.group_size();
    let shape = PopcountShape::build(group);
    let cmp_depth = compare_depth(classes);
    let sections = plan.sections(h.layers.len(), shape.depth as usize, cmp_depth);
    let mut nl = Netlist::empty(h.input_bits(), classes);
    nl.stage_count = sections.total();

    let zero = Signal::of(nl.push(Op::Const { value: false }, 0));
    let one = Signal::of(nl.push(Op::Const { value: true }, 0));
    let mut prev: Vec<Signal> = (0..h.input_bits()).map(|i| Signal::of(nl.push(Op::Input { index: i }, 0))).collect();

    let logic_base = sections.input;
    for (l, layer) in h.layers.iter().enumerate() {
        let stage = logic_base + plan.logic_stage_of(l as u32 + 1) - 1;
        prev = (0..layer.width())
            .map(|i| {
                let op = Op::Gate2 {
                    gate: layer.gates[i],
                    a: prev[layer.a[i] as usize],
                    b: prev[layer.b[i] as usize],
                };
                Signal::of(nl.push(op, stage))
            })
            .collect();
    }

    let adder_base = logic_base + sections.logic;
    let width = shape.width;
    let mut sums = Vec::with_capacity(classes);
    for grp in prev.chunks_exact(group) {
        let mut sink = NetSink {
            nl: &mut nl,
            base: adder_base,
            plan: *plan,
        };
        let bits = compress(&mut sink, grp);
        debug_assert_eq!(bits.len(), width);
        sums.push(bits.into_iter().map(|b| b.0).collect::<Vec<_>>());
    }

    let ib = index_bits(classes);
    let cmp_base = adder_base + sections.adder;
    let mut cands: Vec<(Vec<Signal>, Vec<Signal>)> = sums
        .into_iter()
        .enumerate()
        .map(|(c, v)| (v, (0..ib).map(|k| if (c >> k) & 1 == 1 { one } else { zero }).collect()))
        .collect();
    let mut step = 0;
    while cands.len() > 1 {
        step += 1;
        let stage = cmp_base + plan.compare_stage_of(step) - 1;
        let mut next = Vec::with_capacity(cands.len().div_ceil(2));
        let mut it = cands.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                None => next.push(a),
                Some(b) => {
                    let mut inputs = a.0.clone();
                    inputs.extend(&a.1);
                    inputs.extend(&b.0);
                    inputs.extend(&b.1);
                    let id = nl.push(
                        Op::CompareSelect {
                            width,
                            index_bits: ib,
                            inputs,
                        },
                        stage,
                    );
                    next.push((
                        (0..width).map(|p| Signal::new(id, p)).collect(),
                        (width..width + ib).map(|p| Signal::new(id, p)).collect(),
                    ));
                }
            }
        }
        cands = next;
    }
    nl.outputs = cands.pop().expect("at least one class").1;
    nl.meta = NetlistMeta {
        layer_count: h.layers.len(),
        group_size: group,
        sum_width: width,
        index_bits: ib,
        adder_depth: shape.depth as usize,
        compare_depth: cmp_depth,
        gates_before_prune: h.gate_count(),
        gates_after_prune: h.gate_count(),
        sections,
    };
    debug_assert!(nl.validate().is_ok());
    Ok(nl)
}

/// A netlist of a single gate feeding a two-class comparator, for fixtures
/// and smoke tests: class 1 wins iff `gate(in[0], in[1])` is 1.
pub fn single_gate_netlist(gate: GateId, plan: &PipelinePlan) -> Result<Netlist> {
    let spec = ArchitectureSpec {
        bit_depth: 1,
        layer_width: 2,
        depth: 1,
        front_width: None,
        end_fraction: None,
        class_count: 2,
        wiring_seed: 0,
        input_bits: 2,
    };
    let h = HardLgn {
        spec,
        layers: vec![super::hard::HardLayer {
            a: vec![0, 0],
            b: vec![1, 1],
            gates: vec![GateId::FALSE, gate],
        }],
    };
    build_netlist(&h, plan)
}
