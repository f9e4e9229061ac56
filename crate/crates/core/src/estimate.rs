//! FPGA resource and latency estimation.
//!
//! `LUT_total = LUT_input + LUT_logic + LUT_sum + delta`, where the input term
//! is affine in the encoded width, the logic term comes from a k-LUT cover of
//! the decision logic (or a packing density in spec mode), and the sum term
//! counts one LUT per adder cell plus `width + 1` per comparator.

use serde::{Deserialize, Serialize};

use crate::arch::ArchitectureSpec;
use crate::compile::{compare_depth, count_width, full_adder_count, half_adder_count, index_bits, Netlist, Op, PipelinePlan, PopcountShape, StageSections};
use crate::error::{Error, Result};

/// LUTs on the target device.
pub const DEVICE_LUTS: u64 = 892_000;
/// Dies on the target device.
pub const SLR_COUNT: u64 = 3;

pub fn slr_luts() -> u64 {
    DEVICE_LUTS / SLR_COUNT
}

pub const CALIBRATION_FORMAT: &str = "lgnkit-calibration";
pub const CALIBRATION_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationParams {
    pub format: String,
    pub version: u32,
    /// LUT input arity.
    pub k: u32,
    /// Input-interface LUTs per encoded bit.
    pub alpha_in: f64,
    /// Constant interface overhead (`delta`).
    pub delta_const: f64,
    /// Fraction of gates left after pruning (spec mode).
    pub gate_survival: f64,
    /// Surviving gates per LUT (spec mode).
    pub gates_per_lut: f64,
    pub ff_per_input_bit: f64,
    pub p_static: f64,
    pub p_lut: f64,
    pub p_ff: f64,
    /// Synthesis-to-hardware affine map.
    pub hw_slope: f64,
    pub hw_intercept: f64,
}

impl Default for CalibrationParams {
    fn default() -> Self {
        CalibrationParams {
            format: CALIBRATION_FORMAT.to_string(),
            version: CALIBRATION_VERSION,
            k: 6,
            alpha_in: 0.5,
            delta_const: 1500.0,
            gate_survival: 0.52,
            gates_per_lut: 1.33,
            ff_per_input_bit: 32.0,
            p_static: 12.5,
            p_lut: 1.5e-6,
            p_ff: 1.0e-6,
            hw_slope: 1.0,
            hw_intercept: 0.0,
        }
    }
}

impl CalibrationParams {
    pub fn validate(&self) -> Result<()> {
        if self.format != CALIBRATION_FORMAT || self.version != CALIBRATION_VERSION {
            return Err(Error::validation(format!("unsupported calibration {} v{}", self.format, self.version)));
        }
        if !(4..=6).contains(&self.k) {
            return Err(Error::validation(format!("LUT arity {} outside [4, 6]", self.k)));
        }
        let vals = [
            self.alpha_in,
            self.delta_const,
            self.gate_survival,
            self.ff_per_input_bit,
            self.p_static,
            self.p_lut,
            self.p_ff,
            self.hw_slope,
            self.hw_intercept,
        ];
        if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::validation("calibration constants must be finite and non-negative"));
        }
        if !(self.gates_per_lut > 0.0 && self.gates_per_lut.is_finite()) {
            return Err(Error::validation("gates per LUT must be positive"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: CalibrationParams = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Hardware-count prediction for a synthesis estimate.
    pub fn to_hardware(&self, synth: f64) -> f64 {
        self.hw_slope * synth + self.hw_intercept
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub lut_input: u64,
    pub lut_logic: u64,
    pub lut_sum: u64,
    pub lut_delta: u64,
    pub lut_total: u64,
    pub ff_total: u64,
    pub cycles: u32,
    pub power_watts: f64,
    pub fits_slr: bool,
    pub fits_device: bool,
    pub sections: StageSections,
}

impl ResourceEstimate {
    fn assemble(lut_input: u64, lut_logic: u64, lut_sum: u64, lut_delta: u64, ff_total: u64, sections: StageSections, cal: &CalibrationParams) -> Self {
        let lut_total = lut_input + lut_logic + lut_sum + lut_delta;
        ResourceEstimate {
            lut_input,
            lut_logic,
            lut_sum,
            lut_delta,
            lut_total,
            ff_total,
            cycles: sections.total(),
            power_watts: cal.p_static + cal.p_lut * lut_total as f64 + cal.p_ff * ff_total as f64,
            fits_slr: lut_total <= slr_luts(),
            fits_device: lut_total <= DEVICE_LUTS,
            sections,
        }
    }
}

/// What to estimate.
#[derive(Clone, Copy, Debug)]
pub enum EstimateInput<'a> {
    Spec(&'a ArchitectureSpec),
    Netlist(&'a Netlist),
}

pub fn estimate(input: EstimateInput<'_>, cal: &CalibrationParams, plan: &PipelinePlan) -> Result<ResourceEstimate> {
    match input {
        EstimateInput::Spec(s) => estimate_spec(s, cal, plan),
        EstimateInput::Netlist(n) => estimate_netlist(n, cal),
    }
}

/// Greedy cone packing of the decision logic into `k`-input LUTs.
///
/// Nodes are visited from the outputs backwards. Each uncovered logic node
/// roots a cone, which repeatedly absorbs leaf gates whose every consumer is
/// already inside the cone, as long as the cone keeps at most `k` distinct
/// non-constant leaves. Returns the number of cones.
pub fn klut_cover(nl: &Netlist, k: usize) -> Result<usize> {
    if k < 2 {
        return Err(Error::domain("LUT arity must be at least 2"));
    }
    nl.validate()?;
    let n = nl.nodes.len();
    let fan = nl.fanouts();
    let mut external = vec![false; n];
    for s in &nl.outputs {
        external[s.node as usize] = true;
    }
    let is_const = |i: usize| matches!(nl.nodes[i].op, Op::Const { .. });
    let leaf_inputs = |i: usize| -> Vec<u32> {
        let mut v: Vec<u32> = nl.nodes[i].op.inputs().iter().filter(|s| !is_const(s.node as usize)).map(|s| s.node).collect();
        v.dedup();
        v
    };
    let mut covered = vec![false; n];
    let mut cone = vec![u32::MAX; n];
    let mut cones = 0usize;
    for root in (0..n).rev() {
        if covered[root] || !nl.nodes[root].op.is_logic() {
            continue;
        }
        cones += 1;
        let id = cones as u32;
        covered[root] = true;
        cone[root] = id;
        let mut leaves: Vec<u32> = leaf_inputs(root);
        leaves.sort_unstable();
        leaves.dedup();
        loop {
            let mut grew = false;
            let mut idx = 0;
            while idx < leaves.len() {
                let x = leaves[idx] as usize;
                let absorbable = nl.nodes[x].op.is_logic() && !covered[x] && !external[x] && fan[x].iter().all(|&c| cone[c as usize] == id);
                if absorbable {
                    let mut next: Vec<u32> = leaves.iter().copied().filter(|&l| l as usize != x).collect();
                    next.extend(leaf_inputs(x));
                    next.sort_unstable();
                    next.dedup();
                    if next.len() <= k {
                        covered[x] = true;
                        cone[x] = id;
                        leaves = next;
                        grew = true;
                        idx = 0;
                        continue;
                    }
                }
                idx += 1;
            }
            if !grew {
                break;
            }
        }
    }
    Ok(cones)
}

/// LUTs for the popcount trees and comparator tree of a final layer of `l_end` gates.
pub fn lut_sum_cost(l_end: usize, class_count: usize) -> Result<u64> {
    if class_count < 2 || l_end < class_count {
        return Err(Error::domain(format!("final layer of {l_end} cannot feed {class_count} classes")));
    }
    let n = l_end.div_ceil(class_count);
    let cells = full_adder_count(n) + half_adder_count(n);
    let w = count_width(n);
    Ok((class_count * cells + (class_count - 1) * (w + 1)) as u64)
}

/// Pipeline depth of an architecture.
pub fn estimate_cycles(spec: &ArchitectureSpec, plan: &PipelinePlan) -> u32 {
    plan.sections_for(spec).total()
}

/// Cycles for a sweep of end widths with the class count and layer count held fixed.
pub fn estimate_cycles_curve(l_ends: &[usize], class_count: usize, layers: usize, plan: &PipelinePlan) -> Vec<u32> {
    l_ends
        .iter()
        .map(|&l| {
            let n = l.div_ceil(class_count);
            plan.sections(layers, PopcountShape::build(n).depth as usize, compare_depth(class_count)).total()
        })
        .collect()
}

/// Expected register bits at each stage boundary of an architecture.
pub fn estimate_boundaries(spec: &ArchitectureSpec, plan: &PipelinePlan) -> Vec<usize> {
    let sec = plan.sections_for(spec);
    let widths = spec.layer_widths();
    let classes = spec.class_count;
    let shape = PopcountShape::build(spec.group_size());
    let w = shape.width;
    let ib = index_bits(classes);
    let mut out = Vec::with_capacity(sec.total() as usize);
    out.extend(std::iter::repeat_n(spec.input_bits, sec.input as usize));
    let cap = (plan.levels_per_stage * plan.gate_layers_per_level) as usize;
    for j in 1..=sec.logic as usize {
        let cut = (j * cap).min(widths.len());
        out.push(widths[cut - 1]);
    }
    for j in 1..=sec.adder {
        if j == sec.adder {
            out.push(classes * w);
        } else {
            out.push(classes * shape.live_after(j * plan.levels_per_stage));
        }
    }
    let steps_per_stage = (plan.levels_per_stage * plan.compare_steps_per_level) as usize;
    for j in 1..=sec.compare as usize {
        if j == sec.compare as usize {
            out.push(ib);
        } else {
            let mut m = classes;
            for _ in 0..j * steps_per_stage {
                m = m.div_ceil(2);
            }
            out.push(m * (w + ib));
        }
    }
    out.extend(std::iter::repeat_n(ib, sec.output as usize));
    out
}

/// Real-valued regressors of the LUT model: surviving gates, encoded bits and sum LUTs.
pub fn lut_regressors(spec: &ArchitectureSpec, cal: &CalibrationParams) -> Result<(f64, f64, f64)> {
    spec.validate()?;
    Ok((
        spec.total_gates() as f64 * cal.gate_survival,
        spec.input_bits as f64,
        lut_sum_cost(spec.end_width().max(spec.class_count), spec.class_count)? as f64,
    ))
}

pub fn estimate_spec(spec: &ArchitectureSpec, cal: &CalibrationParams, plan: &PipelinePlan) -> Result<ResourceEstimate> {
    cal.validate()?;
    plan.validate()?;
    let (gates, bits, sum) = lut_regressors(spec, cal)?;
    let boundaries: usize = estimate_boundaries(spec, plan).iter().sum();
    let ff = cal.ff_per_input_bit * bits + boundaries as f64;
    Ok(ResourceEstimate::assemble(
        (cal.alpha_in * bits).round() as u64,
        (gates / cal.gates_per_lut).ceil() as u64,
        sum as u64,
        cal.delta_const.round() as u64,
        ff.round() as u64,
        plan.sections_for(spec),
        cal,
    ))
}

pub fn estimate_netlist(nl: &Netlist, cal: &CalibrationParams) -> Result<ResourceEstimate> {
    cal.validate()?;
    let logic = klut_cover(nl, cal.k as usize)? as u64;
    let mut sum = 0u64;
    for n in &nl.nodes {
        sum += match &n.op {
            Op::FullAdder { .. } | Op::HalfAdder { .. } => 1,
            Op::CompareSelect { width, .. } => *width as u64 + 1,
            _ => 0,
        };
    }
    let ff = cal.ff_per_input_bit * nl.input_bits as f64 + nl.flip_flops() as f64;
    Ok(ResourceEstimate::assemble(
        (cal.alpha_in * nl.input_bits as f64).round() as u64,
        logic,
        sum,
        cal.delta_const.round() as u64,
        ff.round() as u64,
        nl.meta.sections,
        cal,
    ))
}

/// Least-squares affine map from synthesis counts to hardware counts.
pub fn calibrate_hw(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pairs.len() < 2 {
        return Err(Error::Fit("at least two pairs are needed".into()));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= f64::EPSILON * (1.0 + mx * mx) * n {
        return Err(Error::Fit("all synthesis counts are equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
