//! Compilation: discretization, netlist lowering, pruning and Verilog.

mod build;
mod hard;
mod netlist;
mod popcount;
mod prune;
mod verilog;

pub use build::{build_netlist, compare_depth, index_bits, single_gate_netlist, PipelinePlan};
pub use hard::{discretize, HardLayer, HardLgn};
pub use netlist::{port_offsets, Netlist, NetlistMeta, Node, Op, Signal, StageSections, NETLIST_FORMAT, NETLIST_VERSION};
pub use popcount::{count_width, full_adder_count, half_adder_count, PopcountShape};
pub use prune::prune;
pub use verilog::{emit_verilog, read_structural_verilog, StructuralNetlist};

use crate::error::Result;

/// Discretized network to pruned netlist in one call.
pub fn compile(h: &HardLgn, plan: &PipelinePlan) -> Result<Netlist> {
    Ok(prune(&build_netlist(h, plan)?))
}
