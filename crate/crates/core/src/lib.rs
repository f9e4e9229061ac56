//! Differentiable logic gate networks: training, compilation to pipelined
//! netlists and Verilog, FPGA resource estimation and architecture search.

pub mod arch;
pub mod compile;
pub mod data;
mod error;
pub mod gate;
mod scalar;
pub mod estimate;
pub mod netsim;
pub mod report;
pub mod search;
pub mod train;

pub use arch::ArchitectureSpec;
pub use error::{Error, Result};
pub use gate::{GateId, GateWeights, MixtureCoefficients};
pub use scalar::Scalar;

pub type SoftLgnF32 = train::SoftLgn<f32>;
pub type SoftLgnF64 = train::SoftLgn<f64>;
pub type TrainedResultF32 = train::TrainedResult<f32>;
pub type TrainedResultF64 = train::TrainedResult<f64>;
