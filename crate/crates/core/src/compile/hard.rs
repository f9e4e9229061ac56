//! Discretized networks: one concrete gate per neuron.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arch::ArchitectureSpec;
use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::gate::GateId;
use crate::train::SoftLgn;
use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardLayer {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub gates: Vec<GateId>,
}

impl HardLayer {
    pub fn width(&self) -> usize {
        self.gates.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardLgn {
    pub spec: ArchitectureSpec,
    pub layers: Vec<HardLayer>,
}

/// Replaces every neuron's mixture with its most likely gate (ties go to the lowest id).
pub fn discretize<T: Scalar>(net: &SoftLgn<T>) -> HardLgn {
    HardLgn {
        spec: net.spec.clone(),
        layers: net
            .layers
            .iter()
            .map(|l| HardLayer {
                a: l.a.clone(),
                b: l.b.clone(),
                gates: l.weights.iter().map(|w| w.argmax()).collect(),
            })
            .collect(),
    }
}

impl HardLgn {
    pub fn input_bits(&self) -> usize {
        self.spec.input_bits
    }

    pub fn class_count(&self) -> usize {
        self.spec.class_count
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.width())
    }

    pub fn group_size(&self) -> usize {
        self.output_width() / self.class_count()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.width()).sum()
    }

    /// Last-layer outputs for 64 lanes of inputs (one word per input bit).
    pub fn forward_lanes(&self, inputs: &[u64]) -> Vec<u64> {
        let mut prev = inputs.to_vec();
        for l in &self.layers {
            prev = (0..l.width())
                .map(|i| l.gates[i].eval_word(prev[l.a[i] as usize], prev[l.b[i] as usize]))
                .collect();
        }
        prev
    }

    /// Per-class popcounts for each of `lanes` lanes.
    pub fn group_counts_lanes(&self, outputs: &[u64], lanes: usize) -> Vec<Vec<usize>> {
        let g = self.group_size();
        (0..lanes)
            .map(|lane| {
                outputs
                    .chunks_exact(g)
                    .map(|grp| grp.iter().filter(|&&w| (w >> lane) & 1 == 1).count())
                    .collect()
            })
            .collect()
    }

    /// Group sums for one input vector.
    pub fn group_counts(&self, bits: &[bool]) -> Result<Vec<usize>> {
        self.check_width(bits.len())?;
        let lanes: Vec<u64> = bits.iter().map(|&b| b as u64).collect();
        Ok(self.group_counts_lanes(&self.forward_lanes(&lanes), 1).remove(0))
    }

    fn check_width(&self, n: usize) -> Result<()> {
        if n != self.input_bits() {
            return Err(Error::domain(format!("input has {n} bits, network expects {}", self.input_bits())));
        }
        Ok(())
    }

    /// Predicted class for one input vector.
    pub fn predict(&self, bits: &[bool]) -> Result<usize> {
        Ok(crate::train::argmax_first(&self.group_counts(bits)?))
    }

    /// Predicted classes for many input vectors.
    pub fn predict_many(&self, inputs: &[Vec<bool>]) -> Result<Vec<usize>> {
        for x in inputs {
            self.check_width(x.len())?;
        }
        Ok(inputs
            .par_chunks(64)
            .flat_map_iter(|chunk| {
                let mut lanes = vec![0u64; self.input_bits()];
                for (lane, x) in chunk.iter().enumerate() {
                    for (j, &bit) in x.iter().enumerate() {
                        lanes[j] |= (bit as u64) << lane;
                    }
                }
                let out = self.forward_lanes(&lanes);
                self.group_counts_lanes(&out, chunk.len())
                    .into_iter()
                    .map(|c| crate::train::argmax_first(&c))
            })
            .collect())
    }

    /// Predicted classes for the dataset samples in `indices`.
    pub fn predict_indices(&self, data: &EncodedDataset, indices: &[usize]) -> Vec<usize> {
        indices
            .par_chunks(64)
            .flat_map_iter(|chunk| {
                let out = self.forward_lanes(&data.lanes(chunk));
                self.group_counts_lanes(&out, chunk.len())
                    .into_iter()
                    .map(|c| crate::train::argmax_first(&c))
            })
            .collect()
    }

    pub fn accuracy(&self, data: &EncodedDataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::domain("cannot evaluate on an empty dataset"));
        }
        let idx: Vec<usize> = (0..data.len()).collect();
        let pred = self.predict_indices(data, &idx);
        Ok(pred.iter().zip(data.labels()).filter(|(p, &l)| **p == l as usize).count() as f64 / data.len() as f64)
    }
}
