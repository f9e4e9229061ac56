//! JSON checkpoints.
//!
//! ```text
//! { "format": "lgnkit-model", "version": 1, "spec": {...}, "tau": 25.0,
//!   "layers": [ { "a": [..], "b": [..], "logits": [[16 reals], ..] }, .. ] }
//! ```

use serde::{Deserialize, Serialize};

use super::{SoftLayer, SoftLgn};
use crate::arch::ArchitectureSpec;
use crate::error::{Error, Result};
use crate::gate::GateWeights;
use crate::Scalar;

pub const CHECKPOINT_FORMAT: &str = "lgnkit-model";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointLayer {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub logits: Vec<[f64; 16]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCheckpoint {
    pub format: String,
    pub version: u32,
    pub spec: ArchitectureSpec,
    pub tau: f64,
    pub layers: Vec<CheckpointLayer>,
}

impl ModelCheckpoint {
    pub fn from_network<T: Scalar>(net: &SoftLgn<T>) -> Self {
        ModelCheckpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            spec: net.spec.clone(),
            tau: net.tau.as_f64(),
            layers: net
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    a: l.a.clone(),
                    b: l.b.clone(),
                    logits: l.weights.iter().map(|w| w.0.map(|v| v.as_f64())).collect(),
                })
                .collect(),
        }
    }

    pub fn into_network<T: Scalar>(self) -> Result<SoftLgn<T>> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::validation(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        self.spec.validate()?;
        let widths = self.spec.layer_widths();
        if widths.len() != self.layers.len() {
            return Err(Error::validation("layer count does not match the architecture"));
        }
        let mut prev = self.spec.input_bits;
        let mut layers = Vec::with_capacity(self.layers.len());
        for (l, w) in self.layers.into_iter().zip(widths) {
            if l.a.len() != w || l.b.len() != w || l.logits.len() != w {
                return Err(Error::validation("layer width does not match the architecture"));
            }
            if l.a.iter().chain(&l.b).any(|&i| i as usize >= prev) {
                return Err(Error::validation("wiring index out of range"));
            }
            prev = w;
            layers.push(SoftLayer {
                a: l.a,
                b: l.b,
                weights: l.logits.into_iter().map(|v| GateWeights(v.map(T::of))).collect(),
            });
        }
        Ok(SoftLgn {
            spec: self.spec,
            tau: T::of(self.tau),
            layers,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
