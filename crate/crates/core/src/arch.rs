//! Architecture descriptions: the hyperparameter tuple that defines one network.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One candidate network.
///
/// Layer order is `[front cap]`, then `depth` layers of `layer_width` gates, then
/// `[end cap]` of `round(layer_width * end_fraction)` gates. The final layer is
/// rounded up to a multiple of `class_count` so that it splits into equal groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureSpec {
    /// Bits per pixel (`b`).
    pub bit_depth: u32,
    /// Baseline layer width (`L_W`).
    pub layer_width: usize,
    /// Number of baseline layers (`L_D`).
    pub depth: usize,
    /// Width of the optional front cap layer (`L_front`).
    #[serde(default)]
    pub front_width: Option<usize>,
    /// End cap fraction (`f_end`); the end cap has `round(L_W * f_end)` gates.
    #[serde(default)]
    pub end_fraction: Option<f64>,
    pub class_count: usize,
    #[serde(default)]
    pub wiring_seed: u64,
    /// Width of the encoded input vector (`#bits`).
    pub input_bits: usize,
}

impl ArchitectureSpec {
    /// A baseline (uncapped) architecture for `pixels` inputs encoded at `bit_depth`.
    pub fn baseline(pixels: usize, bit_depth: u32, layer_width: usize, depth: usize, class_count: usize) -> Self {
        ArchitectureSpec {
            bit_depth,
            layer_width,
            depth,
            front_width: None,
            end_fraction: None,
            class_count,
            wiring_seed: 0,
            input_bits: pixels * bit_depth as usize,
        }
    }

    pub fn with_front(mut self, width: usize) -> Self {
        self.front_width = Some(width);
        self
    }

    pub fn with_end(mut self, fraction: f64) -> Self {
        self.end_fraction = Some(fraction);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.wiring_seed = seed;
        self
    }

    /// `L_end` before rounding to a multiple of the class count.
    pub fn end_width(&self) -> usize {
        match self.end_fraction {
            Some(f) => (self.layer_width as f64 * f).round() as usize,
            None => self.layer_width,
        }
    }

    /// Width of the final layer after rounding up to a multiple of `class_count`.
    pub fn output_width(&self) -> usize {
        let l = self.end_width();
        if self.class_count == 0 {
            return l;
        }
        l.div_ceil(self.class_count) * self.class_count
    }

    pub fn group_size(&self) -> usize {
        self.output_width() / self.class_count.max(1)
    }

    /// Widths of every gate layer, input excluded.
    pub fn layer_widths(&self) -> Vec<usize> {
        let mut widths = Vec::with_capacity(self.depth + 2);
        if let Some(f) = self.front_width {
            widths.push(f);
        }
        widths.extend(std::iter::repeat_n(self.layer_width, self.depth));
        if self.end_fraction.is_some() {
            widths.push(self.end_width());
        }
        if let Some(last) = widths.last_mut() {
            *last = last.div_ceil(self.class_count.max(1)) * self.class_count.max(1);
        }
        widths
    }

    pub fn layer_count(&self) -> usize {
        self.depth + self.front_width.is_some() as usize + self.end_fraction.is_some() as usize
    }

    /// Total number of logic gates (`#Gates`).
    pub fn total_gates(&self) -> usize {
        self.layer_widths().iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.bit_depth) {
            return Err(Error::validation(format!("bit depth {} outside [1, 8]", self.bit_depth)));
        }
        if self.depth == 0 {
            return Err(Error::validation("depth must be at least 1"));
        }
        if self.layer_width == 0 {
            return Err(Error::validation("layer width must be positive"));
        }
        if self.class_count < 2 {
            return Err(Error::validation("at least two classes are required"));
        }
        if self.input_bits < 2 {
            return Err(Error::validation("at least two input bits are required"));
        }
        if let Some(f) = self.end_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::validation(format!("end fraction {f} outside (0, 1]")));
            }
        }
        if self.front_width == Some(0) {
            return Err(Error::validation("front cap width must be positive"));
        }
        let widths = self.layer_widths();
        if widths[0] < 2 && widths.len() > 1 {
            return Err(Error::validation("hidden layers need at least two gates"));
        }
        for (i, pair) in widths.windows(2).enumerate() {
            if pair[1] * 2 < pair[0] {
                return Err(Error::validation(format!(
                    "layer {} has {} gates, less than half of the {} in layer {}",
                    i + 1,
                    pair[1],
                    pair[0],
                    i
                )));
            }
        }
        if self.end_width() < self.class_count {
            return Err(Error::validation(format!(
                "final layer of {} gates cannot feed {} classes",
                self.end_width(),
                self.class_count
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_with_caps() {
        let s = ArchitectureSpec::baseline(784, 1, 8000, 3, 10).with_front(2000).with_end(0.5);
        assert_eq!(s.layer_widths(), vec![2000, 8000, 8000, 8000, 4000]);
        assert_eq!(s.total_gates(), 30000);
        assert_eq!(s.group_size(), 400);
        s.validate().unwrap();
    }

    #[test]
    fn last_layer_rounds_up_to_class_multiple() {
        let s = ArchitectureSpec::baseline(16, 1, 64, 2, 10);
        assert_eq!(s.layer_widths(), vec![64, 70]);
        assert_eq!(s.group_size(), 7);
    }

    #[test]
    fn half_width_rule() {
        let s = ArchitectureSpec::baseline(784, 1, 8000, 3, 10).with_end(0.4);
        assert!(matches!(s.validate(), Err(Error::Validation(_))));
        let s = ArchitectureSpec::baseline(784, 1, 8000, 3, 10).with_front(2000);
        s.validate().unwrap();
        let s = ArchitectureSpec::baseline(784, 9, 8000, 3, 10);
        assert!(s.validate().is_err());
    }
}
