//! Thermometer encoding of 8-bit intensities.
//!
//! With `b` bits, bit `k` (1-based) is set iff `pixel > k * 256 / (b + 1)`.
//! Comparisons are done in integers as `pixel * (b + 1) > k * 256`, so the
//! thresholds are exact. Encoded rows are pixel-major: bit `k` of pixel `p`
//! lands at index `p * b + (k - 1)`.

use super::{EncodedDataset, RawImages};
use crate::error::{Error, Result};

fn check_depth(b: u32) -> Result<()> {
    if (1..=8).contains(&b) {
        Ok(())
    } else {
        Err(Error::domain(format!("bit depth {b} outside [1, 8]")))
    }
}

/// Real-valued threshold for bit `k` of a `b`-bit code.
pub fn thermometer_threshold(k: u32, b: u32) -> f64 {
    k as f64 * 256.0 / (b as f64 + 1.0)
}

#[inline]
fn bit_set(pixel: u8, k: u32, b: u32) -> bool {
    pixel as u32 * (b + 1) > k * 256
}

/// Encodes one pixel into `b` monotone bits.
pub fn thermometer_encode(pixel: u8, b: u32) -> Result<Vec<bool>> {
    check_depth(b)?;
    Ok((1..=b).map(|k| bit_set(pixel, k, b)).collect())
}

/// Encodes every image at bit depth `b`.
pub fn encode_images(images: &RawImages, b: u32, class_count: usize) -> Result<EncodedDataset> {
    check_depth(b)?;
    let bits = images.pixel_count * b as usize;
    let mut ds = EncodedDataset::new(bits, class_count);
    let mut words = vec![0u64; bits.div_ceil(64)];
    for i in 0..images.len() {
        let label = images.labels[i];
        if label as usize >= class_count {
            return Err(Error::domain(format!("label {label} outside [0, {class_count})")));
        }
        words.iter_mut().for_each(|w| *w = 0);
        for (p, &px) in images.image(i).iter().enumerate() {
            for k in 1..=b {
                if bit_set(px, k, b) {
                    let j = p * b as usize + (k - 1) as usize;
                    words[j / 64] |= 1 << (j % 64);
                }
            }
        }
        ds.push_words(&words, label);
    }
    Ok(ds)
}
