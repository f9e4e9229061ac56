//! CIFAR-10 binary batches, converted to 8-bit luma.

use super::RawImages;
use crate::error::{Error, Result};

/// One label byte followed by 1024 bytes each of R, G and B.
pub const CIFAR_RECORD_BYTES: usize = 1 + 3 * 1024;

/// Decodes a concatenation of CIFAR-10 records into grayscale images.
pub fn load_cifar10_grayscale(bytes: &[u8]) -> Result<RawImages> {
    if bytes.is_empty() {
        return Err(Error::parse(0, "empty CIFAR-10 stream"));
    }
    if bytes.len() % CIFAR_RECORD_BYTES != 0 {
        let whole = bytes.len() / CIFAR_RECORD_BYTES;
        return Err(Error::parse(
            whole * CIFAR_RECORD_BYTES,
            format!("truncated record: {} stray bytes", bytes.len() % CIFAR_RECORD_BYTES),
        ));
    }
    let n = bytes.len() / CIFAR_RECORD_BYTES;
    let mut pixels = Vec::with_capacity(n * 1024);
    let mut labels = Vec::with_capacity(n);
    for (r, rec) in bytes.chunks_exact(CIFAR_RECORD_BYTES).enumerate() {
        if rec[0] > 9 {
            return Err(Error::parse(r * CIFAR_RECORD_BYTES, format!("label {} out of range", rec[0])));
        }
        labels.push(rec[0]);
        let (red, rest) = rec[1..].split_at(1024);
        let (green, blue) = rest.split_at(1024);
        pixels.extend((0..1024).map(|p| luma(red[p], green[p], blue[p])));
    }
    Ok(RawImages {
        pixel_count: 1024,
        pixels,
        labels,
    })
}

fn luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
    y.round().clamp(0.0, 255.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_channels_and_gray() {
        assert_eq!(luma(255, 0, 0), 76);
        assert_eq!(luma(0, 255, 0), 150);
        assert_eq!(luma(0, 0, 255), 29);
        for v in [0u8, 1, 100, 200, 255] {
            assert_eq!(luma(v, v, v), v);
        }
    }

    #[test]
    fn one_record() {
        let mut rec = vec![3u8];
        rec.extend(std::iter::repeat_n(255u8, 1024));
        rec.extend(std::iter::repeat_n(0u8, 2048));
        let imgs = load_cifar10_grayscale(&rec).unwrap();
        assert_eq!(imgs.labels, vec![3]);
        assert!(imgs.pixels.iter().all(|&p| p == 76));
        assert!(load_cifar10_grayscale(&rec[..100]).is_err());
    }
}
