//! On-disk cache of encoded datasets.
//!
//! Little-endian layout: the magic `LGNB`, then u32 version, sample count,
//! bits per sample and class count, then one label byte per sample, then each
//! row packed LSB-first into `ceil(bits / 8)` bytes.

use super::EncodedDataset;
use crate::error::{Error, Result};

pub const CACHE_MAGIC: [u8; 4] = *b"LGNB";
pub const CACHE_VERSION: u32 = 1;
const HEADER: usize = 20;

pub fn write_cache(ds: &EncodedDataset) -> Vec<u8> {
    let row_bytes = ds.bit_count().div_ceil(8);
    let mut out = Vec::with_capacity(HEADER + ds.len() * (1 + row_bytes));
    out.extend_from_slice(&CACHE_MAGIC);
    for v in [CACHE_VERSION, ds.len() as u32, ds.bit_count() as u32, ds.class_count() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(ds.labels());
    for i in 0..ds.len() {
        let bytes: Vec<u8> = ds.row_words(i).iter().flat_map(|w| w.to_le_bytes()).collect();
        out.extend_from_slice(&bytes[..row_bytes]);
    }
    out
}

pub fn read_cache(bytes: &[u8]) -> Result<EncodedDataset> {
    if bytes.len() < HEADER {
        return Err(Error::parse(bytes.len(), "truncated cache header"));
    }
    if bytes[..4] != CACHE_MAGIC {
        return Err(Error::parse(0, "bad cache magic"));
    }
    let field = |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().unwrap()) as usize;
    if field(0) as u32 != CACHE_VERSION {
        return Err(Error::parse(4, format!("unsupported cache version {}", field(0))));
    }
    let (n, bits, classes) = (field(1), field(2), field(3));
    let row_bytes = bits.div_ceil(8);
    let need = HEADER + n + n * row_bytes;
    if bytes.len() != need {
        return Err(Error::parse(bytes.len().min(need), format!("cache holds {} bytes, header implies {need}", bytes.len())));
    }
    let labels = &bytes[HEADER..HEADER + n];
    let mut ds = EncodedDataset::new(bits, classes);
    let mut buf = vec![0u8; bits.div_ceil(64) * 8];
    for (i, &label) in labels.iter().enumerate() {
        if label as usize >= classes {
            return Err(Error::parse(HEADER + i, format!("label {label} outside [0, {classes})")));
        }
        let start = HEADER + n + i * row_bytes;
        buf.iter_mut().for_each(|b| *b = 0);
        buf[..row_bytes].copy_from_slice(&bytes[start..start + row_bytes]);
        let words: Vec<u64> = buf.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
        ds.push_words(&words, label);
    }
    Ok(ds)
}
