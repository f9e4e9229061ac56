//! The IDX container used by MNIST and FashionMNIST.
//!
//! Layout: two zero bytes, a type code (0x08 for unsigned bytes), the number
//! of dimensions, one big-endian u32 per dimension, then the payload.

use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxTensor {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

fn read_be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let chunk = bytes
        .get(offset..offset + 4)
        .ok_or_else(|| Error::parse(offset, format!("truncated header: need 4 bytes, {} left", bytes.len().saturating_sub(offset))))?;
    Ok(u32::from_be_bytes(chunk.try_into().unwrap()))
}

/// Parses an unsigned-byte IDX stream.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxTensor> {
    let magic = read_be_u32(bytes, 0)?;
    if magic >> 16 != 0 {
        return Err(Error::parse(0, format!("bad magic {magic:#010x}")));
    }
    let kind = (magic >> 8) & 0xff;
    if kind != 0x08 {
        return Err(Error::parse(2, format!("unsupported element type {kind:#04x}, only unsigned bytes are handled")));
    }
    let rank = (magic & 0xff) as usize;
    if rank == 0 {
        return Err(Error::parse(3, "zero-dimensional tensor"));
    }
    let mut dims = Vec::with_capacity(rank);
    for d in 0..rank {
        dims.push(read_be_u32(bytes, 4 + 4 * d)? as usize);
    }
    let header = 4 + 4 * rank;
    let expected = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::parse(4, "dimension product overflows"))?;
    let payload = &bytes[header..];
    if payload.len() < expected {
        return Err(Error::parse(
            bytes.len(),
            format!("truncated payload: {} of {expected} bytes present", payload.len()),
        ));
    }
    if payload.len() > expected {
        return Err(Error::parse(header + expected, format!("{} trailing bytes", payload.len() - expected)));
    }
    Ok(IdxTensor {
        dims,
        data: payload.to_vec(),
    })
}

/// Serializes an unsigned-byte tensor.
pub fn write_idx(tensor: &IdxTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * tensor.dims.len() + tensor.data.len());
    out.extend_from_slice(&(0x0800u32 | tensor.dims.len() as u32).to_be_bytes());
    for &d in &tensor.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&tensor.data);
    out
}
