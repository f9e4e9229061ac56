//! Dataset ingestion, thermometer encoding and cross-validation splits.

mod cache;
mod cifar;
mod encode;
mod idx;
mod splits;

pub use cache::{read_cache, write_cache, CACHE_MAGIC, CACHE_VERSION};
pub use cifar::{load_cifar10_grayscale, CIFAR_RECORD_BYTES};
pub use encode::{encode_images, thermometer_encode, thermometer_threshold};
pub use idx::{parse_idx, write_idx, IdxTensor, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use splits::{make_splits, SplitPlan};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Reads an IDX image file and its IDX label file.
pub fn load_idx_files(images: &Path, labels: &Path) -> Result<RawImages> {
    let img = parse_idx(&read_file(images)?)?;
    let lab = parse_idx(&read_file(labels)?)?;
    RawImages::from_idx(&img, &lab)
}

/// Reads and concatenates CIFAR-10 binary batches.
pub fn load_cifar10_files(paths: &[&Path]) -> Result<RawImages> {
    let mut bytes = Vec::new();
    for p in paths {
        bytes.extend(read_file(p)?);
    }
    load_cifar10_grayscale(&bytes)
}

/// Reads an encoded dataset cache file.
pub fn load_cache_file(path: &Path) -> Result<EncodedDataset> {
    read_cache(&read_file(path)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetName {
    Mnist,
    FashionMnist,
    Cifar10,
}

/// Static description of a dataset at a chosen bit depth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: DatasetName,
    pub pixel_count: usize,
    pub class_count: usize,
    pub bit_depth: u32,
}

impl DatasetSpec {
    pub fn new(name: DatasetName, bit_depth: u32) -> Self {
        let pixel_count = match name {
            DatasetName::Mnist | DatasetName::FashionMnist => 784,
            DatasetName::Cifar10 => 1024,
        };
        DatasetSpec {
            name,
            pixel_count,
            class_count: 10,
            bit_depth,
        }
    }

    /// Encoded input width `pixel_count * b`.
    pub fn input_bits(&self) -> usize {
        self.pixel_count * self.bit_depth as usize
    }
}

/// Decoded 8-bit images with labels.
#[derive(Clone, Debug, PartialEq)]
pub struct RawImages {
    pub pixel_count: usize,
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
}

impl RawImages {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        &self.pixels[i * self.pixel_count..(i + 1) * self.pixel_count]
    }

    /// Pairs an IDX image tensor with an IDX label tensor.
    pub fn from_idx(images: &IdxTensor, labels: &IdxTensor) -> Result<Self> {
        if images.dims.is_empty() || labels.dims.len() != 1 {
            return Err(Error::domain("expected an image tensor and a rank-1 label tensor"));
        }
        if images.dims[0] != labels.dims[0] {
            return Err(Error::domain(format!(
                "{} images but {} labels",
                images.dims[0], labels.dims[0]
            )));
        }
        Ok(RawImages {
            pixel_count: images.dims[1..].iter().product(),
            pixels: images.data.clone(),
            labels: labels.data.clone(),
        })
    }

    /// The first `n` samples.
    pub fn truncate(mut self, n: usize) -> Self {
        let n = n.min(self.len());
        self.pixels.truncate(n * self.pixel_count);
        self.labels.truncate(n);
        self
    }
}

/// Bit-packed encoded inputs with labels; rows are LSB-first 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedDataset {
    bit_count: usize,
    class_count: usize,
    words_per_row: usize,
    rows: Vec<u64>,
    labels: Vec<u8>,
}

impl EncodedDataset {
    pub fn new(bit_count: usize, class_count: usize) -> Self {
        EncodedDataset {
            bit_count,
            class_count,
            words_per_row: bit_count.div_ceil(64),
            rows: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Builds a dataset from explicit bit rows.
    pub fn from_rows(bit_count: usize, class_count: usize, rows: &[Vec<bool>], labels: &[u8]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::domain("row and label counts differ"));
        }
        let mut ds = EncodedDataset::new(bit_count, class_count);
        for (row, &label) in rows.iter().zip(labels) {
            ds.push(row, label)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, bits: &[bool], label: u8) -> Result<()> {
        if bits.len() != self.bit_count {
            return Err(Error::domain(format!(
                "row has {} bits, expected {}",
                bits.len(),
                self.bit_count
            )));
        }
        if label as usize >= self.class_count {
            return Err(Error::domain(format!(
                "label {label} outside [0, {})",
                self.class_count
            )));
        }
        let start = self.rows.len();
        self.rows.resize(start + self.words_per_row, 0);
        for (j, &bit) in bits.iter().enumerate() {
            if bit {
                self.rows[start + j / 64] |= 1 << (j % 64);
            }
        }
        self.labels.push(label);
        Ok(())
    }

    pub(crate) fn push_words(&mut self, words: &[u64], label: u8) {
        debug_assert_eq!(words.len(), self.words_per_row);
        self.rows.extend_from_slice(words);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn bit_count(&self) -> usize {
        self.bit_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    #[inline]
    pub fn bit(&self, i: usize, j: usize) -> bool {
        (self.rows[i * self.words_per_row + j / 64] >> (j % 64)) & 1 == 1
    }

    pub fn row_bits(&self, i: usize) -> Vec<bool> {
        (0..self.bit_count).map(|j| self.bit(i, j)).collect()
    }

    /// Writes sample `i` as 0/1 reals into `out`.
    pub fn fill_reals<T: crate::Scalar>(&self, i: usize, out: &mut [T]) {
        for (j, o) in out.iter_mut().enumerate().take(self.bit_count) {
            *o = if self.bit(i, j) { T::one() } else { T::zero() };
        }
    }

    /// Transposes up to 64 samples into one lane word per input bit.
    pub fn lanes(&self, samples: &[usize]) -> Vec<u64> {
        assert!(samples.len() <= 64);
        let mut out = vec![0u64; self.bit_count];
        for (lane, &i) in samples.iter().enumerate() {
            let row = self.row_words(i);
            for (j, o) in out.iter_mut().enumerate() {
                *o |= ((row[j / 64] >> (j % 64)) & 1) << lane;
            }
        }
        out
    }

    pub fn subset(&self, indices: &[usize]) -> EncodedDataset {
        let mut ds = EncodedDataset::new(self.bit_count, self.class_count);
        for &i in indices {
            ds.push_words(self.row_words(i), self.labels[i]);
        }
        ds
    }
}
