//! Popcount trees built by column compression.
//!
//! Bits of one weight are kept in a column ordered by arrival level. A column
//! holding an even number of bits first sends its two earliest into a half
//! adder; after that the three earliest go into a full adder until one bit is
//! left. Putting the half adder first keeps depth non-decreasing in `n`.
//! Columns are processed from the least significant upward, so carries are in
//! place before their column is reduced. For `n` inputs this uses `n - ceil(log2(n + 1))` full adders and
//! one half adder for every `j` where `n >> j` is even and at least 2.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Receives the cells of a tree as they are built.
pub(crate) trait AdderSink {
    type Sig: Copy;
    /// `level` is the delay of the new cell's outputs, in adder cells.
    fn full_adder(&mut self, a: Self::Sig, b: Self::Sig, c: Self::Sig, level: u32) -> (Self::Sig, Self::Sig);
    fn half_adder(&mut self, a: Self::Sig, b: Self::Sig, level: u32) -> (Self::Sig, Self::Sig);
}

/// Reduces `bits` (all arriving at level 0) to a binary count, LSB first.
/// Returns the output bits and their arrival levels.
pub(crate) fn compress<S: AdderSink>(sink: &mut S, bits: &[S::Sig]) -> Vec<(S::Sig, u32)> {
    let mut seq = 0u64;
    let mut columns: Vec<BinaryHeap<Reverse<(u32, u64, usize)>>> = vec![BinaryHeap::new()];
    // signals live in a side table so heap entries stay `Ord`
    let mut table: Vec<S::Sig> = Vec::with_capacity(bits.len() * 2);
    for &b in bits {
        table.push(b);
        columns[0].push(Reverse((0, seq, table.len() - 1)));
        seq += 1;
    }
    let mut out = Vec::new();
    let mut j = 0;
    while j < columns.len() {
        // an even column needs exactly one half adder; spend it on the earliest pair
        let mut half = columns[j].len() >= 2 && columns[j].len() % 2 == 0;
        while columns[j].len() >= 2 {
            let take = if half { 2 } else { 3 };
            half = false;
            let picked: Vec<(u32, usize)> = (0..take)
                .map(|_| {
                    let Reverse((lvl, _, k)) = columns[j].pop().unwrap();
                    (lvl, k)
                })
                .collect();
            let level = picked.iter().map(|p| p.0).max().unwrap() + 1;
            let (s, c) = if take == 3 {
                sink.full_adder(table[picked[0].1], table[picked[1].1], table[picked[2].1], level)
            } else {
                sink.half_adder(table[picked[0].1], table[picked[1].1], level)
            };
            table.push(s);
            columns[j].push(Reverse((level, seq, table.len() - 1)));
            table.push(c);
            if columns.len() == j + 1 {
                columns.push(BinaryHeap::new());
            }
            columns[j + 1].push(Reverse((level, seq + 1, table.len() - 1)));
            seq += 2;
        }
        if let Some(Reverse((lvl, _, k))) = columns[j].pop() {
            out.push((table[k], lvl));
        }
        j += 1;
    }
    out
}

/// Cell-level description of a tree, without signals attached.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PopcountShape {
    pub full_adders: usize,
    pub half_adders: usize,
    pub depth: u32,
    pub width: usize,
    /// `(level, input ids)` per cell; ids below `n` are tree inputs, and cell
    /// `c` produces ids `n + 2c` (sum) and `n + 2c + 1` (carry).
    pub cells: Vec<(u32, Vec<usize>)>,
    pub outputs: Vec<usize>,
    pub inputs: usize,
}

struct ShapeSink<'a> {
    shape: &'a mut PopcountShape,
}

impl AdderSink for ShapeSink<'_> {
    type Sig = usize;

    fn full_adder(&mut self, a: usize, b: usize, c: usize, level: u32) -> (usize, usize) {
        self.shape.full_adders += 1;
        self.push(vec![a, b, c], level)
    }

    fn half_adder(&mut self, a: usize, b: usize, level: u32) -> (usize, usize) {
        self.shape.half_adders += 1;
        self.push(vec![a, b], level)
    }
}

impl ShapeSink<'_> {
    fn push(&mut self, ins: Vec<usize>, level: u32) -> (usize, usize) {
        let id = self.shape.inputs + 2 * self.shape.cells.len();
        self.shape.cells.push((level, ins));
        (id, id + 1)
    }
}

impl PopcountShape {
    pub fn build(n: usize) -> Self {
        let mut shape = PopcountShape {
            inputs: n,
            ..Default::default()
        };
        let ids: Vec<usize> = (0..n).collect();
        let out = compress(&mut ShapeSink { shape: &mut shape }, &ids);
        shape.width = out.len();
        shape.depth = out.iter().map(|o| o.1).max().unwrap_or(0);
        shape.outputs = out.into_iter().map(|o| o.0).collect();
        shape
    }

    /// Signals alive across a register placed after level `cut`: produced at
    /// or before `cut` and read after it (tree outputs count as read later).
    pub fn live_after(&self, cut: u32) -> usize {
        let total = self.inputs + 2 * self.cells.len();
        let level_of = |id: usize| if id < self.inputs { 0 } else { self.cells[(id - self.inputs) / 2].0 };
        let mut last = vec![0u32; total];
        for (lvl, ins) in &self.cells {
            for &i in ins {
                last[i] = last[i].max(*lvl);
            }
        }
        for &o in &self.outputs {
            last[o] = u32::MAX;
        }
        (0..total).filter(|&id| level_of(id) <= cut && last[id] > cut).count()
    }
}

/// Output width of a count of `n` bits: `ceil(log2(n + 1))`.
pub fn count_width(n: usize) -> usize {
    (usize::BITS - n.leading_zeros()) as usize
}

/// Full adders in an `n`-input tree.
pub fn full_adder_count(n: usize) -> usize {
    n - count_width(n)
}

/// Half adders in an `n`-input tree.
pub fn half_adder_count(n: usize) -> usize {
    (0..usize::BITS).filter(|&j| (n >> j) >= 2 && (n >> j) % 2 == 0).count()
}
