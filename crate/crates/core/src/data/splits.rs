//! Stratified hold-out and k-fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub test: Vec<usize>,
    pub folds: Vec<Vec<usize>>,
}

impl SplitPlan {
    /// Training indices for fold `k`: every fold except `k`.
    pub fn train_for(&self, k: usize) -> Vec<usize> {
        self.folds
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .flat_map(|(_, f)| f.iter().copied())
            .collect()
    }

    pub fn validation_for(&self, k: usize) -> &[usize] {
        &self.folds[k]
    }

    pub fn train_pool(&self) -> Vec<usize> {
        self.folds.iter().flatten().copied().collect()
    }
}

/// Splits `labels.len()` samples into a stratified test set of
/// `round(test_fraction * N)` samples and `folds` near-equal folds.
///
/// Samples are shuffled within each class, then interleaved by their relative
/// rank within their class, so every prefix of the merged order carries each
/// class in close to its overall proportion.
pub fn make_splits(labels: &[u8], class_count: usize, seed: u64, folds: usize, test_fraction: f64) -> Result<SplitPlan> {
    let n = labels.len();
    if n < class_count {
        return Err(Error::domain(format!("{n} samples but {class_count} classes")));
    }
    if folds == 0 || !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::domain("need at least one fold and a test fraction in [0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class = vec![Vec::new(); class_count];
    for (i, &l) in labels.iter().enumerate() {
        let c = l as usize;
        if c >= class_count {
            return Err(Error::domain(format!("label {l} outside [0, {class_count})")));
        }
        by_class[c].push(i);
    }
    let mut keyed = Vec::with_capacity(n);
    for (c, members) in by_class.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        let m = members.len() as f64;
        for (r, &i) in members.iter().enumerate() {
            keyed.push(((r as f64 + 0.5) / m, c, i));
        }
    }
    keyed.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let order: Vec<usize> = keyed.into_iter().map(|(_, _, i)| i).collect();

    let n_test = (test_fraction * n as f64).round() as usize;
    let (test, rest) = order.split_at(n_test);
    if rest.len() < folds {
        return Err(Error::domain(format!("{} training samples cannot fill {folds} folds", rest.len())));
    }
    let mut out = vec![Vec::with_capacity(rest.len() / folds + 1); folds];
    for (pos, &i) in rest.iter().enumerate() {
        out[pos % folds].push(i);
    }
    Ok(SplitPlan {
        test: test.to_vec(),
        folds: out,
    })
}
