use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DatasetError;

/// Record-to-fold mapping produced by [`kfold_split`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles record indices under `seed` and deals them round-robin into `k`
/// folds.
pub fn kfold_split(n_records: usize, k: usize, seed: u64) -> Result<FoldAssignment, DatasetError> {
    if k < 2 || n_records < k {
        return Err(DatasetError::BadK { k, n: n_records });
    }
    let mut perm: Vec<usize> = (0..n_records).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n_records];
    for (slot, &idx) in perm.iter().enumerate() {
        fold_of[idx] = slot % k;
    }
    Ok(FoldAssignment { k, seed, fold_of })
}
