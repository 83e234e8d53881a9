//! K-fold partitioning shared by the model-selection routines.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{self, purpose};

/// One train/validation split of `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Seeded k-fold split: indices are shuffled once, then cut into `folds`
/// contiguous chunks whose sizes differ by at most one.
pub fn kfold(len: usize, folds: usize, seed: u64) -> Result<Vec<Fold>> {
    if folds < 2 {
        return Err(Error::InvalidConfig(
            "cross-validation needs at least 2 folds".into(),
        ));
    }
    if len < folds {
        return Err(Error::InsufficientData {
            requested: folds,
            available: len,
        });
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut rng::stream(seed, purpose::FOLDS));
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = len / folds + usize::from(f < len % folds);
        let validation = order[start..start + size].to_vec();
        let train = order[..start]
            .iter()
            .chain(&order[start + size..])
            .copied()
            .collect();
        out.push(Fold { train, validation });
        start += size;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_the_indices() {
        let folds = kfold(23, 5, 3).unwrap();
        let mut seen: Vec<usize> = folds.iter().flat_map(|f| f.validation.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..23).collect::<Vec<_>>());
        for f in &folds {
            assert_eq!(f.train.len() + f.validation.len(), 23);
            assert!(f.train.iter().all(|i| !f.validation.contains(i)));
        }
    }

    #[test]
    fn rejects_bad_fold_counts() {
        assert!(kfold(10, 1, 0).is_err());
        assert!(kfold(3, 4, 0).is_err());
    }
}
