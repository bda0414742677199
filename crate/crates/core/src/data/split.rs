use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::tensor::StreamRng;

/// Fold index for each instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub fold_assignments: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

/// Shuffles `0..n` with `seed` and cuts the permutation into `k` contiguous
/// chunks; the first `n % k` chunks get one extra instance.
pub fn make_splits(n: usize, k: usize, seed: u64) -> Result<SplitPlan> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::invalid(format!("{k} folds for only {n} instances")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut StreamRng::new(seed));

    let base = n / k;
    let extra = n % k;
    let mut fold_assignments = vec![0; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &i in &order[pos..pos + size] {
            fold_assignments[i] = fold;
        }
        pos += size;
    }
    Ok(SplitPlan {
        fold_assignments,
        k,
        seed,
    })
}

impl SplitPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.indices_where(|f| f == fold)
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.indices_where(|f| f != fold)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_assignments {
            sizes[f] += 1;
        }
        sizes
    }

    fn indices_where(&self, pred: impl Fn(usize) -> bool) -> Vec<usize> {
        self.fold_assignments
            .iter()
            .enumerate()
            .filter(|&(_, &f)| pred(f))
            .map(|(i, _)| i)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn even_split() {
        let plan = make_splits(10, 5, 1).unwrap();
        assert_eq!(plan.fold_sizes(), vec![2; 5]);
    }

    #[test]
    fn uneven_split_puts_remainder_first() {
        let plan = make_splits(11, 5, 1).unwrap();
        assert_eq!(plan.fold_sizes(), vec![3, 2, 2, 2, 2]);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        assert_eq!(
            make_splits(50, 5, 9).unwrap(),
            make_splits(50, 5, 9).unwrap()
        );
        assert_ne!(
            make_splits(50, 5, 9).unwrap(),
            make_splits(50, 5, 10).unwrap()
        );
    }

    #[test]
    fn invalid_fold_counts() {
        assert!(make_splits(3, 4, 0).is_err());
        assert!(make_splits(10, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_the_index_range(n in 2usize..200, k in 2usize..10, seed: u64) {
            prop_assume!(k <= n);
            let plan = make_splits(n, k, seed).unwrap();
            let sizes = plan.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut seen = vec![0u32; n];
            for f in 0..k {
                let test = plan.test_indices(f);
                let train = plan.train_indices(f);
                prop_assert_eq!(test.len() + train.len(), n);
                prop_assert!(test.iter().all(|i| !train.contains(i)));
                for i in test {
                    seen[i] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }
}
