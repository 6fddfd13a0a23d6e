use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, CliResult};

/// Disjoint train / validation / test offsets over the entries of a tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitAssignment {
    /// Shuffles `0..total` with `seed` and cuts it at the rounded fractions.
    /// Each set is returned sorted.
    pub fn new(total: usize, fractions: [f64; 3], seed: u64) -> CliResult<Self> {
        if fractions.iter().any(|&f| !(f > 0.0 && f < 1.0)) || fractions.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(CliError::usage(format!("bad split fractions {fractions:?}")));
        }
        let sizes: Vec<usize> = fractions.iter().map(|f| (f * total as f64).round() as usize).collect();
        let n_train = sizes[0];
        let n_val = sizes[1].min(total - n_train);
        let n_test = sizes[2].min(total - n_train - n_val);
        if n_train == 0 || n_val == 0 || n_test == 0 {
            return Err(CliError::usage(format!("{total} entries are too few for split {fractions:?}")));
        }
        let mut idx: Vec<usize> = (0..total).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Keep the split stream apart from the data stream that shares the seed.
        rng.set_stream(1);
        idx.shuffle(&mut rng);
        let cut = |a: usize, b: usize| {
            let mut v = idx[a..b].to_vec();
            v.sort_unstable();
            v
        };
        Ok(SplitAssignment {
            train: cut(0, n_train),
            validation: cut(n_train, n_train + n_val),
            test: cut(n_train + n_val, n_train + n_val + n_test),
        })
    }

    pub fn is_disjoint(&self) -> bool {
        let mut seen = HashSet::new();
        self.train
            .iter()
            .chain(&self.validation)
            .chain(&self.test)
            .all(|&k| seen.insert(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_split_sizes() {
        let s = SplitAssignment::new(8000, [0.1, 0.45, 0.45], 3).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (800, 3600, 3600));
        assert!(s.is_disjoint());
        assert_eq!(s, SplitAssignment::new(8000, [0.1, 0.45, 0.45], 3).unwrap());
        assert_ne!(s, SplitAssignment::new(8000, [0.1, 0.45, 0.45], 4).unwrap());
    }

    #[test]
    fn rounding_stays_within_one_entry() {
        for total in [7, 33, 101, 999] {
            let f = [0.13, 0.41, 0.46];
            let s = SplitAssignment::new(total, f, 0).unwrap();
            for (n, f) in [s.train.len(), s.validation.len(), s.test.len()].into_iter().zip(f) {
                assert!((n as f64 - f * total as f64).abs() <= 1.0);
            }
            assert!(s.is_disjoint());
            assert!(s.train.iter().chain(&s.validation).chain(&s.test).all(|&k| k < total));
        }
    }

    #[test]
    fn rejects_bad_fractions() {
        assert!(SplitAssignment::new(100, [0.5, 0.5, 0.5], 0).is_err());
        assert!(SplitAssignment::new(100, [0.0, 0.5, 0.5], 0).is_err());
        assert!(SplitAssignment::new(3, [0.1, 0.1, 0.1], 0).is_err());
    }
}
