use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::record::PileDrivingRecord;
use crate::error::{Error, Result};

/// A seeded 80/10/10 partition of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<PileDrivingRecord>,
    pub validation: Vec<PileDrivingRecord>,
    pub test: Vec<PileDrivingRecord>,
    pub seed: u64,
}

/// Sizes `(floor(0.8 n), floor(0.1 n), remainder)`.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = n * 8 / 10;
    let validation = n / 10;
    (train, validation, n - train - validation)
}

/// Shuffles a copy of `records` with a seeded stream, then slices it
/// contiguously into train, validation and test.
pub fn split(records: &[PileDrivingRecord], seed: u64) -> Result<DatasetSplit> {
    let n = records.len();
    if n < 10 {
        return Err(Error::Split { n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (n_train, n_val, _) = split_sizes(n);
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i]).collect::<Vec<_>>();
    Ok(DatasetSplit {
        train: pick(&order[..n_train]),
        validation: pick(&order[n_train..n_train + n_val]),
        test: pick(&order[n_train + n_val..]),
        seed,
    })
}

impl DatasetSplit {
    /// The same records used as train, validation and test.
    pub fn identical(records: Vec<PileDrivingRecord>, seed: u64) -> Self {
        Self {
            train: records.clone(),
            validation: records.clone(),
            test: records,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{generate_synthetic, GeneratorParams};

    #[test]
    fn sizes() {
        assert_eq!(split_sizes(100), (80, 10, 10));
        assert_eq!(split_sizes(1034), (827, 103, 104));
        assert_eq!(split_sizes(1018), (814, 101, 103));
        assert_eq!(split_sizes(2000), (1600, 200, 200));
    }

    #[test]
    fn too_small() {
        let recs = generate_synthetic(9, &GeneratorParams::default());
        assert!(matches!(split(&recs, 1), Err(Error::Split { n: 9 })));
    }

    #[test]
    fn seeded_and_exhaustive() {
        let recs = generate_synthetic(100, &GeneratorParams::default());
        let a = split(&recs, 5).unwrap();
        let b = split(&recs, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.train.len(), a.validation.len(), a.test.len()), (80, 10, 10));
        let c = split(&recs, 6).unwrap();
        assert_ne!(a.train, c.train);
    }
}
