use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Example, TaskError};
use crate::rng;

/// Default held-out size used for rewards.
pub const DEFAULT_HELDOUT: usize = 150;
/// Range the default held-out size is clamped into.
pub const HELDOUT_RANGE: (usize, usize) = (60, 200);
/// Predefined test sets larger than this are subsampled.
pub const MAX_TEST: usize = 1000;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Cap on the training pool (held-out examples included).
    #[serde(default)]
    pub train_size: Option<usize>,
    /// Explicit test size; otherwise half the pool, or the whole predefined
    /// test set up to [`MAX_TEST`].
    #[serde(default)]
    pub test_size: Option<usize>,
    /// Explicit held-out size; otherwise [`DEFAULT_HELDOUT`] clamped.
    #[serde(default)]
    pub heldout_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    /// Examples used to collect errors.
    pub train: Vec<Example>,
    /// Training examples reserved for rewards.
    pub heldout: Vec<Example>,
    pub test: Vec<Example>,
    pub seed: u64,
}

/// Held-out size for a training pool when none is configured: the default,
/// capped at half the pool, then clamped into [`HELDOUT_RANGE`].
pub fn default_heldout_size(train_pool: usize) -> usize {
    DEFAULT_HELDOUT.min(train_pool / 2).clamp(HELDOUT_RANGE.0, HELDOUT_RANGE.1)
}

/// Shuffles `pool` with `seed` and carves out test, held-out and train sets.
pub fn split_dataset(
    pool: &[Example],
    predefined_test: Option<&[Example]>,
    config: &SplitConfig,
    seed: u64,
) -> Result<DatasetSplit, TaskError> {
    let mut seen = HashSet::new();
    for ex in pool.iter().chain(predefined_test.unwrap_or_default()) {
        if !seen.insert(ex.id.as_str()) {
            return Err(TaskError::DuplicateId(ex.id.clone()));
        }
    }

    let mut rng = rng::seeded(seed);
    let mut shuffled = pool.to_vec();
    shuffled.shuffle(&mut rng);

    let (test, rest) = match predefined_test {
        Some(given) => {
            let mut test = given.to_vec();
            test.shuffle(&mut rng);
            let n = config.test_size.unwrap_or(MAX_TEST.min(test.len()));
            if n > test.len() {
                return Err(TaskError::InsufficientData { split: "test", needed: n, available: test.len() });
            }
            test.truncate(n);
            (test, shuffled)
        }
        None => {
            let n = config.test_size.unwrap_or(shuffled.len() / 2);
            if n > shuffled.len() {
                return Err(TaskError::InsufficientData { split: "test", needed: n, available: shuffled.len() });
            }
            let rest = shuffled.split_off(n);
            (shuffled, rest)
        }
    };

    let mut train_pool = rest;
    if let Some(n) = config.train_size {
        if n > train_pool.len() {
            return Err(TaskError::InsufficientData { split: "train", needed: n, available: train_pool.len() });
        }
        train_pool.truncate(n);
    }

    let heldout_n = config.heldout_size.unwrap_or_else(|| default_heldout_size(train_pool.len()));
    if heldout_n == 0 {
        return Err(TaskError::InsufficientData { split: "heldout", needed: 1, available: 0 });
    }
    // At least one example must stay behind for error collection.
    if heldout_n >= train_pool.len() {
        return Err(TaskError::InsufficientData { split: "train", needed: heldout_n + 1, available: train_pool.len() });
    }
    let train = train_pool.split_off(heldout_n);
    Ok(DatasetSplit { train, heldout: train_pool, test, seed })
}
