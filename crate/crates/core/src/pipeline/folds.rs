use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A seeded assignment of trials to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index of each trial.
    pub assignments: Vec<usize>,
    pub seed: u64,
    /// False when some class had fewer than `k` trials and the plan fell
    /// back to an unstratified split.
    pub stratified: bool,
}

impl FoldPlan {
    /// (train indices, test indices) of fold `f`.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &a) in self.assignments.iter().enumerate() {
            if a == f {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Stratified k-fold plan: each class is shuffled and the classes are dealt
/// round-robin into folds, so fold sizes differ by at most one overall.
pub fn kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    let trials = labels.len();
    if k < 2 || k > trials {
        return Err(Error::InvalidFolds { k, trials });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let stratified = by_class.iter().all(|c| c.is_empty() || c.len() >= k);

    let order: Vec<usize> = if stratified {
        by_class
            .into_iter()
            .flat_map(|mut members| {
                members.shuffle(&mut rng);
                members
            })
            .collect()
    } else {
        let mut all: Vec<usize> = (0..trials).collect();
        all.shuffle(&mut rng);
        all
    };
    let mut assignments = vec![0; trials];
    for (pos, &trial) in order.iter().enumerate() {
        assignments[trial] = pos % k;
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
        stratified,
    })
}
