//! Deterministic train/val/test assignment.
//!
//! Every record index is ranked by a hash of (master seed, group, index) and
//! the ranked list is sliced, so the partition is a pure function of the
//! manifest fields and split sizes stay within one record of the exact
//! fractions.

use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::sampler::StateGroup;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Fractions of each split; must sum to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitFractions {
    /// The 90/5/5 split used by training corpora.
    pub const STANDARD: SplitFractions = SplitFractions {
        train: 0.90,
        val: 0.05,
        test: 0.05,
    };

    /// Evaluation corpora are held out in full.
    pub const ALL_TEST: SplitFractions = SplitFractions {
        train: 0.0,
        val: 0.0,
        test: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        let sum = self.train + self.val + self.test;
        if (sum - 1.0).abs() > 1e-9 || self.train < 0.0 || self.val < 0.0 || self.test < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "split fractions {self:?} do not sum to 1"
            )));
        }
        Ok(())
    }
}

const SPLIT_STREAM_TAG: u64 = 0x53504c49; // "SPLI"

/// Split for every record index of one group, in index order.
pub fn assign_splits(
    master_seed: u64,
    group: StateGroup,
    count: usize,
    fractions: SplitFractions,
) -> Result<Vec<Split>> {
    fractions.validate()?;
    let mut ranked: Vec<(u64, usize)> = (0..count)
        .map(|index| {
            let h = derive_seed(
                master_seed,
                &[SPLIT_STREAM_TAG, group.id() as u64, index as u64],
            );
            (h, index)
        })
        .collect();
    ranked.sort_unstable();

    let n_train = (fractions.train * count as f64).round() as usize;
    let n_val = ((fractions.val * count as f64).round() as usize).min(count - n_train.min(count));
    let n_train = n_train.min(count);

    let mut splits = vec![Split::Test; count];
    for (rank, &(_, index)) in ranked.iter().enumerate() {
        splits[index] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    Ok(splits)
}
