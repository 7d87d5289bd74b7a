//! Snapshot diff, discrepancy classification and audit sampling.
//!
//! Left-only links (present in the reported dataset, missing from the graph)
//! get a [`LeftCause`]; right-only links (graph surplus) get a
//! [`RightStatus`]. Both classifiers are pure functions of their inputs and
//! run over the key list through [`Exec`].

mod classify;
mod io;
mod sample;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::doi::NormalizationMode;
use crate::exec::Exec;
use crate::model::{DatasetSnapshot, PairKey};

pub use classify::{
    classify_left_only, classify_left_only_with, verify_right_only, verify_right_only_with,
    LeftCause, LeftClassification, LeftEvidence, LeftVerdict, RightClassification, RightStatus,
    RightVerdict, SkippedRule,
};
pub use io::{
    read_classification, read_partition, write_left_classification, write_partition,
    write_right_classification, ClassificationRow, CLASSIFICATION_HEADER, PARTITION_FILES,
};
pub use sample::{sample_unmatched, SAMPLE_PRNG};

#[derive(Debug, Error)]
pub enum ReconcileError {
    #[error(
        "incomparable snapshots: {left_label} uses {left_mode}, {right_label} uses {right_mode}"
    )]
    ModeMismatch {
        left_label: String,
        left_mode: NormalizationMode,
        right_label: String,
        right_mode: NormalizationMode,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

/// Outcome of comparing two snapshots by pair key.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub left_label: String,
    pub right_label: String,
    pub matched: BTreeSet<PairKey>,
    pub left_only: BTreeSet<PairKey>,
    pub right_only: BTreeSet<PairKey>,
}

impl Partition {
    pub fn left_total(&self) -> usize {
        self.matched.len() + self.left_only.len()
    }

    pub fn right_total(&self) -> usize {
        self.matched.len() + self.right_only.len()
    }

    /// Disjointness plus `matched ∪ left_only = left` and `matched ∪ right_only = right`.
    pub fn satisfies_invariants<'a>(
        &self,
        left: impl IntoIterator<Item = &'a PairKey>,
        right: impl IntoIterator<Item = &'a PairKey>,
    ) -> bool {
        let left: BTreeSet<&PairKey> = left.into_iter().collect();
        let right: BTreeSet<&PairKey> = right.into_iter().collect();
        let disjoint = self.matched.is_disjoint(&self.left_only)
            && self.matched.is_disjoint(&self.right_only)
            && self.left_only.is_disjoint(&self.right_only);
        let left_union: BTreeSet<&PairKey> = self.matched.iter().chain(&self.left_only).collect();
        let right_union: BTreeSet<&PairKey> = self.matched.iter().chain(&self.right_only).collect();
        disjoint && left_union == left && right_union == right
    }
}

pub fn diff(left: &DatasetSnapshot, right: &DatasetSnapshot) -> Result<Partition, ReconcileError> {
    diff_with(left, right, Exec::default())
}

pub fn diff_with(
    left: &DatasetSnapshot,
    right: &DatasetSnapshot,
    exec: Exec,
) -> Result<Partition, ReconcileError> {
    if left.mode != right.mode {
        return Err(ReconcileError::ModeMismatch {
            left_label: left.label.clone(),
            left_mode: left.mode,
            right_label: right.label.clone(),
            right_mode: right.mode,
        });
    }
    let left_keys: Vec<&PairKey> = left.links.keys().collect();
    let right_keys: Vec<&PairKey> = right.links.keys().collect();
    let in_right = exec.map(&left_keys, |k| right.contains(k));
    let in_left = exec.map(&right_keys, |k| left.contains(k));

    let mut partition = Partition {
        left_label: left.label.clone(),
        right_label: right.label.clone(),
        ..Partition::default()
    };
    for (key, hit) in left_keys.into_iter().zip(in_right) {
        if hit {
            partition.matched.insert(key.clone());
        } else {
            partition.left_only.insert(key.clone());
        }
    }
    for (key, hit) in right_keys.into_iter().zip(in_left) {
        if !hit {
            partition.right_only.insert(key.clone());
        }
    }
    Ok(partition)
}
