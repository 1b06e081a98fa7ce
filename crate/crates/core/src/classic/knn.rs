//! Brute-force k-nearest-neighbour classifier with deterministic tie-breaking.

use std::collections::BTreeMap;

use thiserror::Error;

use super::kernel::squared_euclidean;

/// Neighbour count used when none is configured.
pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum KnnError {
    #[error("k must be positive")]
    ZeroK,
    #[error("k = {k} exceeds the {n} training vectors")]
    KTooLarge { k: usize, n: usize },
    #[error("{vectors} vectors but {labels} labels")]
    LabelCount { vectors: usize, labels: usize },
    #[error("training vector {index} has length {got}, expected {expected}")]
    Ragged { index: usize, expected: usize, got: usize },
}

#[derive(Debug, Clone)]
pub struct KnnModel<L> {
    vectors: Vec<Vec<f64>>,
    labels: Vec<L>,
    k: usize,
}

impl<L: Copy + Ord> KnnModel<L> {
    pub fn fit(vectors: Vec<Vec<f64>>, labels: Vec<L>, k: usize) -> Result<Self, KnnError> {
        if k == 0 {
            return Err(KnnError::ZeroK);
        }
        if vectors.len() != labels.len() {
            return Err(KnnError::LabelCount {
                vectors: vectors.len(),
                labels: labels.len(),
            });
        }
        if k > vectors.len() {
            return Err(KnnError::KTooLarge { k, n: vectors.len() });
        }
        let dim = vectors[0].len();
        if let Some((index, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != dim) {
            return Err(KnnError::Ragged {
                index,
                expected: dim,
                got: v.len(),
            });
        }
        Ok(KnnModel { vectors, labels, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Indices and squared distances of the k nearest training vectors,
    /// ordered by (distance, training index).
    pub fn neighbors(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let mut d: Vec<(usize, f64)> = self
            .vectors
            .iter()
            .map(|v| squared_euclidean(v, x))
            .enumerate()
            .collect();
        d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        d.truncate(self.k);
        d
    }

    /// Majority vote; ties go to the smallest summed neighbour distance, then
    /// to the smallest label.
    pub fn predict(&self, x: &[f64]) -> L {
        let mut votes: BTreeMap<L, (usize, f64)> = BTreeMap::new();
        for (i, dist) in self.neighbors(x) {
            let e = votes.entry(self.labels[i]).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += dist;
        }
        // BTreeMap iterates in label order, so strict comparisons keep the
        // smallest label among exact ties.
        let mut best: Option<(L, usize, f64)> = None;
        for (label, (count, sum)) in votes {
            let better = match best {
                None => true,
                Some((_, bc, bs)) => count > bc || (count == bc && sum < bs),
            };
            if better {
                best = Some((label, count, sum));
            }
        }
        best.expect("k >= 1 neighbours").0
    }
}
