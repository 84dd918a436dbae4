use serde::{Deserialize, Serialize};

use super::SparseVec;

/// k-nearest-neighbour classifier under Euclidean distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestNeighbours {
    k: usize,
    rows: Vec<SparseVec>,
    flaky: Vec<bool>,
}

impl NearestNeighbours {
    pub(crate) fn fit(rows: &[SparseVec], y: &[bool], k: usize) -> Self {
        Self {
            k: k.clamp(1, rows.len()),
            rows: rows.to_vec(),
            flaky: y.to_vec(),
        }
    }

    /// Indices of the `k` closest training rows; equal distances keep the
    /// lower training index.
    pub fn neighbours(&self, x: &SparseVec) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.squared_distance(x), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.truncate(self.k);
        d.into_iter().map(|(_, i)| i).collect()
    }

    /// Fraction of flaky tests among the neighbours.
    pub fn flaky_fraction(&self, x: &SparseVec) -> f64 {
        let n = self.neighbours(x);
        n.iter().filter(|&&i| self.flaky[i]).count() as f64 / n.len() as f64
    }
}
