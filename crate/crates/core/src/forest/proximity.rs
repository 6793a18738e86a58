use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ForestModel, NodeKind};

/// Co-occurrence counts of row pairs over the trees of a forest.
///
/// Both matrices are dense, symmetric and stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityMatrix {
    pub n: usize,
    /// Trees in which `i` and `j` were both inbag and shared a terminal node.
    pub co_terminal: Vec<u32>,
    /// Trees in which `i` and `j` were both inbag.
    pub co_inbag: Vec<u32>,
}

impl ProximityMatrix {
    fn zeros(n: usize) -> Self {
        ProximityMatrix {
            n,
            co_terminal: vec![0; n * n],
            co_inbag: vec![0; n * n],
        }
    }

    pub fn co_terminal(&self, i: usize, j: usize) -> u32 {
        self.co_terminal[i * self.n + j]
    }

    pub fn co_inbag(&self, i: usize, j: usize) -> u32 {
        self.co_inbag[i * self.n + j]
    }

    /// `co_terminal / co_inbag`, or 0 when the pair was never inbag together.
    pub fn normalized(&self, i: usize, j: usize) -> f64 {
        match self.co_inbag(i, j) {
            0 => 0.0,
            d => self.co_terminal(i, j) as f64 / d as f64,
        }
    }

    pub fn normalized_row(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.normalized(i, j)).collect()
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.co_terminal.iter_mut().zip(&other.co_terminal) {
            *a += b;
        }
        for (a, b) in self.co_inbag.iter_mut().zip(&other.co_inbag) {
            *a += b;
        }
        self
    }
}

/// Accumulate inbag co-membership over all trees of `model`.
pub fn proximity(model: &ForestModel) -> ProximityMatrix {
    let n = model.n_rows;
    model
        .trees
        .par_iter()
        .fold(
            || ProximityMatrix::zeros(n),
            |mut acc, tree| {
                let inbag: Vec<usize> = (0..n).filter(|&i| tree.inbag[i] > 0).collect();
                for &i in &inbag {
                    for &j in &inbag {
                        acc.co_inbag[i * n + j] += 1;
                    }
                }
                for node in &tree.nodes {
                    if let NodeKind::Terminal { members } = &node.kind {
                        for &i in members {
                            for &j in members {
                                acc.co_terminal[i as usize * n + j as usize] += 1;
                            }
                        }
                    }
                }
                acc
            },
        )
        .reduce(|| ProximityMatrix::zeros(n), ProximityMatrix::merge)
}
