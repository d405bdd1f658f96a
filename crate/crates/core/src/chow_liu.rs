//! Chow-Liu structure learning: a maximum weight spanning tree over the
//! estimated pairwise scores.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use petgraph::unionfind::UnionFind;

use crate::error::{invalid, Result};
use crate::estimators::{pairwise_mi_matrix, EstimatorMode, PairwiseScores};
use crate::model::Dataset;
use crate::tree::TreeTopology;

/// Kruskal's algorithm on edges sorted by weight, heaviest first. Ties go to
/// the lexicographically smaller `(min node, max node)` pair, so equal
/// weights produce the star around node 0.
pub fn mwst(weights: &DMatrix<f64>) -> Result<TreeTopology> {
    let d = weights.nrows();
    if d < 2 || !weights.is_square() {
        return Err(invalid("spanning tree needs a square matrix with d >= 2"));
    }
    let mut candidates = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        for j in (i + 1)..d {
            let w = weights[(i, j)];
            if w.is_nan() {
                return Err(invalid(format!("NaN weight on pair ({}, {})", i + 1, j + 1)));
            }
            candidates.push((w, i, j));
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
    });

    let mut uf = UnionFind::<usize>::new(d);
    let mut edges = Vec::with_capacity(d - 1);
    for (_, i, j) in candidates {
        if uf.union(i, j) {
            edges.push((i, j));
            if edges.len() == d - 1 {
                break;
            }
        }
    }
    TreeTopology::new(d, edges)
}

/// Output of the structure learner together with the scores it used.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedTree {
    pub topology: TreeTopology,
    pub scores: PairwiseScores,
}

impl EstimatedTree {
    pub fn mode(&self) -> EstimatorMode {
        self.scores.mode
    }
}

/// Estimates scores for every pair of columns and keeps the maximum weight
/// spanning tree. `sigma_sq` switches on the variance-normalized estimator.
pub fn chow_liu(data: &Dataset, mode: EstimatorMode, sigma_sq: Option<f64>) -> Result<EstimatedTree> {
    if data.n() < 2 {
        return Err(invalid("structure learning needs n >= 2 samples"));
    }
    let scores = pairwise_mi_matrix(data, mode, sigma_sq)?;
    chow_liu_from_scores(scores)
}

pub fn chow_liu_from_scores(scores: PairwiseScores) -> Result<EstimatedTree> {
    let topology = mwst(&scores.ranking)?;
    Ok(EstimatedTree { topology, scores })
}

/// Exact recovery check: identical edge sets.
pub fn tree_equals(a: &TreeTopology, b: &TreeTopology) -> Result<bool> {
    if a.node_count() != b.node_count() {
        return Err(invalid(format!(
            "trees have different node counts ({} vs {})",
            a.node_count(),
            b.node_count()
        )));
    }
    Ok(a.edges() == b.edges())
}
