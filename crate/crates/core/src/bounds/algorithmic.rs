//! Recovery bound for erasure channels that exploits a known decomposition
//! of the tree into disjoint subtrees.
//!
//! Each subtree of `d_l` nodes contributes `d_l³ E` and each endpoint `q` of
//! a potential edge joining subtrees contributes `|N(q)| E`, where
//! `E = exp(-2nβ² / (b_M - a_M)²)`.

use super::{clamp_probability, HoeffdingRange};
use crate::error::{invalid, Result};

/// Subtree sizes and neighborhood-size bounds of potential-edge endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalKnowledge {
    subtree_sizes: Vec<usize>,
    neighborhood_bounds: Vec<usize>,
}

impl ExternalKnowledge {
    /// One neighborhood entry per subtree, summed pairwise.
    pub fn paired(subtree_sizes: Vec<usize>, neighborhood_bounds: Vec<usize>) -> Result<Self> {
        if subtree_sizes.len() != neighborhood_bounds.len() {
            return Err(invalid(format!(
                "{} subtree sizes but {} neighborhood bounds; paired knowledge needs equal lengths",
                subtree_sizes.len(),
                neighborhood_bounds.len()
            )));
        }
        if neighborhood_bounds.is_empty() {
            return Err(invalid("knowledge lists must be nonempty"));
        }
        Self::general(subtree_sizes, neighborhood_bounds)
    }

    /// Any number of neighborhood entries, including none.
    pub fn general(subtree_sizes: Vec<usize>, neighborhood_bounds: Vec<usize>) -> Result<Self> {
        if subtree_sizes.is_empty() {
            return Err(invalid("at least one subtree size is required"));
        }
        if subtree_sizes.iter().chain(&neighborhood_bounds).any(|&v| v == 0) {
            return Err(invalid("subtree sizes and neighborhood bounds must be positive"));
        }
        Ok(Self { subtree_sizes, neighborhood_bounds })
    }

    pub fn subtree_sizes(&self) -> &[usize] {
        &self.subtree_sizes
    }

    pub fn neighborhood_bounds(&self) -> &[usize] {
        &self.neighborhood_bounds
    }

    /// `Σ d_l³ + Σ |N(q)|`.
    pub fn prefactor(&self) -> f64 {
        let subtrees: f64 = self.subtree_sizes.iter().map(|&s| (s as f64).powi(3)).sum();
        let neighbors: f64 = self.neighborhood_bounds.iter().map(|&q| q as f64).sum();
        subtrees + neighbors
    }

    pub fn check_node_count(&self, d: usize) -> Result<()> {
        let total: usize = self.subtree_sizes.iter().sum();
        if total != d {
            return Err(invalid(format!("subtree sizes sum to {total}, expected d = {d}")));
        }
        Ok(())
    }
}

/// `min(1, (Σ d_l³ + Σ |N(q)|) E)`.
pub fn algorithmic_bound(
    knowledge: &ExternalKnowledge,
    d: usize,
    beta: f64,
    range: HoeffdingRange,
    n: usize,
) -> Result<f64> {
    knowledge.check_node_count(d)?;
    if !(beta > 0.0) {
        return Err(invalid(format!("correlation gap β = {beta} must be positive")));
    }
    let e = range.hoeffding_tail(beta, n);
    let upper: f64 = knowledge
        .subtree_sizes
        .iter()
        .map(|&s| (s as f64).powi(3) * e)
        .chain(knowledge.neighborhood_bounds.iter().map(|&q| q as f64 * e))
        .sum();
    Ok(clamp_probability(upper))
}
