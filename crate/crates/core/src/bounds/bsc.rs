//! Crossover probability of two edge agreement estimates when sign-quantized
//! data passes through a binary symmetric channel.
//!
//! With `T = 1{Û_r Û_s = 1} - 1{Û_i Û_j = 1}` taking values `0, 1, -1` with
//! probabilities `p0, p1, p2`, the Chernoff bound on `θ̂_e <= θ̂_e'` over
//! `n` samples is `(p0 + 2√(p1 p2))^n = exp(nD)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::model::CorrelationMatrix;
use crate::tree::Edge;

/// Two edges `e = (s, x)` and `e' = (s, y)` meeting at node `s`, described by
/// the three pairwise correlations among `s, x, y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharedNodeTriple {
    /// Correlation of `(s, x)`.
    pub rho_e: f64,
    /// Correlation of `(s, y)`.
    pub rho_eprime: f64,
    /// Correlation of `(x, y)`.
    pub rho_ends: f64,
}

/// Tree edge of the 3-node chain `1 - 2 - 3` used as `e`; `e'` is always the
/// non-edge `(1, 3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainEdge {
    /// `(1, 2)` with correlation `ρ₁`.
    First,
    /// `(2, 3)` with correlation `ρ₂`.
    Second,
}

impl SharedNodeTriple {
    pub fn new(rho_e: f64, rho_eprime: f64, rho_ends: f64) -> Result<Self> {
        let triple = Self { rho_e, rho_eprime, rho_ends };
        for r in [rho_e, rho_eprime, rho_ends] {
            if !(-1.0..=1.0).contains(&r) {
                return Err(invalid(format!("correlation {r} outside [-1, 1]")));
            }
        }
        if triple.orthant_probabilities().iter().any(|&p| p < -1e-12) {
            return Err(invalid(format!(
                "correlations ({rho_e}, {rho_eprime}, {rho_ends}) do not form a valid covariance"
            )));
        }
        Ok(triple)
    }

    /// Chain `1 - 2 - 3` with `ρ(1,2) = ρ₁`, `ρ(2,3) = ρ₂` and `e' = (1, 3)`.
    pub fn chain(rho1: f64, rho2: f64, target: ChainEdge) -> Result<Self> {
        let rho13 = rho1 * rho2;
        match target {
            // Shared node 1: x = 2, y = 3.
            ChainEdge::First => Self::new(rho1, rho13, rho2),
            // Shared node 3: x = 2, y = 1.
            ChainEdge::Second => Self::new(rho2, rho13, rho1),
        }
    }

    /// `Pr(S_s, S_x, S_y)` indexed by the bit pattern of negative signs,
    /// `1/8 + Σ s_a s_b asin(ρ_ab) / (4π)`.
    fn orthant_probabilities(&self) -> [f64; 8] {
        let (a_sx, a_sy, a_xy) = (self.rho_e.asin(), self.rho_eprime.asin(), self.rho_ends.asin());
        let mut out = [0.0; 8];
        for (mask, slot) in out.iter_mut().enumerate() {
            let [s, x, y] = signs(mask);
            *slot = 0.125 + (s * x * a_sx + s * y * a_sy + x * y * a_xy) / (4.0 * PI);
        }
        out
    }
}

fn signs(mask: usize) -> [f64; 3] {
    std::array::from_fn(|k| if mask >> k & 1 == 1 { -1.0 } else { 1.0 })
}

/// Relative position of `e` and `e'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossoverLayout {
    SharedNode(SharedNodeTriple),
    /// Four distinct endpoints; no closed form, see
    /// [`bsc_crossover_probs_monte_carlo`].
    Disjoint,
}

/// Distribution of `T` and the Chernoff exponent `D = ln(p0 + 2√(p1 p2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BscCrossoverProbs {
    pub p0: f64,
    /// `Pr(Û_e = -1, Û_e' = 1)`: the sample favors `e'`.
    pub p1: f64,
    /// `Pr(Û_e = 1, Û_e' = -1)`: the sample favors `e`.
    pub p2: f64,
    pub d: f64,
}

impl BscCrossoverProbs {
    pub fn from_parts(p0: f64, p1: f64, p2: f64) -> Result<Self> {
        if [p0, p1, p2].iter().any(|p| !(0.0..=1.0).contains(p)) || ((p0 + p1 + p2) - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("({p0}, {p1}, {p2}) is not a distribution")));
        }
        let d = (p0 + 2.0 * (p1 * p2).sqrt()).ln().min(0.0);
        Ok(Self { p0, p1, p2, d })
    }
}

/// Exact `(p0, p1, p2)` by enumerating the 8 sign patterns of the three
/// nodes and the 8 flip patterns of their channels. The shared node's flip
/// enters both edge products.
pub fn bsc_crossover_probs(layout: &CrossoverLayout, epsilon: f64) -> Result<BscCrossoverProbs> {
    let triple = match layout {
        CrossoverLayout::SharedNode(t) => t,
        CrossoverLayout::Disjoint => {
            return Err(Error::Unsupported(
                "no closed form for edges without a common node; use the Monte Carlo estimator".into(),
            ))
        }
    };
    check_epsilon(epsilon)?;
    let orthants = triple.orthant_probabilities();
    let (mut p0, mut p1, mut p2) = (0.0, 0.0, 0.0);
    for (sign_mask, &ps) in orthants.iter().enumerate() {
        let [s, x, y] = signs(sign_mask);
        for flip_mask in 0..8 {
            let flips = signs(flip_mask);
            let pf: f64 = flips.iter().map(|&f| if f < 0.0 { epsilon } else { 1.0 - epsilon }).product();
            let e = flips[0] * flips[1] * s * x;
            let eprime = flips[0] * flips[2] * s * y;
            let p = ps.max(0.0) * pf;
            match (e > 0.0, eprime > 0.0) {
                (a, b) if a == b => p0 += p,
                (false, true) => p1 += p,
                _ => p2 += p,
            }
        }
    }
    let total = p0 + p1 + p2;
    BscCrossoverProbs::from_parts(p0 / total, p1 / total, p2 / total)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(invalid(format!("flip probability {epsilon} outside [0, 0.5]")));
    }
    Ok(())
}

/// Simulated `(p0, p1, p2)` for any pair of node pairs of a Gaussian vector
/// with correlation `cov`: each trial draws the vector, takes signs and flips
/// every node's sign with probability `epsilon`.
pub fn bsc_crossover_probs_monte_carlo<R: Rng + ?Sized>(
    cov: &CorrelationMatrix,
    e: Edge,
    eprime: Edge,
    epsilon: f64,
    trials: usize,
    rng: &mut R,
) -> Result<BscCrossoverProbs> {
    check_epsilon(epsilon)?;
    let d = cov.dim();
    if [e.0, e.1, eprime.0, eprime.1].iter().any(|&v| v >= d) || e.0 == e.1 || eprime.0 == eprime.1 {
        return Err(invalid("edge endpoints must be distinct nodes of the model"));
    }
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let l = cov.cholesky_factor()?;
    let mut z = vec![0.0; d];
    let mut u = vec![0.0; d];
    let mut counts = [0usize; 3];
    for _ in 0..trials {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for (i, ui) in u.iter_mut().enumerate() {
            let x: f64 = (0..=i).map(|k| l[(i, k)] * z[k]).sum();
            let sign = if x < 0.0 { -1.0 } else { 1.0 };
            *ui = if rng.random_bool(epsilon) { -sign } else { sign };
        }
        let pe = u[e.0] * u[e.1] > 0.0;
        let pep = u[eprime.0] * u[eprime.1] > 0.0;
        counts[match (pe, pep) {
            (a, b) if a == b => 0,
            (false, true) => 1,
            _ => 2,
        }] += 1;
    }
    let t = trials as f64;
    BscCrossoverProbs::from_parts(counts[0] as f64 / t, counts[1] as f64 / t, counts[2] as f64 / t)
}

/// `min(1, exp(nD))` when `e` is favored on average (`p2 > p1`). Otherwise
/// the infimum over positive Chernoff parameters is attained as `λ → 0` and
/// the bound is 1.
pub fn lemma4_bound(probs: &BscCrossoverProbs, n: usize) -> f64 {
    if probs.p1 >= probs.p2 {
        return 1.0;
    }
    (probs.d * n as f64).exp().clamp(0.0, 1.0)
}
