//! Correlation, agreement and mutual-information estimators the fusion
//! center computes for every pair of sensors.
//!
//! Continuous data is scored through the uncentered product estimator, its
//! unbiased squared version and the Gaussian mutual information (nats).
//! Sign-quantized data is scored through the agreement frequency and
//! `1 - h(θ)` with `h` the binary entropy in bits.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{domain, invalid, Result};
use crate::exec::{map_indexed, Execution};
use crate::model::Dataset;

/// Ceiling applied to `ρ̃²` before taking the Gaussian mutual information.
pub const RHO_SQ_CEILING: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorMode {
    Continuous,
    Quantized,
}

impl EstimatorMode {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorMode::Continuous => "continuous",
            EstimatorMode::Quantized => "quantized",
        }
    }
}

/// `(1/n) Σ x_k y_k`. No centering and no variance normalization: marginals
/// are assumed standardized with zero mean.
pub fn pearson_product(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(invalid(format!("column lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(invalid("need at least one sample"));
    }
    Ok(dot(x, y) / x.len() as f64)
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Unbiased estimator of `ρ²`: `n/(n+1) (ρ̂² - 1/n)`. Can be negative.
///
/// Panics if `n == 0`.
pub fn unbiased_rho_squared(rho_hat: f64, n: usize) -> f64 {
    assert!(n >= 1, "unbiased_rho_squared needs n >= 1");
    let n = n as f64;
    n / (n + 1.0) * (rho_hat * rho_hat - 1.0 / n)
}

/// Product estimator normalized by the noisy marginal variance `1 + σ²`.
pub fn normalized_noisy_correlation(y_i: &[f64], y_j: &[f64], sigma_sq: f64) -> Result<f64> {
    if !(sigma_sq >= 0.0) {
        return Err(invalid(format!("channel variance {sigma_sq} must be >= 0")));
    }
    Ok(pearson_product(y_i, y_j)? / (1.0 + sigma_sq))
}

/// `-(1/2) ln(1 - ρ²)` in nats, from the squared correlation.
pub fn gaussian_mi_from_rho_sq(rho_sq: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho_sq) {
        return Err(domain(format!("ρ² = {rho_sq} outside [0, 1)")));
    }
    Ok(-0.5 * (-rho_sq).ln_1p())
}

pub fn gaussian_mi(rho: f64) -> Result<f64> {
    gaussian_mi_from_rho_sq(rho * rho)
}

/// Probability that the signs of a standard bivariate normal pair agree:
/// `1/2 + arcsin(ρ)/π`.
pub fn theta_from_rho(rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(domain(format!("|ρ| = {} exceeds 1", rho.abs())));
    }
    Ok(0.5 + rho.asin() / PI)
}

/// Fraction of samples where two ±1 columns agree.
pub fn theta_hat(u_i: &[f64], u_j: &[f64]) -> Result<f64> {
    if u_i.len() != u_j.len() || u_i.is_empty() {
        return Err(invalid("sign columns must be non-empty and of equal length"));
    }
    let mut agree = 0usize;
    for (&a, &b) in u_i.iter().zip(u_j) {
        if (a != 1.0 && a != -1.0) || (b != 1.0 && b != -1.0) {
            return Err(invalid(format!("non-binary symbol in sign column ({a}, {b})")));
        }
        agree += usize::from(a == b);
    }
    Ok(agree as f64 / u_i.len() as f64)
}

/// Binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(theta: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(theta) + term(1.0 - theta)
}

/// Mutual information of a sign pair, `1 - h(θ)` bits.
pub fn quantized_mi(theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(domain(format!("θ = {theta} outside [0, 1]")));
    }
    Ok((1.0 - binary_entropy(theta)).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStatistics {
    pub rho_hat: f64,
    pub rho_sq_unbiased: f64,
    /// Only for sign-quantized data.
    pub theta_hat: Option<f64>,
    pub mi: f64,
    /// Key the spanning-tree step sorts on.
    pub ranking: f64,
    /// `ρ̃²` hit [`RHO_SQ_CEILING`].
    pub clamped: bool,
}

/// Statistics of one pair of received columns. `sigma_sq` selects the
/// variance-normalized estimator for Gaussian channels.
pub fn pair_statistics(x: &[f64], y: &[f64], mode: EstimatorMode, sigma_sq: Option<f64>) -> Result<PairStatistics> {
    let n = x.len();
    match mode {
        EstimatorMode::Continuous => {
            let rho_hat = match sigma_sq {
                Some(s) => normalized_noisy_correlation(x, y, s)?,
                None => pearson_product(x, y)?,
            };
            let rho_sq_unbiased = unbiased_rho_squared(rho_hat, n);
            let mut r2 = rho_sq_unbiased.max(0.0);
            let clamped = r2 >= 1.0;
            if clamped {
                r2 = RHO_SQ_CEILING;
            }
            Ok(PairStatistics {
                rho_hat,
                rho_sq_unbiased,
                theta_hat: None,
                mi: gaussian_mi_from_rho_sq(r2)?,
                ranking: rho_sq_unbiased,
                clamped,
            })
        }
        EstimatorMode::Quantized => {
            let theta = theta_hat(x, y)?;
            let rho_hat = 2.0 * theta - 1.0;
            let mi = quantized_mi(theta)?;
            Ok(PairStatistics {
                rho_hat,
                rho_sq_unbiased: unbiased_rho_squared(rho_hat, n),
                theta_hat: Some(theta),
                mi,
                ranking: mi,
                clamped: false,
            })
        }
    }
}

/// Symmetric pairwise scores over all sensor pairs. Diagonals are zero and
/// carry no meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseScores {
    pub mode: EstimatorMode,
    /// Estimated mutual information (nats for continuous, bits for quantized).
    pub mi: DMatrix<f64>,
    /// Ordering key: raw `ρ̃²` (continuous) or the mutual information
    /// (quantized). Monotone in the mutual information on its positive part.
    pub ranking: DMatrix<f64>,
    /// Pairs whose `ρ̃²` was clamped below 1.
    pub clamped: usize,
}

impl PairwiseScores {
    pub fn dim(&self) -> usize {
        self.mi.nrows()
    }
}

pub fn pairwise_mi_matrix(data: &Dataset, mode: EstimatorMode, sigma_sq: Option<f64>) -> Result<PairwiseScores> {
    pairwise_mi_matrix_with(data, mode, sigma_sq, Execution::Sequential)
}

pub fn pairwise_mi_matrix_with(
    data: &Dataset,
    mode: EstimatorMode,
    sigma_sq: Option<f64>,
    exec: Execution,
) -> Result<PairwiseScores> {
    let d = data.d();
    if d < 2 {
        return Err(invalid("need at least two sensors"));
    }
    if mode == EstimatorMode::Quantized && !data.is_binary() {
        return Err(invalid("quantized estimation needs ±1 data"));
    }
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).collect();
    let stats = map_indexed(pairs.len(), exec, |k| {
        let (i, j) = pairs[k];
        pair_statistics(data.column(i), data.column(j), mode, sigma_sq)
    });
    let mut mi = DMatrix::zeros(d, d);
    let mut ranking = DMatrix::zeros(d, d);
    let mut clamped = 0;
    for (&(i, j), s) in pairs.iter().zip(stats) {
        let s = s?;
        mi[(i, j)] = s.mi;
        mi[(j, i)] = s.mi;
        ranking[(i, j)] = s.ranking;
        ranking[(j, i)] = s.ranking;
        clamped += usize::from(s.clamped);
    }
    if clamped > 0 {
        log::warn!("{clamped} pair(s) had ρ̃² >= 1 and were clamped");
    }
    Ok(PairwiseScores { mode, mi, ranking, clamped })
}
