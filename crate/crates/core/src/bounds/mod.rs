//! Closed-form upper bounds on the probability that the fusion center
//! recovers the wrong tree, and their inversion into sample sizes.
//!
//! Every bound is clamped to `[0, 1]` and is nonincreasing in `n`.
//!
//! * Gaussian channels: a Chernoff term for the channel-noise part of the
//!   correlation estimate plus a Hoeffding term for the finite-sample part,
//!   both scaled by the `d³` crossover prefactor.
//! * Erasure channels: a single Hoeffding term on the correlation gap of the
//!   erased-and-replaced data.
//! * Sign-quantized data through a BSC: see [`bsc`].
//! * Prefactor reduction from known subtree structure: see [`algorithmic`].

pub mod algorithmic;
pub mod bsc;

use crate::error::{invalid, Result};

pub use algorithmic::{algorithmic_bound, ExternalKnowledge};
pub use bsc::{bsc_crossover_probs, bsc_crossover_probs_monte_carlo, lemma4_bound, BscCrossoverProbs, ChainEdge, CrossoverLayout, SharedNodeTriple};

/// Support `[a_M, b_M]` of the per-sample difference `Z = X_r X_s - X_i X_j`
/// that the Hoeffding terms assume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoeffdingRange {
    lower: f64,
    upper: f64,
}

impl HoeffdingRange {
    /// `|x| <= M` with unit variance gives `|Z| <= 2M²`.
    pub fn from_data_bound(m: f64) -> Result<Self> {
        if !(m >= 3.0 && m.is_finite()) {
            return Err(invalid(format!("data bound M = {m} must be >= 3")));
        }
        Ok(Self { lower: -2.0 * m * m, upper: 2.0 * m * m })
    }

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper && lower.is_finite() && upper.is_finite()) {
            return Err(invalid(format!("range [{lower}, {upper}] must be finite with lower < upper")));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// `exp(-2 n gap² / (b - a)²)`.
    pub fn hoeffding_tail(&self, gap: f64, n: usize) -> f64 {
        clamp_probability((-hoeffding_rate(gap, self.width()) * n as f64).exp())
    }
}

fn hoeffding_rate(gap: f64, width: f64) -> f64 {
    2.0 * gap * gap / (width * width)
}

fn clamp_probability(p: f64) -> f64 {
    if p.is_nan() {
        1.0
    } else {
        p.clamp(0.0, 1.0)
    }
}

fn cube(d: usize) -> f64 {
    (d as f64).powi(3)
}

/// Variance of the channel-noise difference
/// `σ_L² = 2μ₂²σ² + 2(μ₁² + σ²)σ² + 2μ₁² + 2μ₂² + 4σ²`.
pub fn sigma_l_squared(mu1: f64, mu2: f64, sigma_sq: f64) -> Result<f64> {
    if !(sigma_sq > 0.0) {
        return Err(invalid(format!("channel variance {sigma_sq} must be positive")));
    }
    let (m1, m2) = (mu1 * mu1, mu2 * mu2);
    Ok(2.0 * m2 * sigma_sq + 2.0 * (m1 + sigma_sq) * sigma_sq + 2.0 * m1 + 2.0 * m2 + 4.0 * sigma_sq)
}

/// Chernoff bound on the channel-noise part:
/// `exp(-t² n (1 + σ²)² / (2 σ_L²))`.
pub fn lemma2_part1(t: f64, n: usize, sigma_sq: f64, sigma_l_sq: f64) -> Result<f64> {
    if !(sigma_l_sq > 0.0) {
        return Err(invalid(format!("σ_L² = {sigma_l_sq} must be positive")));
    }
    if !(t > 0.0) {
        return Err(invalid(format!("slack t = {t} must be positive")));
    }
    Ok(clamp_probability((-part1_rate(t, sigma_sq, sigma_l_sq) * n as f64).exp()))
}

fn part1_rate(t: f64, sigma_sq: f64, sigma_l_sq: f64) -> f64 {
    let s = 1.0 + sigma_sq;
    t * t * s * s / (2.0 * sigma_l_sq)
}

/// Hoeffding bound on the finite-sample part with
/// `α = (ρ_e - ρ_e' + t) / (1 + σ²)`:
/// `exp(-2 n [α(1 + σ²)]² / (b_M - a_M)²)`.
pub fn lemma2_part2(
    rho_e: f64,
    rho_eprime: f64,
    t: f64,
    n: usize,
    sigma_sq: f64,
    range: HoeffdingRange,
) -> Result<f64> {
    let alpha = general_alpha(rho_e, rho_eprime, t, sigma_sq)?;
    Ok(range.hoeffding_tail(alpha * (1.0 + sigma_sq), n))
}

fn general_alpha(rho_e: f64, rho_eprime: f64, t: f64, sigma_sq: f64) -> Result<f64> {
    if !(rho_e > rho_eprime) {
        return Err(invalid(format!(
            "edge correlation {rho_e} must exceed non-edge correlation {rho_eprime}"
        )));
    }
    if !(t > 0.0) {
        return Err(invalid(format!("slack t = {t} must be positive")));
    }
    if !(sigma_sq >= 0.0) {
        return Err(invalid(format!("channel variance {sigma_sq} must be >= 0")));
    }
    Ok((rho_e - rho_eprime + t) / (1.0 + sigma_sq))
}

/// Parameters of the Gaussian-channel recovery bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralCaseParams {
    pub t: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma_sq: f64,
    pub range: HoeffdingRange,
    pub rho_e: f64,
    pub rho_eprime: f64,
    pub d: usize,
    pub n: usize,
}

impl GeneralCaseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) {
            return Err(invalid(format!("slack t = {} must be positive", self.t)));
        }
        if !(self.sigma_sq > 0.0) {
            return Err(invalid(format!("channel variance {} must be positive", self.sigma_sq)));
        }
        if !(0.0 < self.rho_eprime && self.rho_eprime < self.rho_e && self.rho_e < 1.0) {
            return Err(invalid(format!(
                "need 0 < ρ_e' < ρ_e < 1, got ρ_e = {}, ρ_e' = {}",
                self.rho_e, self.rho_eprime
            )));
        }
        if self.d < 2 {
            return Err(invalid("need d >= 2"));
        }
        Ok(())
    }

    pub fn alpha(&self) -> Result<f64> {
        general_alpha(self.rho_e, self.rho_eprime, self.t, self.sigma_sq)
    }

    pub fn sigma_l_squared(&self) -> Result<f64> {
        sigma_l_squared(self.mu1, self.mu2, self.sigma_sq)
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    /// Exponential decay rates of the two terms, per sample.
    fn rates(&self) -> Result<(f64, f64)> {
        self.validate()?;
        let r1 = part1_rate(self.t, self.sigma_sq, self.sigma_l_squared()?);
        let r2 = hoeffding_rate(self.alpha()? * (1.0 + self.sigma_sq), self.range.width());
        Ok((r1, r2))
    }
}

/// Gaussian-channel bound `min(1, d³ (part1 + part2))`.
pub fn theorem1_bound(params: &GeneralCaseParams) -> Result<f64> {
    params.validate()?;
    let p1 = lemma2_part1(params.t, params.n, params.sigma_sq, params.sigma_l_squared()?)?;
    let p2 = lemma2_part2(params.rho_e, params.rho_eprime, params.t, params.n, params.sigma_sq, params.range)?;
    Ok(clamp_probability(cube(params.d) * (p1 + p2)))
}

/// Parameters of the erasure-channel recovery bound. `beta` is the gap
/// between edge and non-edge correlations of the received (erased and
/// replaced) data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasureBoundParams {
    pub beta: f64,
    pub range: HoeffdingRange,
    pub d: usize,
    pub n: usize,
}

impl ErasureBoundParams {
    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(invalid(format!("correlation gap β = {} must be positive", self.beta)));
        }
        if self.d < 2 {
            return Err(invalid("need d >= 2"));
        }
        Ok(())
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }
}

/// Erasure-channel bound `min(1, d³ exp(-2nβ² / (b_M - a_M)²))`.
pub fn theorem2_bound(params: &ErasureBoundParams) -> Result<f64> {
    params.validate()?;
    Ok(clamp_probability(cube(params.d) * params.range.hoeffding_tail(params.beta, params.n)))
}

/// `E[Y_i Y_j]` when each side is independently erased with probability `ξ`
/// and replaced by 1: `(1-ξ)² ρ + ξ²` for zero-mean marginals.
pub fn erasure_population_correlation(rho: f64, xi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(invalid(format!("erasure probability {xi} outside [0, 1]")));
    }
    let keep = 1.0 - xi;
    Ok(keep * keep * rho + xi * xi)
}

/// Which bound to invert.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundFamily {
    Theorem1(GeneralCaseParams),
    Theorem2(ErasureBoundParams),
    Algorithmic {
        knowledge: ExternalKnowledge,
        d: usize,
        beta: f64,
        range: HoeffdingRange,
    },
}

impl BoundFamily {
    pub fn evaluate(&self, n: usize) -> Result<f64> {
        match self {
            BoundFamily::Theorem1(p) => theorem1_bound(&p.with_n(n)),
            BoundFamily::Theorem2(p) => theorem2_bound(&p.with_n(n)),
            BoundFamily::Algorithmic { knowledge, d, beta, range } => {
                algorithmic_bound(knowledge, *d, *beta, *range, n)
            }
        }
    }
}

/// Smallest `n` whose bound is at most `delta`.
///
/// Single-exponential families invert in closed form,
/// `n = ceil((b_M - a_M)² / (2β²) · ln(P/δ))` with prefactor `P`; the two-term
/// Gaussian-channel bound is solved by bracketing and bisection. The closed
/// form is finally nudged by one if floating point put it off the boundary.
pub fn sample_complexity(delta: f64, family: &BoundFamily) -> Result<usize> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("target failure probability {delta} must lie in (0, 1]")));
    }
    if delta >= 1.0 {
        family.evaluate(0)?;
        return Ok(0);
    }
    let guess = match family {
        BoundFamily::Theorem1(p) => {
            let (r1, r2) = p.rates()?;
            return bisect_smallest_n(|n| family.evaluate(n), delta, r1.min(r2));
        }
        BoundFamily::Theorem2(p) => {
            p.validate()?;
            closed_form_n(cube(p.d), p.beta, p.range, delta)
        }
        BoundFamily::Algorithmic { knowledge, d, beta, range } => {
            knowledge.check_node_count(*d)?;
            if !(*beta > 0.0) {
                return Err(invalid(format!("correlation gap β = {beta} must be positive")));
            }
            closed_form_n(knowledge.prefactor(), *beta, *range, delta)
        }
    };
    let mut n = guess;
    while family.evaluate(n)? > delta {
        n += 1;
    }
    while n > 0 && family.evaluate(n - 1)? <= delta {
        n -= 1;
    }
    Ok(n)
}

fn closed_form_n(prefactor: f64, beta: f64, range: HoeffdingRange, delta: f64) -> usize {
    let x = range.width().powi(2) / (2.0 * beta * beta) * (prefactor / delta).ln();
    if x <= 0.0 {
        0
    } else {
        x.ceil() as usize
    }
}

fn bisect_smallest_n(bound: impl Fn(usize) -> Result<f64>, delta: f64, slowest_rate: f64) -> Result<usize> {
    if !(slowest_rate > 0.0) {
        return Err(invalid("bound does not decay with n; infeasible target"));
    }
    if bound(0)? <= delta {
        return Ok(0);
    }
    let mut hi = 1usize;
    while bound(hi)? > delta {
        if hi > usize::MAX / 4 {
            return Err(invalid("sample size overflow while inverting bound"));
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    // Invariant: bound(lo) > delta >= bound(hi).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if bound(mid)? <= delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
