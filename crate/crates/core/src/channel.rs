//! Channels between the sensors and the fusion center.
//!
//! Every channel acts independently on each entry (independent in time and
//! across sensors). The column-level functions are what a single sensor's link
//! applies; the dataset-level ones run every column through one random source.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Result};
use crate::model::Dataset;

/// Value substituted for an erased symbol before estimation.
pub const ERASURE_SYMBOL: f64 = 1.0;

/// Additive Gaussian noise with a per-sensor mean and a shared variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannelSpec {
    means: Vec<f64>,
    variance: f64,
}

impl GaussianChannelSpec {
    pub fn new(means: Vec<f64>, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(invalid(format!("channel variance {variance} must be positive")));
        }
        if means.is_empty() || means.iter().any(|m| !m.is_finite()) {
            return Err(invalid("channel means must be a non-empty list of finite values"));
        }
        Ok(Self { means, variance })
    }

    /// Every sensor in `noisy` (0-indexed) gets `high_mean`, the rest `low_mean`.
    pub fn two_level(d: usize, noisy: &[usize], high_mean: f64, low_mean: f64, variance: f64) -> Result<Self> {
        let means = (0..d)
            .map(|i| if noisy.contains(&i) { high_mean } else { low_mean })
            .collect();
        Self::new(means, variance)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    fn noise(&self, sensor: usize) -> Normal<f64> {
        Normal::new(self.means[sensor], self.variance.sqrt()).expect("validated variance")
    }
}

/// Each symbol is lost with probability `ξ` and replaced by [`ERASURE_SYMBOL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasureChannelSpec {
    probability: f64,
}

impl ErasureChannelSpec {
    pub fn new(probability: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(invalid(format!("erasure probability {probability} outside [0, 1]")));
        }
        Ok(Self { probability })
    }

    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn replacement_symbol(&self) -> f64 {
        ERASURE_SYMBOL
    }
}

/// Binary symmetric channel on ±1 symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BscSpec {
    flip_probability: f64,
}

impl BscSpec {
    pub fn new(flip_probability: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&flip_probability) {
            return Err(invalid(format!("flip probability {flip_probability} outside [0, 0.5]")));
        }
        Ok(Self { flip_probability })
    }

    pub fn flip_probability(&self) -> f64 {
        self.flip_probability
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    Noiseless,
    Gaussian(GaussianChannelSpec),
    Erasure(ErasureChannelSpec),
    Bsc(BscSpec),
}

impl ChannelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelSpec::Noiseless => "noiseless",
            ChannelSpec::Gaussian(_) => "gaussian",
            ChannelSpec::Erasure(_) => "erasure",
            ChannelSpec::Bsc(_) => "bsc",
        }
    }

    /// Channel variance the fusion center normalizes by, if any.
    pub fn gaussian_variance(&self) -> Option<f64> {
        match self {
            ChannelSpec::Gaussian(g) => Some(g.variance()),
            _ => None,
        }
    }

    /// Passes sensor `sensor`'s column through this channel.
    pub fn transmit_column<R: Rng + ?Sized>(&self, sensor: usize, column: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        match self {
            ChannelSpec::Noiseless => Ok(column.to_vec()),
            ChannelSpec::Gaussian(spec) => {
                if sensor >= spec.dim() {
                    return Err(invalid(format!(
                        "gaussian channel describes {} sensors, sensor {} requested",
                        spec.dim(),
                        sensor + 1
                    )));
                }
                Ok(gaussian_column(column, &spec.noise(sensor), rng))
            }
            ChannelSpec::Erasure(spec) => Ok(erase_column(column, spec.probability, rng)),
            ChannelSpec::Bsc(spec) => flip_column(column, spec.flip_probability, rng),
        }
    }
}

pub fn gaussian_column<R: Rng + ?Sized>(column: &[f64], noise: &Normal<f64>, rng: &mut R) -> Vec<f64> {
    column.iter().map(|&x| x + noise.sample(rng)).collect()
}

pub fn erase_column<R: Rng + ?Sized>(column: &[f64], xi: f64, rng: &mut R) -> Vec<f64> {
    column
        .iter()
        .map(|&x| if rng.random_bool(xi) { ERASURE_SYMBOL } else { x })
        .collect()
}

pub fn flip_column<R: Rng + ?Sized>(column: &[f64], epsilon: f64, rng: &mut R) -> Result<Vec<f64>> {
    if let Some(x) = column.iter().find(|&&x| x != 1.0 && x != -1.0) {
        return Err(invalid(format!("binary symmetric channel needs ±1 symbols, found {x}")));
    }
    Ok(column
        .iter()
        .map(|&x| if rng.random_bool(epsilon) { -x } else { x })
        .collect())
}

pub fn sign_column(column: &[f64]) -> Vec<f64> {
    column.iter().map(|&x| if x < 0.0 { -1.0 } else { 1.0 }).collect()
}

/// Adds `N(μ_i, σ²)` noise to column `i`. The result carries no bound.
pub fn apply_gaussian<R: Rng + ?Sized>(data: &Dataset, spec: &GaussianChannelSpec, rng: &mut R) -> Result<Dataset> {
    if spec.dim() != data.d() {
        return Err(invalid(format!(
            "gaussian channel has {} means for {} sensors",
            spec.dim(),
            data.d()
        )));
    }
    let columns = data
        .columns()
        .enumerate()
        .map(|(i, col)| gaussian_column(col, &spec.noise(i), rng))
        .collect();
    Dataset::from_columns(columns, None)
}

/// Replaces each entry by 1 with probability `ξ`. Keeps the bound tag since
/// the replacement symbol lies inside any admissible bound.
pub fn apply_erasure<R: Rng + ?Sized>(data: &Dataset, spec: &ErasureChannelSpec, rng: &mut R) -> Result<Dataset> {
    let columns = data.columns().map(|col| erase_column(col, spec.probability, rng)).collect();
    Dataset::from_columns(columns, data.bound())
}

/// Entrywise sign with `sign(0) = +1`.
pub fn quantize_sign(data: &Dataset) -> Dataset {
    let columns = data.columns().map(sign_column).collect();
    Dataset::from_columns(columns, None).expect("shape preserved")
}

pub fn apply_bsc<R: Rng + ?Sized>(data: &Dataset, spec: &BscSpec, rng: &mut R) -> Result<Dataset> {
    let columns = data
        .columns()
        .map(|col| flip_column(col, spec.flip_probability, rng))
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_columns(columns, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::theta_from_rho;
    use crate::model::{sample_dataset, sample_tree_dataset, Boundedness, CorrelationMatrix};
    use crate::rng::rng_from_seed;
    use crate::tree::WeightedTree;

    fn normal_data(n: usize, d: usize, seed: u64) -> Dataset {
        sample_dataset(&CorrelationMatrix::identity(d), n, Boundedness::Unbounded, &mut rng_from_seed(seed)).unwrap()
    }

    #[test]
    fn vanishing_gaussian_noise_is_identity() {
        let data = normal_data(1000, 3, 1);
        let spec = GaussianChannelSpec::new(vec![0.0; 3], 1e-12).unwrap();
        let out = apply_gaussian(&data, &spec, &mut rng_from_seed(2)).unwrap();
        assert!(data.values().iter().zip(out.values()).all(|(a, b)| (a - b).abs() < 1e-4));
        assert!(GaussianChannelSpec::new(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn gaussian_noise_shifts_the_mean_and_drops_the_bound() {
        let data = sample_dataset(&CorrelationMatrix::identity(2), 200_000, Boundedness::Clip(3.0), &mut rng_from_seed(3)).unwrap();
        let spec = GaussianChannelSpec::new(vec![1.0, 0.0], 1.0).unwrap();
        let out = apply_gaussian(&data, &spec, &mut rng_from_seed(4)).unwrap();
        let mean = out.column(0).iter().sum::<f64>() / 200_000.0;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert_eq!(out.bound(), None);
        let wrong = GaussianChannelSpec::new(vec![0.0; 3], 1.0).unwrap();
        assert!(apply_gaussian(&data, &wrong, &mut rng_from_seed(4)).is_err());
    }

    #[test]
    fn case_one_means() {
        let spec = GaussianChannelSpec::two_level(7, &[0, 4, 5, 6], 1.0, 0.05, 1.0).unwrap();
        assert_eq!(spec.means(), &[1.0, 0.05, 0.05, 0.05, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn erasure_extremes_and_rate() {
        let data = sample_dataset(&CorrelationMatrix::identity(4), 250_000, Boundedness::Clip(3.0), &mut rng_from_seed(5)).unwrap();
        let none = apply_erasure(&data, &ErasureChannelSpec::new(0.0).unwrap(), &mut rng_from_seed(6)).unwrap();
        assert_eq!(none, data);
        let all = apply_erasure(&data, &ErasureChannelSpec::new(1.0).unwrap(), &mut rng_from_seed(6)).unwrap();
        assert!(all.values().iter().all(|&x| x == 1.0));
        let some = apply_erasure(&data, &ErasureChannelSpec::new(0.3).unwrap(), &mut rng_from_seed(6)).unwrap();
        let replaced = data.values().iter().zip(some.values()).filter(|(a, b)| a != b).count();
        let frac = replaced as f64 / 1e6;
        assert!((frac - 0.3).abs() < 0.002, "fraction {frac}");
        assert_eq!(some.bound(), Some(3.0));
        assert!(ErasureChannelSpec::new(1.5).is_err());
    }

    #[test]
    fn sign_quantization() {
        let data = Dataset::from_rows(&[vec![0.3, 0.0], vec![2.0, -0.1]], None).unwrap();
        let q = quantize_sign(&data);
        assert_eq!(q.column(0), &[1.0, 1.0]);
        assert_eq!(q.column(1), &[1.0, -1.0]);

        let data = normal_data(200_000, 2, 7);
        let q = quantize_sign(&data);
        for col in q.columns() {
            let plus = col.iter().filter(|&&x| x == 1.0).count() as f64 / 200_000.0;
            assert!((plus - 0.5).abs() < 0.005);
        }
    }

    #[test]
    fn bsc_behaviour() {
        let signs = quantize_sign(&normal_data(250_000, 4, 8));
        let same = apply_bsc(&signs, &BscSpec::new(0.0).unwrap(), &mut rng_from_seed(9)).unwrap();
        assert_eq!(same, signs);

        let flipped = apply_bsc(&signs, &BscSpec::new(0.1).unwrap(), &mut rng_from_seed(9)).unwrap();
        let flips = signs.values().iter().zip(flipped.values()).filter(|(a, b)| a != b).count();
        assert!((flips as f64 / 1e6 - 0.1).abs() < 0.002);

        let scrambled = apply_bsc(&signs, &BscSpec::new(0.5).unwrap(), &mut rng_from_seed(9)).unwrap();
        let agreement: f64 = signs.column(0).iter().zip(scrambled.column(0)).map(|(a, b)| a * b).sum::<f64>() / 250_000.0;
        assert!(agreement.abs() < 0.01);

        let real = normal_data(10, 1, 1);
        assert!(apply_bsc(&real, &BscSpec::new(0.1).unwrap(), &mut rng_from_seed(1)).is_err());
        assert!(BscSpec::new(0.6).is_err());
    }

    #[test]
    fn sign_agreement_follows_arcsine_law() {
        let tree = WeightedTree::from_weighted_edges(2, &[(0, 1, 0.6)]).unwrap();
        let data = sample_tree_dataset(&tree, 200_000, Boundedness::Unbounded, &mut rng_from_seed(10)).unwrap();
        let q = quantize_sign(&data);
        let agree = q.column(0).iter().zip(q.column(1)).filter(|(a, b)| a == b).count() as f64 / 200_000.0;
        assert!((agree - theta_from_rho(0.6).unwrap()).abs() < 0.01);
    }

    #[test]
    fn channels_commute_with_row_permutation_in_distribution() {
        // Entrywise independence: reversing rows before or after erasure leaves
        // the erased fraction statistically unchanged.
        let data = normal_data(100_000, 2, 11);
        let rev_cols: Vec<Vec<f64>> = data.columns().map(|c| c.iter().rev().copied().collect()).collect();
        let reversed = Dataset::from_columns(rev_cols, None).unwrap();
        let spec = ErasureChannelSpec::new(0.25).unwrap();
        let a = apply_erasure(&data, &spec, &mut rng_from_seed(12)).unwrap();
        let b = apply_erasure(&reversed, &spec, &mut rng_from_seed(13)).unwrap();
        let count = |d: &Dataset| d.values().iter().filter(|&&x| x == 1.0).count() as f64 / 2e5;
        assert!((count(&a) - count(&b)).abs() < 0.006);
    }
}
