//! Seeded Monte Carlo sweeps of the empirical recovery error against the
//! closed-form bounds, and the named experiment presets.

use std::io::Write;

use crate::bounds::{
    algorithmic_bound, bsc_crossover_probs, erasure_population_correlation, lemma4_bound, theorem1_bound,
    theorem2_bound, BscCrossoverProbs, ChainEdge, CrossoverLayout, ErasureBoundParams, ExternalKnowledge,
    GeneralCaseParams, HoeffdingRange, SharedNodeTriple,
};
use crate::channel::{BscSpec, ChannelSpec, ErasureChannelSpec, GaussianChannelSpec};
use crate::chow_liu::tree_equals;
use crate::error::{invalid, Result};
use crate::estimators::{pair_statistics, EstimatorMode};
use crate::exec::{map_indexed, Execution};
use crate::model::{sample_tree_dataset, tree_to_covariance, Boundedness};
use crate::rng::{child_rng, derive_seed, rng_from_seed, DEFAULT_SEED};
use crate::sim::{distribute, fc_estimate, transmit_all};
use crate::tree::{assign_edge_weights, generate_random_tree, Edge, TreeTopology, WeightedTree};

/// Where each trial's generating tree comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeSource {
    /// The same weighted tree in every trial.
    Fixed(WeightedTree),
    /// A fixed topology whose edge weights are redrawn uniformly from
    /// `[low, high]` in every trial.
    RandomWeights { topology: TreeTopology, low: f64, high: f64 },
    /// A fresh uniform random tree and weights in every trial.
    Random { d: usize, low: f64, high: f64 },
}

impl TreeSource {
    pub fn node_count(&self) -> usize {
        match self {
            TreeSource::Fixed(t) => t.node_count(),
            TreeSource::RandomWeights { topology, .. } => topology.node_count(),
            TreeSource::Random { d, .. } => *d,
        }
    }

    fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<WeightedTree> {
        match self {
            TreeSource::Fixed(t) => Ok(t.clone()),
            TreeSource::RandomWeights { topology, low, high } => assign_edge_weights(topology.clone(), *low, *high, rng),
            TreeSource::Random { d, low, high } => {
                let topo = generate_random_tree(*d, rng)?;
                assign_edge_weights(topo, *low, *high, rng)
            }
        }
    }
}

/// What counts as a failed trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// The learned tree differs from the generating tree.
    Recovery,
    /// The estimated mutual information of `eprime` is at least that of `e`.
    Crossover { e: Edge, eprime: Edge },
}

/// A bound overlaid on the empirical curve.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundSpec {
    /// Gaussian-channel bound; the slack `t` follows the sweep's schedule.
    Theorem1 { mu1: f64, mu2: f64, sigma_sq: f64, rho_e: f64, rho_eprime: f64, range: HoeffdingRange },
    Theorem2 { beta: f64, range: HoeffdingRange },
    Algorithmic { knowledge: ExternalKnowledge, beta: f64, range: HoeffdingRange },
    Lemma4 { probs: BscCrossoverProbs },
}

impl BoundSpec {
    pub fn name(&self) -> &'static str {
        match self {
            BoundSpec::Theorem1 { .. } => "theorem1",
            BoundSpec::Theorem2 { .. } => "theorem2",
            BoundSpec::Algorithmic { .. } => "algorithmic",
            BoundSpec::Lemma4 { .. } => "lemma4",
        }
    }

    pub fn evaluate(&self, d: usize, n: usize, t: f64) -> Result<f64> {
        match self {
            BoundSpec::Theorem1 { mu1, mu2, sigma_sq, rho_e, rho_eprime, range } => theorem1_bound(&GeneralCaseParams {
                t,
                mu1: *mu1,
                mu2: *mu2,
                sigma_sq: *sigma_sq,
                range: *range,
                rho_e: *rho_e,
                rho_eprime: *rho_eprime,
                d,
                n,
            }),
            BoundSpec::Theorem2 { beta, range } => theorem2_bound(&ErasureBoundParams { beta: *beta, range: *range, d, n }),
            BoundSpec::Algorithmic { knowledge, beta, range } => algorithmic_bound(knowledge, d, *beta, *range, n),
            BoundSpec::Lemma4 { probs } => Ok(lemma4_bound(probs, n)),
        }
    }
}

/// Slack `t` interpolated linearly from `start` at the smallest swept `n` to
/// `end` at the largest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TSchedule {
    pub start: f64,
    pub end: f64,
}

impl Default for TSchedule {
    fn default() -> Self {
        Self { start: 0.1, end: 0.14 }
    }
}

impl TSchedule {
    pub fn at(&self, n: usize, sizes: &[usize]) -> f64 {
        let (lo, hi) = (sizes[0] as f64, sizes[sizes.len() - 1] as f64);
        if hi <= lo {
            return self.start;
        }
        self.start + (self.end - self.start) * (n as f64 - lo) / (hi - lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub tree: TreeSource,
    pub channel: ChannelSpec,
    pub mode: EstimatorMode,
    pub boundedness: Boundedness,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub bounds: Vec<BoundSpec>,
    pub t_schedule: TSchedule,
    pub outcome: Outcome,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1"));
        }
        if self.sample_sizes.is_empty() {
            return Err(invalid("sample size sweep is empty"));
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sample sizes must be strictly increasing"));
        }
        if self.sample_sizes[0] < 2 {
            return Err(invalid("sample sizes must be >= 2"));
        }
        if !(self.t_schedule.start > 0.0 && self.t_schedule.end > 0.0) {
            return Err(invalid("slack schedule must stay positive"));
        }
        if let Outcome::Crossover { e, eprime } = self.outcome {
            let d = self.tree.node_count();
            if [e.0, e.1, eprime.0, eprime.1].iter().any(|&v| v >= d) || e.0 == e.1 || eprime.0 == eprime.1 {
                return Err(invalid("crossover pairs must join distinct nodes of the tree"));
            }
        }
        if let ChannelSpec::Gaussian(g) = &self.channel {
            if g.dim() != self.tree.node_count() {
                return Err(invalid(format!(
                    "gaussian channel describes {} sensors but the tree has {} nodes",
                    g.dim(),
                    self.tree.node_count()
                )));
            }
        }
        Ok(())
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sample_sizes(mut self, sizes: Vec<usize>) -> Self {
        self.sample_sizes = sizes;
        self
    }
}

/// One Monte Carlo run at sample size `n`. Returns `true` when the trial
/// succeeds (exact recovery, or no crossover). Depends only on
/// `(seed, n, trial)`.
pub fn run_trial(config: &ExperimentConfig, n: usize, trial: usize) -> Result<bool> {
    let mut rng = child_rng(config.seed, &[n as u64, trial as u64]);
    let tree = config.tree.draw(&mut rng)?;
    let data = sample_tree_dataset(&tree, n, config.boundedness, &mut rng)?;
    let channel_seed = derive_seed(config.seed, &[n as u64, trial as u64, 1]);
    let fc = transmit_all(&distribute(&data), &config.channel, config.mode, channel_seed)?;
    match config.outcome {
        Outcome::Recovery => tree_equals(&fc_estimate(&fc)?.topology, tree.topology()),
        Outcome::Crossover { e, eprime } => {
            let sigma = config.channel.gaussian_variance();
            let x = fc.dataset();
            let mi_e = pair_statistics(x.column(e.0), x.column(e.1), config.mode, sigma)?.mi;
            let mi_ep = pair_statistics(x.column(eprime.0), x.column(eprime.1), config.mode, sigma)?.mi;
            Ok(mi_e > mi_ep)
        }
    }
}

/// Failure fraction over `config.trials` runs and its standard error
/// `sqrt(p(1-p)/trials)`.
pub fn error_probability(config: &ExperimentConfig, n: usize, exec: Execution) -> Result<(f64, f64)> {
    config.validate()?;
    let outcomes = map_indexed(config.trials, exec, |k| run_trial(config, n, k));
    let mut failures = 0usize;
    for ok in outcomes {
        failures += usize::from(!ok?);
    }
    let trials = config.trials as f64;
    let p = failures as f64 / trials;
    Ok((p, (p * (1.0 - p) / trials).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub empirical: f64,
    pub stderr: f64,
    pub bounds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub bound_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn bound_column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.bound_names.iter().position(|b| b == name)?;
        Some(self.rows.iter().map(|r| r.bounds[k]).collect())
    }

    /// `n,empirical,stderr,<bounds>...` with six significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["n".to_string(), "empirical".into(), "stderr".into()];
        header.extend(self.bound_names.iter().cloned());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.n.to_string(), sig6(row.empirical), sig6(row.stderr)];
            rec.extend(row.bounds.iter().map(|&b| sig6(b)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

fn sig6(x: f64) -> String {
    format!("{x:.5e}")
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep_with(config, Execution::default())
}

pub fn run_sweep_with(config: &ExperimentConfig, exec: Execution) -> Result<SweepResult> {
    config.validate()?;
    let d = config.tree.node_count();
    let mut rows = Vec::with_capacity(config.sample_sizes.len());
    for &n in &config.sample_sizes {
        let (empirical, stderr) = error_probability(config, n, exec)?;
        let t = config.t_schedule.at(n, &config.sample_sizes);
        let bounds = config.bounds.iter().map(|b| b.evaluate(d, n, t)).collect::<Result<Vec<_>>>()?;
        log::info!("{}: n = {n}, empirical = {empirical:.4}", config.name);
        rows.push(SweepRow { n, empirical, stderr, bounds });
    }
    Ok(SweepResult { bound_names: config.bounds.iter().map(|b| b.name().to_string()).collect(), rows })
}

/// Tree edge `e` and non-edge `e'` on its path with the smallest
/// `f(ρ_e) - f(ρ_e')`, returned as `(f(ρ_e), f(ρ_e'))`.
pub fn weakest_crossover_pair(tree: &WeightedTree, f: impl Fn(f64) -> f64) -> Option<(f64, f64)> {
    let cov = tree_to_covariance(tree);
    let topo = tree.topology();
    let d = topo.node_count();
    let mut best: Option<(f64, f64)> = None;
    for r in 0..d {
        for s in (r + 1)..d {
            if topo.contains_edge(r, s) {
                continue;
            }
            let rho_ep = f(cov.get(r, s));
            for w in topo.path(r, s).windows(2) {
                let rho_e = f(cov.get(w[0], w[1]));
                if best.is_none_or(|(a, b)| rho_e - rho_ep < a - b) {
                    best = Some((rho_e, rho_ep));
                }
            }
        }
    }
    best
}

/// Names accepted by [`preset`].
pub const PRESETS: &[(&str, &str)] = &[
    ("case1", "seven-node chain, gaussian channels N(1,1) on sensors 1,5,6,7 and N(0.05,1) elsewhere"),
    ("case2", "as case1 with channel variance 2"),
    ("fig5", "case1 channels on a fixed seven-node chain with the gaussian-channel bound"),
    ("erasure_algorithmic", "ten-node tree through erasure channels with the erasure and algorithmic bounds"),
    ("bsc_crossover", "three-node chain (0.9, 0.1), sign quantization and BSC(0.1), crossover of (2,3) by (1,3)"),
    ("star", "five-node star, sign quantization and BSC(0.1)"),
    ("star_eps02", "five-node star, sign quantization and BSC(0.2)"),
    ("star_noiseless", "five-node star, sign quantization without channel noise"),
];

/// Data range `[-3, 3]` used by every continuous preset.
pub const PRESET_DATA_BOUND: f64 = 3.0;

/// Nodes 1,5,6,7 (0-based 0,4,5,6) carry the high-mean channels.
const NOISY_SENSORS: [usize; 4] = [0, 4, 5, 6];

/// Seven-node chain 4-3-2-1-5-6-7, so the high-mean sensors form a
/// connected subtree.
pub fn seven_node_topology() -> TreeTopology {
    TreeTopology::new(7, [(3, 2), (2, 1), (1, 0), (0, 4), (4, 5), (5, 6)]).expect("valid chain")
}

/// Stream that draws the seven-node tree's weights from `[0.1, 0.9]`.
pub const SEVEN_NODE_WEIGHT_SEED: u64 = 53;

/// [`seven_node_topology`] with weights drawn once from `[0.1, 0.9]`.
pub fn seven_node_tree() -> WeightedTree {
    assign_edge_weights(seven_node_topology(), 0.1, 0.9, &mut rng_from_seed(SEVEN_NODE_WEIGHT_SEED))
        .expect("valid interval")
}

/// Ten-node tree with subtrees {1,2,3,4,5,6} and {7,8,9,10} joined by the
/// edge (4,7); N(4) = {1,5,6} and N(7) = {8,9}.
pub fn ten_node_topology() -> TreeTopology {
    TreeTopology::new(10, [(0, 1), (0, 2), (3, 0), (3, 4), (3, 5), (3, 6), (6, 7), (6, 8), (8, 9)]).expect("valid tree")
}

fn gaussian_case(name: &str, variance: f64) -> ExperimentConfig {
    let channel = GaussianChannelSpec::two_level(7, &NOISY_SENSORS, 1.0, 0.05, variance).expect("valid channel");
    ExperimentConfig {
        name: name.into(),
        tree: TreeSource::Fixed(seven_node_tree()),
        channel: ChannelSpec::Gaussian(channel),
        mode: EstimatorMode::Continuous,
        boundedness: Boundedness::Clip(PRESET_DATA_BOUND),
        sample_sizes: vec![500, 1000, 1500, 2000, 2500, 3000],
        trials: 1000,
        seed: DEFAULT_SEED,
        bounds: vec![],
        t_schedule: TSchedule::default(),
        outcome: Outcome::Recovery,
    }
}

fn uniform_tree(topology: TreeTopology, w: f64) -> WeightedTree {
    let k = topology.edges().len();
    WeightedTree::new(topology, vec![w; k]).expect("valid weights")
}

fn star(name: &str, epsilon: f64) -> ExperimentConfig {
    let channel = if epsilon > 0.0 {
        ChannelSpec::Bsc(BscSpec::new(epsilon).expect("valid flip probability"))
    } else {
        ChannelSpec::Noiseless
    };
    ExperimentConfig {
        name: name.into(),
        tree: TreeSource::RandomWeights { topology: TreeTopology::star(5, 0).expect("valid star"), low: 0.1, high: 0.9 },
        channel,
        mode: EstimatorMode::Quantized,
        boundedness: Boundedness::Unbounded,
        sample_sizes: vec![250, 500, 1000, 1500, 2000, 3000, 4000, 5000, 6000],
        trials: 1000,
        seed: DEFAULT_SEED,
        bounds: vec![],
        t_schedule: TSchedule::default(),
        outcome: Outcome::Recovery,
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let range = HoeffdingRange::from_data_bound(PRESET_DATA_BOUND)?;
    let cfg = match name {
        "case1" => gaussian_case(name, 1.0),
        "case2" => gaussian_case(name, 2.0),
        "fig5" => {
            let (rho_e, rho_eprime) = weakest_crossover_pair(&seven_node_tree(), |r| r).expect("tree has non-edges");
            let mut cfg = gaussian_case(name, 1.0);
            cfg.sample_sizes = vec![1000, 2000, 3000, 125_000, 150_000];
            cfg.bounds = vec![BoundSpec::Theorem1 { mu1: 1.0, mu2: 0.05, sigma_sq: 1.0, rho_e, rho_eprime, range }];
            cfg
        }
        "erasure_algorithmic" => {
            let xi = 0.1;
            let tree = uniform_tree(ten_node_topology(), 0.5);
            let (a, b) = weakest_crossover_pair(&tree, |r| erasure_population_correlation(r, xi).expect("valid ξ"))
                .expect("tree has non-edges");
            let beta = a - b;
            let knowledge = ExternalKnowledge::paired(vec![6, 4], vec![3, 2])?;
            ExperimentConfig {
                name: name.into(),
                tree: TreeSource::Fixed(tree),
                channel: ChannelSpec::Erasure(ErasureChannelSpec::new(xi)?),
                mode: EstimatorMode::Continuous,
                boundedness: Boundedness::Clip(PRESET_DATA_BOUND),
                sample_sizes: vec![1000, 2000, 110_000, 130_000],
                trials: 1000,
                seed: DEFAULT_SEED,
                bounds: vec![BoundSpec::Theorem2 { beta, range }, BoundSpec::Algorithmic { knowledge, beta, range }],
                t_schedule: TSchedule::default(),
                outcome: Outcome::Recovery,
            }
        }
        "bsc_crossover" => {
            let (rho1, rho2, epsilon) = (0.9, 0.1, 0.1);
            let triple = SharedNodeTriple::chain(rho1, rho2, ChainEdge::Second)?;
            let probs = bsc_crossover_probs(&CrossoverLayout::SharedNode(triple), epsilon)?;
            ExperimentConfig {
                name: name.into(),
                tree: TreeSource::Fixed(WeightedTree::from_weighted_edges(3, &[(0, 1, rho1), (1, 2, rho2)])?),
                channel: ChannelSpec::Bsc(BscSpec::new(epsilon)?),
                mode: EstimatorMode::Quantized,
                boundedness: Boundedness::Unbounded,
                sample_sizes: vec![250, 500, 1000, 1500, 2000],
                trials: 1000,
                seed: DEFAULT_SEED,
                bounds: vec![BoundSpec::Lemma4 { probs }],
                t_schedule: TSchedule::default(),
                outcome: Outcome::Crossover { e: (1, 2), eprime: (0, 2) },
            }
        }
        "star" => star(name, 0.1),
        "star_eps02" => star(name, 0.2),
        "star_noiseless" => star(name, 0.0),
        other => {
            let known: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
            return Err(invalid(format!("unknown preset '{other}' (known: {})", known.join(", "))));
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(name: &str) -> ExperimentConfig {
        preset(name).unwrap().with_trials(40).with_sample_sizes(vec![200, 400])
    }

    #[test]
    fn every_listed_preset_builds() {
        for (name, _) in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn presets_carry_the_documented_channels() {
        let c1 = preset("case1").unwrap();
        let ChannelSpec::Gaussian(g) = &c1.channel else { panic!("expected gaussian") };
        assert_eq!(g.means(), &[1.0, 0.05, 0.05, 0.05, 1.0, 1.0, 1.0]);
        assert_eq!(g.variance(), 1.0);
        let ChannelSpec::Gaussian(g2) = preset("case2").unwrap().channel else { panic!("expected gaussian") };
        assert_eq!(g2.means(), g.means());
        assert_eq!(g2.variance(), 2.0);
        let s = preset("star").unwrap();
        assert_eq!(s.tree.node_count(), 5);
        assert_eq!(s.mode, EstimatorMode::Quantized);
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = small("case1");
        for k in 0..10 {
            assert_eq!(run_trial(&cfg, 300, k).unwrap(), run_trial(&cfg, 300, k).unwrap());
        }
    }

    #[test]
    fn sweep_is_identical_across_execution_modes() {
        let cfg = small("bsc_crossover");
        let a = run_sweep_with(&cfg, Execution::Sequential).unwrap().to_csv_string().unwrap();
        let b = run_sweep_with(&cfg, Execution::Parallel).unwrap().to_csv_string().unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("n,empirical,stderr,lemma4\n"));
    }

    #[test]
    fn full_erasure_always_fails() {
        let mut cfg = small("erasure_algorithmic");
        cfg.channel = ChannelSpec::Erasure(ErasureChannelSpec::new(1.0).unwrap());
        assert_eq!(error_probability(&cfg, 200, Execution::Sequential).unwrap(), (0.0 + 1.0, 0.0));
    }

    #[test]
    fn noiseless_large_sample_recovers() {
        let mut cfg = small("case1");
        cfg.tree = TreeSource::Random { d: 5, low: 0.1, high: 0.9 };
        cfg.channel = ChannelSpec::Noiseless;
        cfg.trials = 100;
        let (p, _) = error_probability(&cfg, 100_000, Execution::default()).unwrap();
        assert!(p <= 0.01, "error {p}");
    }

    #[test]
    fn schedule_interpolates_linearly() {
        let s = TSchedule::default();
        let sizes = [1000, 2000, 3000];
        assert_eq!(s.at(1000, &sizes), 0.1);
        assert!((s.at(2000, &sizes) - 0.12).abs() < 1e-15);
        assert!((s.at(3000, &sizes) - 0.14).abs() < 1e-15);
    }

    #[test]
    fn weakest_pair_on_uniform_chain() {
        let tree = uniform_tree(seven_node_topology(), 0.5);
        assert_eq!(weakest_crossover_pair(&tree, |r| r), Some((0.5, 0.25)));
    }

    #[test]
    fn csv_uses_six_significant_digits() {
        let r = SweepResult {
            bound_names: vec!["theorem2".into()],
            rows: vec![SweepRow { n: 10, empirical: 0.5, stderr: 0.0158113883, bounds: vec![4.348512e-3] }],
        };
        assert_eq!(r.to_csv_string().unwrap(), "n,empirical,stderr,theorem2\n10,5.00000e-1,1.58114e-2,4.34851e-3\n");
    }

    #[test]
    fn config_validation() {
        assert!(small("case1").with_trials(0).validate().is_err());
        assert!(small("case1").with_sample_sizes(vec![]).validate().is_err());
        assert!(small("case1").with_sample_sizes(vec![300, 200]).validate().is_err());
    }
}
