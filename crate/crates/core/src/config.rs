//! Plain-text experiment configuration: `[section]` headers followed by
//! `key = value` lines. `#` starts a comment.
//!
//! ```text
//! [experiment]
//! preset = case1        # optional starting point
//! trials = 500
//! samples = 500, 1000, 2000
//! seed = 7
//!
//! [tree]
//! source = random_weights
//! topology = star
//! d = 5
//!
//! [channel]
//! kind = bsc
//! probability = 0.1
//! ```
//!
//! Sections and keys:
//!
//! * `experiment`: `preset`, `name`, `seed`, `trials`, `samples`,
//!   `mode` (`continuous` | `quantized`), `data_bound` (a number or `none`),
//!   `bounding` (`clip` | `reject`).
//! * `tree`: `source` (`fixed` | `random_weights` | `random`), `file` (edge
//!   list, fixed trees), `topology` (`chain` | `star` | `edges`), `edges`
//!   (`1-2, 2-3`), `weights`, `d`, `low`, `high`.
//! * `channel`: `kind` (`noiseless` | `gaussian` | `erasure` | `bsc`),
//!   `means`, `variance`, `probability`.
//! * `bounds`: `families` (`theorem1, theorem2, algorithmic, lemma4`), `M`,
//!   `a_M`, `b_M`, `t_start`, `t_end`, `mu1`, `mu2`, `rho_e`, `rho_eprime`,
//!   `beta`, `subtrees`, `neighbors`. Gaps default to the weakest crossover
//!   pair of a fixed tree.
//! * `outcome`: `kind` (`recovery` | `crossover`), `e`, `eprime`.
//!
//! Node numbers are 1-based and relative paths are resolved against the
//! config file's directory.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use crate::bounds::{
    bsc_crossover_probs, erasure_population_correlation, CrossoverLayout, ExternalKnowledge, HoeffdingRange,
    SharedNodeTriple,
};
use crate::channel::{BscSpec, ChannelSpec, ErasureChannelSpec, GaussianChannelSpec};
use crate::error::{invalid, Error, Result};
use crate::estimators::EstimatorMode;
use crate::harness::{preset, weakest_crossover_pair, BoundSpec, ExperimentConfig, Outcome, TreeSource};
use crate::model::{tree_to_covariance, Boundedness};
use crate::tree::{Edge, TreeTopology, WeightedTree};

const KNOWN: &[(&str, &[&str])] = &[
    ("experiment", &["preset", "name", "seed", "trials", "samples", "mode", "data_bound", "bounding"]),
    ("tree", &["source", "file", "topology", "edges", "weights", "d", "low", "high"]),
    ("channel", &["kind", "means", "variance", "probability"]),
    (
        "bounds",
        &[
            "families", "M", "a_M", "b_M", "t_start", "t_end", "mu1", "mu2", "rho_e", "rho_eprime", "beta", "subtrees",
            "neighbors",
        ],
    ),
    ("outcome", &["kind", "e", "eprime"]),
];

/// A parsed value with the line it came from.
#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// Sections of `key = value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ConfigFile::default();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !KNOWN.iter().any(|(s, _)| *s == name) {
                    return Err(Error::Parse { line, message: format!("unknown section [{name}]") });
                }
                cfg.sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::Parse { line, message: format!("expected `key = value`, found `{body}`") });
            };
            let Some(section) = &current else {
                return Err(Error::Parse { line, message: "key outside of any [section]".into() });
            };
            let key = key.trim();
            let allowed = KNOWN.iter().find(|(s, _)| s == section).map(|(_, k)| *k).unwrap_or(&[]);
            if !allowed.contains(&key) {
                return Err(Error::Parse { line, message: format!("unknown key `{key}` in [{section}]") });
            }
            let slot = cfg.sections.get_mut(section).expect("section registered");
            if slot.insert(key.to_string(), Entry { value: value.trim().to_string(), line }).is_some() {
                return Err(Error::Parse { line, message: format!("duplicate key `{key}` in [{section}]") });
            }
        }
        Ok(cfg)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entry(section, key).map(|e| e.value.as_str())
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section)?.get(key)
    }

    fn parsed<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|err| Error::Parse {
                line: e.line,
                message: format!("bad value `{}` for {key}: {err}", e.value),
            }),
        }
    }

    fn list<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.entry(section, key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|err| Error::Parse { line: e.line, message: format!("bad list item `{s}` for {key}: {err}") })
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn edges(&self, section: &str, key: &str) -> Result<Option<Vec<Edge>>> {
        let Some(e) = self.entry(section, key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|s| parse_edge(s).map_err(|message| Error::Parse { line: e.line, message }))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

fn parse_edge(s: &str) -> std::result::Result<Edge, String> {
    let (a, b) = s.trim().split_once('-').ok_or_else(|| format!("expected `i-j`, found `{}`", s.trim()))?;
    let node = |v: &str| -> std::result::Result<usize, String> {
        let k: usize = v.trim().parse().map_err(|e| format!("bad node `{}`: {e}", v.trim()))?;
        k.checked_sub(1).ok_or_else(|| "nodes are 1-indexed".to_string())
    };
    Ok((node(a)?, node(b)?))
}

/// Reads and builds an experiment from a config file.
pub fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    experiment_from_config(&ConfigFile::parse(&text)?, base)
}

/// Builds an experiment, starting from `experiment.preset` when given and
/// overriding whatever the file sets.
pub fn experiment_from_config(cfg: &ConfigFile, base_dir: &Path) -> Result<ExperimentConfig> {
    let mut exp = match cfg.get("experiment", "preset") {
        Some(name) => preset(name)?,
        None => blank()?,
    };
    let from_scratch = cfg.get("experiment", "preset").is_none();

    if let Some(name) = cfg.get("experiment", "name") {
        exp.name = name.to_string();
    }
    if let Some(seed) = cfg.parsed("experiment", "seed")? {
        exp.seed = seed;
    }
    if let Some(trials) = cfg.parsed("experiment", "trials")? {
        exp.trials = trials;
    }
    if let Some(samples) = cfg.list("experiment", "samples")? {
        exp.sample_sizes = samples;
    }
    if let Some(mode) = cfg.get("experiment", "mode") {
        exp.mode = match mode {
            "continuous" => EstimatorMode::Continuous,
            "quantized" => EstimatorMode::Quantized,
            other => return Err(invalid(format!("unknown mode `{other}`"))),
        };
    }
    exp.boundedness = boundedness(cfg, exp.boundedness)?;

    let tree_changed = cfg.has_section("tree");
    if tree_changed {
        exp.tree = tree_source(cfg, base_dir)?;
    } else if from_scratch {
        return Err(invalid("[tree] section is required without a preset"));
    }
    if cfg.has_section("channel") {
        exp.channel = channel(cfg, exp.tree.node_count())?;
    } else if from_scratch {
        exp.channel = ChannelSpec::Noiseless;
    }
    if cfg.has_section("outcome") {
        exp.outcome = match cfg.get("outcome", "kind").unwrap_or("recovery") {
            "recovery" => Outcome::Recovery,
            "crossover" => {
                let pair = |key: &str| -> Result<Edge> {
                    cfg.edges("outcome", key)?
                        .and_then(|v| v.first().copied())
                        .ok_or_else(|| invalid(format!("crossover outcome needs `{key}`")))
                };
                Outcome::Crossover { e: pair("e")?, eprime: pair("eprime")? }
            }
            other => return Err(invalid(format!("unknown outcome `{other}`"))),
        };
    }
    if cfg.has_section("bounds") {
        if let Some(s) = cfg.parsed("bounds", "t_start")? {
            exp.t_schedule.start = s;
        }
        if let Some(e) = cfg.parsed("bounds", "t_end")? {
            exp.t_schedule.end = e;
        }
        exp.bounds = bounds(cfg, &exp)?;
    } else if from_scratch || tree_changed {
        exp.bounds.clear();
    }
    exp.validate()?;
    Ok(exp)
}

/// Neutral defaults for a config without a preset.
fn blank() -> Result<ExperimentConfig> {
    let mut exp = preset("case1")?;
    exp.name = "custom".into();
    exp.mode = EstimatorMode::Continuous;
    exp.boundedness = Boundedness::Unbounded;
    exp.bounds.clear();
    exp.outcome = Outcome::Recovery;
    Ok(exp)
}

fn boundedness(cfg: &ConfigFile, current: Boundedness) -> Result<Boundedness> {
    let bound = match cfg.get("experiment", "data_bound") {
        None => current.bound(),
        Some("none") => None,
        Some(_) => cfg.parsed::<f64>("experiment", "data_bound")?,
    };
    let reject = match cfg.get("experiment", "bounding") {
        None => matches!(current, Boundedness::Reject(_)),
        Some("clip") => false,
        Some("reject") => true,
        Some(other) => return Err(invalid(format!("unknown bounding `{other}`"))),
    };
    Ok(match (bound, reject) {
        (None, _) => Boundedness::Unbounded,
        (Some(m), false) => Boundedness::Clip(m),
        (Some(m), true) => Boundedness::Reject(m),
    })
}

fn tree_source(cfg: &ConfigFile, base_dir: &Path) -> Result<TreeSource> {
    let low = cfg.parsed("tree", "low")?.unwrap_or(0.1);
    let high = cfg.parsed("tree", "high")?.unwrap_or(0.9);
    let source = cfg.get("tree", "source").unwrap_or("fixed");
    match source {
        "random" => {
            let d = cfg.parsed("tree", "d")?.ok_or_else(|| invalid("random trees need `d`"))?;
            Ok(TreeSource::Random { d, low, high })
        }
        "random_weights" => Ok(TreeSource::RandomWeights { topology: topology(cfg)?, low, high }),
        "fixed" => {
            if let Some(file) = cfg.get("tree", "file") {
                let path = base_dir.join(file);
                let f = File::open(&path).map_err(|e| invalid(format!("cannot open tree file {}: {e}", path.display())))?;
                return Ok(TreeSource::Fixed(WeightedTree::read_from(BufReader::new(f))?));
            }
            let topo = topology(cfg)?;
            let weights: Vec<f64> = cfg.list("tree", "weights")?.ok_or_else(|| invalid("fixed trees need `file` or `weights`"))?;
            let weights = match weights.len() {
                1 => vec![weights[0]; topo.edges().len()],
                _ => weights,
            };
            Ok(TreeSource::Fixed(weights_in_listed_order(cfg, topo, weights)?))
        }
        other => Err(invalid(format!("unknown tree source `{other}`"))),
    }
}

/// Weights follow the order of `edges` when edges were listed explicitly.
fn weights_in_listed_order(cfg: &ConfigFile, topo: TreeTopology, weights: Vec<f64>) -> Result<WeightedTree> {
    match cfg.edges("tree", "edges")? {
        Some(listed) if cfg.get("tree", "topology").unwrap_or("edges") == "edges" => {
            if listed.len() != weights.len() {
                return Err(invalid(format!("{} edges but {} weights", listed.len(), weights.len())));
            }
            let triples: Vec<(usize, usize, f64)> = listed.iter().zip(&weights).map(|(&(a, b), &w)| (a, b, w)).collect();
            WeightedTree::from_weighted_edges(topo.node_count(), &triples)
        }
        _ => WeightedTree::new(topo, weights),
    }
}

fn topology(cfg: &ConfigFile) -> Result<TreeTopology> {
    let d: Option<usize> = cfg.parsed("tree", "d")?;
    let need_d = || d.ok_or_else(|| invalid("`d` is required for this topology"));
    match cfg.get("tree", "topology").unwrap_or("edges") {
        "chain" => TreeTopology::chain(need_d()?),
        "star" => TreeTopology::star(need_d()?, 0),
        "edges" => {
            let edges = cfg.edges("tree", "edges")?.ok_or_else(|| invalid("`edges` topology needs an `edges` list"))?;
            TreeTopology::new(d.unwrap_or(edges.len() + 1), edges)
        }
        other => Err(invalid(format!("unknown topology `{other}`"))),
    }
}

fn channel(cfg: &ConfigFile, d: usize) -> Result<ChannelSpec> {
    let probability = || -> Result<f64> {
        cfg.parsed("channel", "probability")?.ok_or_else(|| invalid("this channel needs `probability`"))
    };
    match cfg.get("channel", "kind").unwrap_or("noiseless") {
        "noiseless" => Ok(ChannelSpec::Noiseless),
        "gaussian" => {
            let variance = cfg.parsed("channel", "variance")?.ok_or_else(|| invalid("gaussian channel needs `variance`"))?;
            let means: Vec<f64> = cfg.list("channel", "means")?.unwrap_or_else(|| vec![0.0]);
            let means = if means.len() == 1 { vec![means[0]; d] } else { means };
            Ok(ChannelSpec::Gaussian(GaussianChannelSpec::new(means, variance)?))
        }
        "erasure" => Ok(ChannelSpec::Erasure(ErasureChannelSpec::new(probability()?)?)),
        "bsc" => Ok(ChannelSpec::Bsc(BscSpec::new(probability()?)?)),
        other => Err(invalid(format!("unknown channel `{other}`"))),
    }
}

fn bounds(cfg: &ConfigFile, exp: &ExperimentConfig) -> Result<Vec<BoundSpec>> {
    let range = match (cfg.parsed::<f64>("bounds", "a_M")?, cfg.parsed::<f64>("bounds", "b_M")?) {
        (Some(a), Some(b)) => HoeffdingRange::new(a, b)?,
        (None, None) => HoeffdingRange::from_data_bound(cfg.parsed("bounds", "M")?.unwrap_or(3.0))?,
        _ => return Err(invalid("`a_M` and `b_M` must be given together")),
    };
    let fixed = match &exp.tree {
        TreeSource::Fixed(t) => Some(t),
        _ => None,
    };
    let families: Vec<String> = cfg.list("bounds", "families")?.unwrap_or_default();
    let mut out = Vec::with_capacity(families.len());
    for family in &families {
        let spec = match family.as_str() {
            "theorem1" => {
                let sigma_sq = exp
                    .channel
                    .gaussian_variance()
                    .ok_or_else(|| invalid("theorem1 needs a gaussian channel"))?;
                let (rho_e, rho_eprime) = match (cfg.parsed("bounds", "rho_e")?, cfg.parsed("bounds", "rho_eprime")?) {
                    (Some(a), Some(b)) => (a, b),
                    _ => fixed
                        .and_then(|t| weakest_crossover_pair(t, |r| r))
                        .ok_or_else(|| invalid("theorem1 needs `rho_e`/`rho_eprime` or a fixed tree"))?,
                };
                BoundSpec::Theorem1 {
                    mu1: cfg.parsed("bounds", "mu1")?.unwrap_or(0.0),
                    mu2: cfg.parsed("bounds", "mu2")?.unwrap_or(0.0),
                    sigma_sq,
                    rho_e,
                    rho_eprime,
                    range,
                }
            }
            "theorem2" => BoundSpec::Theorem2 { beta: erasure_beta(cfg, exp, fixed)?, range },
            "algorithmic" => {
                let subtrees = cfg.list("bounds", "subtrees")?.ok_or_else(|| invalid("algorithmic needs `subtrees`"))?;
                let neighbors = cfg.list("bounds", "neighbors")?.unwrap_or_default();
                let knowledge = ExternalKnowledge::general(subtrees, neighbors)?;
                knowledge.check_node_count(exp.tree.node_count())?;
                BoundSpec::Algorithmic { knowledge, beta: erasure_beta(cfg, exp, fixed)?, range }
            }
            "lemma4" => {
                let Outcome::Crossover { e, eprime } = exp.outcome else {
                    return Err(invalid("lemma4 needs a crossover outcome"));
                };
                let tree = fixed.ok_or_else(|| invalid("lemma4 needs a fixed tree"))?;
                let epsilon = match &exp.channel {
                    ChannelSpec::Bsc(b) => b.flip_probability(),
                    ChannelSpec::Noiseless => 0.0,
                    other => return Err(invalid(format!("lemma4 does not apply to the {} channel", other.name()))),
                };
                let layout = shared_node_layout(tree, e, eprime)?;
                BoundSpec::Lemma4 { probs: bsc_crossover_probs(&layout, epsilon)? }
            }
            other => return Err(invalid(format!("unknown bound family `{other}`"))),
        };
        out.push(spec);
    }
    Ok(out)
}

fn erasure_beta(cfg: &ConfigFile, exp: &ExperimentConfig, fixed: Option<&WeightedTree>) -> Result<f64> {
    if let Some(beta) = cfg.parsed("bounds", "beta")? {
        return Ok(beta);
    }
    let xi = match &exp.channel {
        ChannelSpec::Erasure(e) => e.probability(),
        _ => 0.0,
    };
    let tree = fixed.ok_or_else(|| invalid("`beta` is required unless the tree is fixed"))?;
    let (a, b) = weakest_crossover_pair(tree, |r| erasure_population_correlation(r, xi).unwrap_or(f64::NAN))
        .ok_or_else(|| invalid("tree has no non-edges; no crossover gap"))?;
    Ok(a - b)
}

/// `e` and `e'` must share exactly one node.
pub fn shared_node_layout(tree: &WeightedTree, e: Edge, eprime: Edge) -> Result<CrossoverLayout> {
    let shared = [e.0, e.1].into_iter().find(|v| *v == eprime.0 || *v == eprime.1);
    let Some(s) = shared else {
        return Ok(CrossoverLayout::Disjoint);
    };
    let x = if e.0 == s { e.1 } else { e.0 };
    let y = if eprime.0 == s { eprime.1 } else { eprime.0 };
    if x == y {
        return Err(invalid("crossover pairs must differ"));
    }
    let cov = tree_to_covariance(tree);
    Ok(CrossoverLayout::SharedNode(SharedNodeTriple::new(cov.get(s, x), cov.get(s, y), cov.get(x, y))?))
}
