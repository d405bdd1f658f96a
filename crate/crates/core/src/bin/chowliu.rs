use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chowliu::bounds::{
    bsc_crossover_probs, lemma2_part1, lemma2_part2, lemma4_bound, sample_complexity, sigma_l_squared,
    BoundFamily, ChainEdge, CrossoverLayout, ErasureBoundParams, ExternalKnowledge, GeneralCaseParams,
    HoeffdingRange, SharedNodeTriple,
};
use chowliu::channel::{apply_bsc, apply_erasure, apply_gaussian, quantize_sign, BscSpec, ErasureChannelSpec, GaussianChannelSpec};
use chowliu::chow_liu::{chow_liu, tree_equals};
use chowliu::config::load_experiment;
use chowliu::estimators::EstimatorMode;
use chowliu::exec::{with_workers, Execution};
use chowliu::harness::{preset, run_sweep_with, PRESETS};
use chowliu::model::{sample_tree_dataset, Boundedness, Dataset};
use chowliu::rng::{rng_from_seed, DEFAULT_SEED};
use chowliu::tree::{assign_edge_weights, generate_random_tree, WeightedTree};
use chowliu::Error;

/// Chow-Liu tree learning over noisy sensor channels.
#[derive(Parser)]
#[command(name = "chowliu", version)]
struct Cli {
    /// Master seed. Defaults to CHOWLIU_SEED, then to 20240601.
    #[arg(long, global = true, env = "CHOWLIU_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a uniform random tree with weights from [low, high].
    Generate {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.1)]
        low: f64,
        #[arg(long, default_value_t = 0.9)]
        high: f64,
        /// Edge-list output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw samples from a tree model.
    Sample {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        n: usize,
        /// Confine samples to [-M, M].
        #[arg(long = "M")]
        m: Option<f64>,
        /// Redraw out-of-range rows instead of clipping them.
        #[arg(long)]
        reject: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pass a dataset through a channel.
    Corrupt {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        channel: ChannelKind,
        /// Per-sensor means (one value applies to all sensors).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        means: Vec<f64>,
        #[arg(long)]
        variance: Option<f64>,
        /// Erasure or flip probability.
        #[arg(long)]
        probability: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn the tree from a dataset.
    Learn {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Continuous)]
        mode: Mode,
        /// Gaussian channel variance to normalize by.
        #[arg(long)]
        sigma_sq: Option<f64>,
        /// Generating tree to compare against.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate or invert a recovery bound.
    Bound(BoundArgs),
    /// Run a Monte Carlo sweep and write its CSV.
    Sweep {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        /// Run trials on the calling thread only.
        #[arg(long)]
        sequential: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in experiments.
    PresetList,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelKind {
    Gaussian,
    Erasure,
    Bsc,
    Sign,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Continuous,
    Quantized,
}

impl From<Mode> for EstimatorMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Continuous => EstimatorMode::Continuous,
            Mode::Quantized => EstimatorMode::Quantized,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Theorem1,
    Theorem2,
    Algorithmic,
    Lemma2,
    Lemma4,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    First,
    Second,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(value_enum)]
    family: Family,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Data bound; sets the Hoeffding range to [-2M², 2M²].
    #[arg(long = "M", default_value_t = 3.0)]
    m: f64,
    #[arg(long = "a-M", allow_hyphen_values = true, requires = "b_m")]
    a_m: Option<f64>,
    #[arg(long = "b-M", requires = "a_m")]
    b_m: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu2: Option<f64>,
    #[arg(long)]
    sigma_sq: Option<f64>,
    #[arg(long)]
    rho_e: Option<f64>,
    #[arg(long)]
    rho_eprime: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    subtrees: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    neighbors: Vec<usize>,
    #[arg(long)]
    rho1: Option<f64>,
    #[arg(long)]
    rho2: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Chain edge whose crossover by (1,3) is bounded.
    #[arg(long, value_enum, default_value_t = Target::Second)]
    target: Target,
    /// Print the smallest n whose bound is at most --delta.
    #[arg(long, requires = "delta")]
    invert: bool,
    #[arg(long)]
    delta: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NumericFailure(_) | Error::Domain(_) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match cli.command {
        Command::Generate { d, low, high, out } => {
            let mut rng = rng_from_seed(seed);
            let tree = assign_edge_weights(generate_random_tree(d, &mut rng)?, low, high, &mut rng)?;
            tree.write_to(output(out.as_deref())?)?;
            let (lo, hi) = tree.weights().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &w| (a.min(w), b.max(w)));
            eprintln!("d = {d}, {} edges, weights in [{lo:.4}, {hi:.4}]", d - 1);
        }
        Command::Sample { tree, n, m, reject, out } => {
            let tree = read_tree(&tree)?;
            let bounds = match (m, reject) {
                (None, _) => Boundedness::Unbounded,
                (Some(m), false) => Boundedness::Clip(m),
                (Some(m), true) => Boundedness::Reject(m),
            };
            let data = sample_tree_dataset(&tree, n, bounds, &mut rng_from_seed(seed))?;
            data.write_csv(output(out.as_deref())?)?;
        }
        Command::Corrupt { data, channel, means, variance, probability, out } => {
            let data = read_data(&data)?;
            let mut rng = rng_from_seed(seed);
            let need_p = || probability.ok_or_else(|| invalid("this channel needs --probability"));
            let noisy = match channel {
                ChannelKind::Gaussian => {
                    let variance = variance.ok_or_else(|| invalid("gaussian channel needs --variance"))?;
                    let means = match means.len() {
                        0 => vec![0.0; data.d()],
                        1 => vec![means[0]; data.d()],
                        _ => means,
                    };
                    apply_gaussian(&data, &GaussianChannelSpec::new(means, variance)?, &mut rng)?
                }
                ChannelKind::Erasure => apply_erasure(&data, &ErasureChannelSpec::new(need_p()?)?, &mut rng)?,
                ChannelKind::Bsc => apply_bsc(&data, &BscSpec::new(need_p()?)?, &mut rng)?,
                ChannelKind::Sign => quantize_sign(&data),
            };
            noisy.write_csv(output(out.as_deref())?)?;
        }
        Command::Learn { data, mode, sigma_sq, truth, out } => {
            let data = read_data(&data)?;
            let est = chow_liu(&data, mode.into(), sigma_sq)?;
            let mut w = output(out.as_deref())?;
            writeln!(w, "d={}", data.d())?;
            for &(a, b) in est.topology.edges() {
                writeln!(w, "{} {} {}", a + 1, b + 1, est.scores.mi[(a, b)])?;
            }
            w.flush()?;
            if let Some(truth) = truth {
                let truth = read_tree(&truth)?;
                println!("recovered: {}", tree_equals(&est.topology, truth.topology())?);
            }
        }
        Command::Bound(args) => bound(&args)?,
        Command::Sweep { preset: name, config, trials, workers, sequential, out } => {
            let mut exp = match (name, config) {
                (Some(name), _) => preset(&name)?,
                (None, Some(path)) => load_experiment(&path)?,
                (None, None) => return Err(invalid("give --preset or --config")),
            };
            if let Some(seed) = cli.seed {
                exp.seed = seed;
            }
            if let Some(trials) = trials {
                exp.trials = trials;
            }
            let exec = if sequential { Execution::Sequential } else { Execution::default() };
            let result = with_workers(workers, || run_sweep_with(&exp, exec))?;
            result.write_csv(output(out.as_deref())?)?;
        }
        Command::PresetList => {
            for (name, description) in PRESETS {
                println!("{name:<20} {description}");
            }
        }
    }
    Ok(())
}

fn bound(a: &BoundArgs) -> Result<(), Error> {
    let range = match (a.a_m, a.b_m) {
        (Some(lo), Some(hi)) => HoeffdingRange::new(lo, hi)?,
        _ => HoeffdingRange::from_data_bound(a.m)?,
    };
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| invalid(format!("missing --{flag}")));
    let need_n = || a.n.ok_or_else(|| invalid("missing --n"));
    let need_d = || a.d.ok_or_else(|| invalid("missing --d"));
    let family = match a.family {
        Family::Theorem1 => BoundFamily::Theorem1(GeneralCaseParams {
            t: need(a.t, "t")?,
            mu1: need(a.mu1, "mu1")?,
            mu2: need(a.mu2, "mu2")?,
            sigma_sq: need(a.sigma_sq, "sigma-sq")?,
            range,
            rho_e: need(a.rho_e, "rho-e")?,
            rho_eprime: need(a.rho_eprime, "rho-eprime")?,
            d: need_d()?,
            n: a.n.unwrap_or(0),
        }),
        Family::Theorem2 => BoundFamily::Theorem2(ErasureBoundParams {
            beta: need(a.beta, "beta")?,
            range,
            d: need_d()?,
            n: a.n.unwrap_or(0),
        }),
        Family::Algorithmic => {
            let knowledge = if a.subtrees.len() == a.neighbors.len() {
                ExternalKnowledge::paired(a.subtrees.clone(), a.neighbors.clone())?
            } else {
                ExternalKnowledge::general(a.subtrees.clone(), a.neighbors.clone())?
            };
            let d = a.d.unwrap_or_else(|| a.subtrees.iter().sum());
            BoundFamily::Algorithmic { knowledge, d, beta: need(a.beta, "beta")?, range }
        }
        Family::Lemma2 => {
            let (t, n, s) = (need(a.t, "t")?, need_n()?, need(a.sigma_sq, "sigma-sq")?);
            let sl = sigma_l_squared(a.mu1.unwrap_or(0.0), a.mu2.unwrap_or(0.0), s)?;
            let p1 = lemma2_part1(t, n, s, sl)?;
            let p2 = lemma2_part2(need(a.rho_e, "rho-e")?, need(a.rho_eprime, "rho-eprime")?, t, n, s, range)?;
            println!("sigma_l_squared = {sl}");
            println!("part1 = {p1:e}");
            println!("part2 = {p2:e}");
            return Ok(());
        }
        Family::Lemma4 => {
            let target = match a.target {
                Target::First => ChainEdge::First,
                Target::Second => ChainEdge::Second,
            };
            let triple = SharedNodeTriple::chain(need(a.rho1, "rho1")?, need(a.rho2, "rho2")?, target)?;
            let probs = bsc_crossover_probs(&CrossoverLayout::SharedNode(triple), need(a.epsilon, "epsilon")?)?;
            println!("p0 = {}", probs.p0);
            println!("p1 = {}", probs.p1);
            println!("p2 = {}", probs.p2);
            println!("D = {:e}", probs.d);
            if let Some(n) = a.n {
                println!("bound = {}", lemma4_bound(&probs, n));
            }
            return Ok(());
        }
    };
    if a.invert {
        println!("{}", sample_complexity(need(a.delta, "delta")?, &family)?);
    } else {
        if let BoundFamily::Algorithmic { knowledge, .. } = &family {
            eprintln!("prefactor = {}", knowledge.prefactor());
        }
        println!("{:e}", family.evaluate(need_n()?)?);
    }
    Ok(())
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_tree(path: &Path) -> Result<WeightedTree, Error> {
    WeightedTree::read_from(BufReader::new(File::open(path)?))
}

fn read_data(path: &Path) -> Result<Dataset, Error> {
    Dataset::read_csv(BufReader::new(File::open(path)?), None)
}
