use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn chowliu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chowliu")).args(args).env_remove("CHOWLIU_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = chowliu(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_is_deterministic_per_seed() {
    let a = ok(&["--seed", "9", "generate", "--d", "7"]);
    let b = ok(&["--seed", "9", "generate", "--d", "7"]);
    let c = ok(&["--seed", "10", "generate", "--d", "7"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "d=7");
    assert_eq!(lines.len(), 7);
    for line in &lines[1..] {
        let w: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
        assert!((0.1..=0.9).contains(&w));
    }
}

#[test]
fn invalid_arguments_exit_with_two() {
    assert_eq!(chowliu(&["generate", "--d", "1"]).status.code(), Some(2));
    assert_eq!(chowliu(&["generate"]).status.code(), Some(2));
    assert_eq!(chowliu(&["bound", "theorem2", "--d", "10"]).status.code(), Some(2));
    assert_eq!(chowliu(&["sweep", "--config", "/nonexistent/x.cfg"]).status.code(), Some(2));
    assert_eq!(chowliu(&["sweep", "--preset", "nope"]).status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let o = chowliu(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("sweep"));
}

#[test]
fn theorem2_value_and_inversion() {
    let v: f64 = ok(&["bound", "theorem2", "--d", "10", "--beta", "0.2", "--n", "200000"]).trim().parse().unwrap();
    assert!((v - 4.3485e-3).abs() < 1e-6, "{v}");
    let clamped: f64 = ok(&["bound", "theorem2", "--d", "10", "--beta", "0.2", "--n", "1620"]).trim().parse().unwrap();
    assert_eq!(clamped, 1.0);
    let n = ok(&["bound", "theorem2", "--d", "10", "--beta", "0.2", "--invert", "--delta", "0.1"]);
    assert_eq!(n.trim(), "149208");
}

#[test]
fn algorithmic_bound_reports_prefactor() {
    let o = chowliu(&[
        "bound", "algorithmic", "--beta", "0.2", "--n", "200000", "--subtrees", "6,4", "--neighbors", "3,2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("prefactor = 285"));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.285 * 4.3485e-3).abs() < 1e-6, "{v}");
}

#[test]
fn lemma_outputs() {
    let out = ok(&["bound", "lemma2", "--t", "0.1", "--n", "1000", "--sigma-sq", "1", "--rho-e", "0.6", "--rho-eprime", "0.3"]);
    assert!(out.contains("sigma_l_squared = 6"));
    let out = ok(&["bound", "lemma4", "--rho1", "0.9", "--rho2", "0.1", "--epsilon", "0.1", "--n", "2000"]);
    let field = |k: &str| -> f64 {
        out.lines().find_map(|l| l.strip_prefix(&format!("{k} = "))).unwrap().parse().unwrap()
    };
    assert!((field("p0") + field("p1") + field("p2") - 1.0).abs() < 1e-12);
    assert!(field("D") <= 0.0);
    assert!((0.0..=1.0).contains(&field("bound")));
}

#[test]
fn sample_corrupt_learn_pipeline() {
    let dir = TempDir::new().unwrap();
    let tree = dir.path().join("t.tree");
    let data = dir.path().join("x.csv");
    let noisy = dir.path().join("y.csv");
    let learned = dir.path().join("est.tree");
    fn p(x: &Path) -> &str {
        path_str(x)
    }
    ok(&["--seed", "3", "generate", "--d", "6", "--low", "0.5", "--high", "0.9", "--out", p(&tree)]);
    ok(&["--seed", "4", "sample", "--tree", p(&tree), "--n", "5000", "--M", "3", "--out", p(&data)]);
    let csv = std::fs::read_to_string(&data).unwrap();
    assert_eq!(csv.lines().count(), 5000);
    ok(&["--seed", "5", "corrupt", "--data", p(&data), "--channel", "gaussian", "--variance", "0.2", "--out", p(&noisy)]);
    let o = ok(&["learn", "--data", p(&noisy), "--sigma-sq", "0.2", "--truth", p(&tree), "--out", p(&learned)]);
    assert_eq!(o.trim(), "recovered: true");
    let est = std::fs::read_to_string(&learned).unwrap();
    assert_eq!(est.lines().count(), 6);

    let signs = dir.path().join("u.csv");
    ok(&["corrupt", "--data", p(&data), "--channel", "sign", "--out", p(&signs)]);
    let o = ok(&["learn", "--data", p(&signs), "--mode", "quantized", "--truth", p(&tree)]);
    assert!(o.contains("recovered: true"));
}

#[test]
fn preset_list_names_every_preset() {
    let out = ok(&["preset-list"]);
    for name in ["case1", "case2", "fig5", "erasure_algorithmic", "bsc_crossover", "star", "star_eps02", "star_noiseless"] {
        assert!(out.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn preset_sweep_writes_bound_columns() {
    let out = ok(&["--seed", "1", "sweep", "--preset", "bsc_crossover", "--trials", "20"]);
    let mut lines = out.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, "n,empirical,stderr,lemma4");
    assert_eq!(lines.count(), 5);
    let again = ok(&["--seed", "1", "sweep", "--preset", "bsc_crossover", "--trials", "20", "--sequential"]);
    assert_eq!(out, again);
}

#[test]
fn config_sweeps() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let star = configs_dir().join("star_bsc.cfg");
    ok(&["sweep", "--config", path_str(&star), "--trials", "10", "--out", path_str(&out_path)]);
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "n,empirical,stderr");
    assert_eq!(csv.lines().count(), 4);

    let chain = configs_dir().join("chain_erasure.cfg");
    let out = ok(&["sweep", "--config", path_str(&chain), "--trials", "5", "--workers", "2"]);
    assert_eq!(out.lines().next().unwrap(), "n,empirical,stderr,theorem2,algorithmic");
}

#[test]
fn malformed_config_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[experiment]\ntrails = 5\n").unwrap();
    let o = chowliu(&["sweep", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"));
}
