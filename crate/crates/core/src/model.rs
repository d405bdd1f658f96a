//! Correlation matrices of tree-structured Gaussian models and sample
//! datasets drawn from them.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::tree::{TreeTopology, WeightedTree};

/// Symmetric correlation matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    inner: DMatrix<f64>,
}

impl CorrelationMatrix {
    pub fn new(inner: DMatrix<f64>) -> Result<Self> {
        if !inner.is_square() || inner.nrows() == 0 {
            return Err(invalid("correlation matrix must be square and non-empty"));
        }
        let d = inner.nrows();
        for i in 0..d {
            if (inner[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("diagonal entry {} is {}, expected 1", i + 1, inner[(i, i)])));
            }
            for j in 0..i {
                if (inner[(i, j)] - inner[(j, i)]).abs() > 1e-12 {
                    return Err(invalid(format!("matrix is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        Ok(Self { inner })
    }

    pub fn identity(d: usize) -> Self {
        Self { inner: DMatrix::identity(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn is_positive_definite(&self) -> bool {
        self.inner.clone().cholesky().is_some()
    }

    /// Lower Cholesky factor, or a numeric failure when not positive definite.
    pub fn cholesky_factor(&self) -> Result<DMatrix<f64>> {
        self.inner
            .clone()
            .cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::NumericFailure("covariance is not positive definite".into()))
    }
}

/// Entry `(i, m)` is the product of the edge correlations on the path i..m.
pub fn tree_to_covariance(tree: &WeightedTree) -> CorrelationMatrix {
    let d = tree.node_count();
    let mut m = DMatrix::<f64>::identity(d, d);
    for root in 0..d {
        let (order, parent) = tree.topology().bfs_from(root);
        for &v in order.iter().skip(1) {
            let p = parent[v].expect("non-root has a parent");
            let w = tree.weight(p, v).expect("tree edge");
            m[(root, v)] = m[(root, p)] * w;
        }
    }
    CorrelationMatrix { inner: m }
}

/// How samples are confined to `[-M, M]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundedness {
    Unbounded,
    /// Entries beyond the bound are clipped to `±M`.
    Clip(f64),
    /// Rows with any entry beyond the bound are redrawn.
    Reject(f64),
}

impl Boundedness {
    pub fn bound(&self) -> Option<f64> {
        match *self {
            Boundedness::Unbounded => None,
            Boundedness::Clip(m) | Boundedness::Reject(m) => Some(m),
        }
    }

    fn validate(&self) -> Result<()> {
        match self.bound() {
            Some(m) if !(m >= 3.0) => Err(invalid(format!("data bound M = {m} must be >= 3"))),
            _ => Ok(()),
        }
    }
}

/// `n × d` sample matrix stored column-major: column `i` is everything sensor
/// `i` observed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    data: Vec<f64>,
    bound: Option<f64>,
}

impl Dataset {
    pub fn from_columns(columns: Vec<Vec<f64>>, bound: Option<f64>) -> Result<Self> {
        let d = columns.len();
        if d == 0 {
            return Err(invalid("dataset needs at least one column"));
        }
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(invalid("columns differ in length"));
        }
        let data = columns.into_iter().flatten().collect();
        Self::from_parts(n, d, data, bound)
    }

    pub fn from_rows(rows: &[Vec<f64>], bound: Option<f64>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(invalid("rows differ in length"));
        }
        let mut data = vec![0.0; n * d];
        for (k, row) in rows.iter().enumerate() {
            for (i, &x) in row.iter().enumerate() {
                data[i * n + k] = x;
            }
        }
        Self::from_parts(n, d, data, bound)
    }

    fn from_parts(n: usize, d: usize, data: Vec<f64>, bound: Option<f64>) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dataset needs at least one column"));
        }
        if let Some(m) = bound {
            Boundedness::Clip(m).validate()?;
            if let Some(x) = data.iter().find(|x| x.abs() > m) {
                return Err(invalid(format!("entry {x} exceeds the declared bound {m}")));
            }
        }
        Ok(Self { n, d, data, bound })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n.max(1)).take(self.d)
    }

    pub fn into_columns(self) -> Vec<Vec<f64>> {
        if self.n == 0 {
            return vec![Vec::new(); self.d];
        }
        self.data.chunks_exact(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn row(&self, k: usize) -> Vec<f64> {
        (0..self.d).map(|i| self.data[i * self.n + k]).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&x| x == 1.0 || x == -1.0)
    }

    /// Same data with the bound tag dropped.
    pub fn unbounded(mut self) -> Self {
        self.bound = None;
        self
    }

    /// Writes `n` lines of `d` comma-separated values, no header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let mut record = Vec::with_capacity(self.d);
        for k in 0..self.n {
            record.clear();
            record.extend((0..self.d).map(|i| self.data[i * self.n + k].to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, bound: Option<f64>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut rows = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|e| Error::Parse {
                        line: idx + 1,
                        message: format!("bad value `{f}`: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse { line: 0, message: "empty dataset".into() });
        }
        Self::from_rows(&rows, bound)
    }
}

fn draw_rows<R, F>(n: usize, d: usize, bounds: Boundedness, rng: &mut R, mut fill_row: F) -> Result<Dataset>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R, &mut [f64]),
{
    if n == 0 {
        return Err(invalid("sample count must be >= 1"));
    }
    bounds.validate()?;
    let mut data = vec![0.0; n * d];
    let mut row = vec![0.0; d];
    for k in 0..n {
        fill_row(rng, &mut row);
        match bounds {
            Boundedness::Unbounded => {}
            Boundedness::Clip(m) => row.iter_mut().for_each(|x| *x = x.clamp(-m, m)),
            Boundedness::Reject(m) => {
                while row.iter().any(|x| x.abs() > m) {
                    fill_row(rng, &mut row);
                }
            }
        }
        for (i, &x) in row.iter().enumerate() {
            data[i * n + k] = x;
        }
    }
    Ok(Dataset { n, d, data, bound: bounds.bound() })
}

/// Draws `n` i.i.d. rows from `N(0, cov)` through its Cholesky factor.
pub fn sample_dataset<R: Rng + ?Sized>(
    cov: &CorrelationMatrix,
    n: usize,
    bounds: Boundedness,
    rng: &mut R,
) -> Result<Dataset> {
    let l = cov.cholesky_factor()?;
    let d = cov.dim();
    let mut z = vec![0.0; d];
    draw_rows(n, d, bounds, rng, |rng, row| {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        for (i, out) in row.iter_mut().enumerate() {
            *out = (0..=i).map(|j| l[(i, j)] * z[j]).sum();
        }
    })
}

/// Root-to-leaf sampling along the tree: `X_child = ρ X_parent + sqrt(1-ρ²) ε`.
/// Exact for tree models and needs no dense factorization. The root is node 0.
pub fn sample_tree_dataset<R: Rng + ?Sized>(
    tree: &WeightedTree,
    n: usize,
    bounds: Boundedness,
    rng: &mut R,
) -> Result<Dataset> {
    sample_tree_dataset_from_root(tree, 0, n, bounds, rng)
}

pub fn sample_tree_dataset_from_root<R: Rng + ?Sized>(
    tree: &WeightedTree,
    root: usize,
    n: usize,
    bounds: Boundedness,
    rng: &mut R,
) -> Result<Dataset> {
    let d = tree.node_count();
    if root >= d {
        return Err(invalid("root out of range"));
    }
    let plan = sampling_plan(tree, root);
    draw_rows(n, d, bounds, rng, |rng, row| {
        row[root] = rng.sample(StandardNormal);
        for &(child, parent, rho, resid) in &plan {
            let e: f64 = rng.sample(StandardNormal);
            row[child] = rho * row[parent] + resid * e;
        }
    })
}

fn sampling_plan(tree: &WeightedTree, root: usize) -> Vec<(usize, usize, f64, f64)> {
    let (order, parent) = tree.topology().bfs_from(root);
    order
        .iter()
        .skip(1)
        .map(|&v| {
            let p = parent[v].expect("non-root has a parent");
            let rho = tree.weight(p, v).expect("tree edge");
            (v, p, rho, (1.0 - rho * rho).sqrt())
        })
        .collect()
}

/// Smallest correlation gap `ρ_e - ρ_e'` over every non-edge `e'` and every
/// tree edge `e` on the path joining the endpoints of `e'`, after mapping each
/// correlation through `transform`. This is the gap a crossover union bound
/// must survive.
pub fn min_crossover_gap(
    topology: &TreeTopology,
    cov: &CorrelationMatrix,
    transform: impl Fn(f64) -> f64,
) -> Option<f64> {
    let d = topology.node_count();
    let mut best: Option<f64> = None;
    for r in 0..d {
        for s in (r + 1)..d {
            if topology.contains_edge(r, s) {
                continue;
            }
            let rho_eprime = transform(cov.get(r, s));
            let path = topology.path(r, s);
            for win in path.windows(2) {
                let gap = transform(cov.get(win[0], win[1])) - rho_eprime;
                best = Some(best.map_or(gap, |b: f64| b.min(gap)));
            }
        }
    }
    best
}
