//! Random least-squares ensembles and pseudoinverse reference solutions.
//!
//! Three ensembles are generated from a seeded [`Rng`]:
//!
//! * dense: i.i.d. standard normal entries;
//! * sparse: each entry independently nonzero with a given probability,
//!   nonzero values standard normal;
//! * rank deficient: a dense Gaussian matrix whose SVD is truncated to its
//!   `r` largest singular values and recomposed.
//!
//! Entries are drawn in column-major order, then the right-hand side. Each
//! problem carries the minimum-norm solution `x_o = A^+ b` and the optimal
//! residual `r_o = b - A x_o`, computed from a full SVD. The SVD lives only
//! here; the solver kernels never touch it.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, ProblemMatrix, SparseMatrix};
use crate::mmio;
use crate::sampling::{derive_trial_seed, Rng};

/// Relative singular-value cutoff for the pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-12;
/// Relative singular-value cutoff for rank assertions.
pub const RANK_CUTOFF: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Dense,
    Sparse,
    RankDeficient,
}

impl std::str::FromStr for EnsembleKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dense" => Ok(EnsembleKind::Dense),
            "sparse" => Ok(EnsembleKind::Sparse),
            "rankdef" | "rank_deficient" | "rank-deficient" => Ok(EnsembleKind::RankDeficient),
            other => Err(format!("unknown ensemble kind {other:?} (dense|sparse|rankdef)")),
        }
    }
}

/// A family of random problems and how many members to draw from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub m: usize,
    pub n: usize,
    /// Fraction of nonzeros; only used by the sparse ensemble.
    pub density: f64,
    /// Target rank; only used by the rank-deficient ensemble.
    pub rank: Option<usize>,
    pub trials: usize,
    pub base_seed: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidConfig(format!("dimensions {}x{}", self.m, self.n)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        match self.kind {
            EnsembleKind::Sparse if !(self.density > 0.0 && self.density <= 1.0) => {
                Err(Error::InvalidConfig(format!("density {} outside (0, 1]", self.density)))
            }
            EnsembleKind::RankDeficient => match self.rank {
                Some(r) if r >= 1 && r <= self.m.min(self.n) => Ok(()),
                r => Err(Error::InvalidConfig(format!(
                    "rank {r:?} outside [1, {}]",
                    self.m.min(self.n)
                ))),
            },
            _ => Ok(()),
        }
    }

    /// Problem for trial `trial`, generated from `derive_trial_seed(base_seed, trial)`.
    pub fn generate(&self, trial: usize) -> Result<LsProblem> {
        self.validate()?;
        let seed = derive_trial_seed(self.base_seed, trial as u64);
        self.generate_with_seed(seed)
    }

    pub fn generate_with_seed(&self, seed: u64) -> Result<LsProblem> {
        let mut rng = Rng::from_seed(seed);
        let mut problem = match self.kind {
            EnsembleKind::Dense => gen_dense(self.m, self.n, &mut rng)?,
            EnsembleKind::Sparse => gen_sparse(self.m, self.n, self.density, &mut rng)?,
            EnsembleKind::RankDeficient => {
                let r = self.rank.ok_or_else(|| Error::InvalidConfig("rank required".into()))?;
                gen_rank_deficient(self.m, self.n, r, &mut rng)?
            }
        };
        problem.meta = Some(ProblemMeta {
            kind: self.kind,
            m: self.m,
            n: self.n,
            density: (self.kind == EnsembleKind::Sparse).then_some(self.density),
            rank: self.rank.filter(|_| self.kind == EnsembleKind::RankDeficient),
            seed,
        });
        Ok(problem)
    }
}

/// Metadata sidecar stored next to a saved problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub kind: EnsembleKind,
    pub m: usize,
    pub n: usize,
    pub density: Option<f64>,
    pub rank: Option<usize>,
    pub seed: u64,
}

/// Least-squares problem `min |b - A x|` with optional reference solution.
#[derive(Clone, Debug)]
pub struct LsProblem {
    pub a: ProblemMatrix,
    pub b: Vec<f64>,
    /// Minimum-norm least-squares solution.
    pub x_o: Option<Vec<f64>>,
    /// Optimal residual `b - A x_o`.
    pub r_o: Option<Vec<f64>>,
    pub rank_hint: Option<usize>,
    pub meta: Option<ProblemMeta>,
}

impl LsProblem {
    pub fn new(a: ProblemMatrix, b: Vec<f64>) -> Result<Self> {
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
        }
        if let Some(pos) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(LsProblem { a, b, x_o: None, r_o: None, rank_hint: None, meta: None })
    }

    /// Same problem with the pseudoinverse reference attached.
    pub fn with_oracle(mut self) -> Result<Self> {
        let oracle = oracle_solution(&self.a, &self.b)?;
        self.x_o = Some(oracle.x_o);
        self.r_o = Some(oracle.r_o);
        Ok(self)
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    /// Writes `A.mtx`, `b.txt`, `x_o.txt`, `r_o.txt` (when known) and `meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
        mmio::write_matrix_market(&dir.join("A.mtx"), self.a.storage())?;
        mmio::write_vector(&dir.join("b.txt"), &self.b)?;
        if let Some(x) = &self.x_o {
            mmio::write_vector(&dir.join("x_o.txt"), x)?;
        }
        if let Some(r) = &self.r_o {
            mmio::write_vector(&dir.join("r_o.txt"), r)?;
        }
        if let Some(meta) = &self.meta {
            let path = dir.join("meta.json");
            let json = serde_json::to_string_pretty(meta).expect("metadata serializes");
            fs::write(&path, json + "\n").map_err(|source| Error::Io { path, source })?;
        }
        Ok(())
    }

    /// Reads a problem written by [`LsProblem::save`]. Missing reference
    /// vectors and metadata are left as `None`.
    pub fn load(dir: &Path) -> Result<Self> {
        let a = ProblemMatrix::new(mmio::read_matrix_market(&dir.join("A.mtx"))?)?;
        let b = mmio::read_vector(&dir.join("b.txt"))?;
        let mut problem = LsProblem::new(a, b)?;
        let optional = |name: &str| -> Result<Option<Vec<f64>>> {
            let path = dir.join(name);
            if path.exists() {
                mmio::read_vector(&path).map(Some)
            } else {
                Ok(None)
            }
        };
        problem.x_o = optional("x_o.txt")?;
        problem.r_o = optional("r_o.txt")?;
        if let Some(x) = &problem.x_o {
            if x.len() != problem.ncols() {
                return Err(Error::DimensionMismatch { expected: problem.ncols(), got: x.len() });
            }
        }
        if let Some(r) = &problem.r_o {
            if r.len() != problem.nrows() {
                return Err(Error::DimensionMismatch { expected: problem.nrows(), got: r.len() });
            }
        }
        let meta_path = dir.join("meta.json");
        if meta_path.exists() {
            let text = fs::read_to_string(&meta_path)
                .map_err(|source| Error::Io { path: meta_path.clone(), source })?;
            let meta: ProblemMeta = serde_json::from_str(&text)
                .map_err(|e| Error::Parse { path: meta_path, line: e.line(), msg: e.to_string() })?;
            problem.rank_hint = meta.rank;
            problem.meta = Some(meta);
        }
        Ok(problem)
    }
}

fn gaussian_dense(m: usize, n: usize, rng: &mut Rng) -> Result<DenseMatrix> {
    DenseMatrix::new(m, n, (0..m * n).map(|_| rng.normal()).collect())
}

fn gaussian_vector(len: usize, rng: &mut Rng) -> Vec<f64> {
    (0..len).map(|_| rng.normal()).collect()
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidConfig(format!("dimensions {m}x{n}")));
    }
    Ok(())
}

/// Dense matrix with i.i.d. standard normal entries and a standard normal right-hand side.
pub fn gen_dense(m: usize, n: usize, rng: &mut Rng) -> Result<LsProblem> {
    check_dims(m, n)?;
    let a = gaussian_dense(m, n, rng)?;
    let b = gaussian_vector(m, rng);
    LsProblem::new(ProblemMatrix::dense(a)?, b)?.with_oracle()
}

/// Sparse matrix: every entry is independently nonzero with probability
/// `density`, with a standard normal value.
pub fn gen_sparse(m: usize, n: usize, density: f64, rng: &mut Rng) -> Result<LsProblem> {
    check_dims(m, n)?;
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidConfig(format!("density {density} outside (0, 1]")));
    }
    let mut triplets = Vec::with_capacity((density * (m * n) as f64 * 1.1) as usize + 16);
    for j in 0..n {
        for i in 0..m {
            if rng.next_f64() < density {
                triplets.push((i, j, rng.normal()));
            }
        }
    }
    let b = gaussian_vector(m, rng);
    let a = SparseMatrix::from_triplets(m, n, &triplets)?;
    if a.nnz() == 0 {
        return Err(Error::InvalidMatrix("generated matrix has no nonzeros".into()));
    }
    LsProblem::new(ProblemMatrix::sparse(a)?, b)?.with_oracle()
}

/// Gaussian matrix truncated to its `r` largest singular values.
pub fn gen_rank_deficient(m: usize, n: usize, r: usize, rng: &mut Rng) -> Result<LsProblem> {
    check_dims(m, n)?;
    if r == 0 || r > m.min(n) {
        return Err(Error::InvalidConfig(format!("rank {r} outside [1, {}]", m.min(n))));
    }
    let a0 = gaussian_dense(m, n, rng)?;
    let b = gaussian_vector(m, rng);
    let a = truncate_rank(&a0, r)?;
    let mut problem = LsProblem::new(ProblemMatrix::dense(a)?, b)?.with_oracle()?;
    problem.rank_hint = Some(r);
    Ok(problem)
}

/// `U diag(s_1..s_r, 0, ..) V^T` from the SVD of `a`.
pub fn truncate_rank(a: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    let svd = full_svd(a)?;
    let u = svd.u.as_ref().expect("U requested");
    let vt = svd.v_t.as_ref().expect("V^T requested");
    let mut sigma = svd.singular_values.clone();
    for s in sigma.iter_mut().skip(r) {
        *s = 0.0;
    }
    let recomposed = u * DMatrix::from_diagonal(&sigma) * vt;
    DenseMatrix::new(a.nrows(), a.ncols(), recomposed.as_slice().to_vec())
}

fn to_nalgebra(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(a.nrows(), a.ncols(), a.as_slice())
}

fn full_svd(a: &DenseMatrix) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(to_nalgebra(a), true, true, f64::EPSILON, 0).ok_or(Error::SvdFailure)
}

/// Singular values of `a` in descending order.
pub fn singular_values(a: &ProblemMatrix) -> Result<Vec<f64>> {
    let svd = SVD::try_new(to_nalgebra(&a.to_dense()), false, false, f64::EPSILON, 0)
        .ok_or(Error::SvdFailure)?;
    Ok(svd.singular_values.iter().copied().collect())
}

/// Pseudoinverse solution and the SVD quantities derived alongside it.
#[derive(Clone, Debug)]
pub struct Oracle {
    pub x_o: Vec<f64>,
    pub r_o: Vec<f64>,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    /// Number of singular values above `PINV_CUTOFF * sigma_max`.
    pub rank: usize,
    /// Orthonormal basis of `range(A^T)`, one vector per retained singular value.
    pub row_space: Vec<Vec<f64>>,
}

impl Oracle {
    /// `|A^+|`, the reciprocal of the smallest retained singular value.
    pub fn pinv_norm(&self) -> f64 {
        1.0 / self.singular_values[self.rank - 1]
    }

    /// `|(I - P) x|` where `P` projects onto `range(A^T)`.
    pub fn null_space_component(&self, x: &[f64]) -> f64 {
        let mut rest = x.to_vec();
        for v in &self.row_space {
            let c: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
            rest.iter_mut().zip(v).for_each(|(r, vi)| *r -= c * vi);
        }
        crate::linalg::norm(&rest)
    }
}

/// `x_o = A^+ b` through a full SVD, discarding singular values below
/// `1e-12 * sigma_max`; `r_o = b - A x_o`.
pub fn oracle_solution(a: &ProblemMatrix, b: &[f64]) -> Result<Oracle> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
    }
    let svd = full_svd(&a.to_dense())?;
    let u = svd.u.as_ref().expect("U requested");
    let vt = svd.v_t.as_ref().expect("V^T requested");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return Err(Error::InvalidMatrix("zero matrix has no pseudoinverse reference".into()));
    }
    let rank = sigma.iter().take_while(|&&s| s > PINV_CUTOFF * sigma_max).count();

    let bv = DVector::from_column_slice(b);
    let utb = u.columns(0, rank).transpose() * &bv;
    let mut x = DVector::zeros(a.ncols());
    for k in 0..rank {
        x += vt.row(k).transpose() * (utb[k] / sigma[k]);
    }
    let x_o: Vec<f64> = x.iter().copied().collect();
    let mut flops = 0;
    let ax = a.mat_vec(&x_o, &mut flops)?;
    let r_o = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    let row_space = (0..rank).map(|k| vt.row(k).iter().copied().collect()).collect();
    Ok(Oracle { x_o, r_o, singular_values: sigma, rank, row_space })
}

/// `kappa_F(A) = |A|_F |A^+|`, using the smallest singular value above the
/// pseudoinverse cutoff.
pub fn kappa_f(a: &ProblemMatrix) -> Result<f64> {
    let sigma = singular_values(a)?;
    let sigma_max = sigma[0];
    if sigma_max == 0.0 {
        return Err(Error::InvalidMatrix("zero matrix".into()));
    }
    let smallest = sigma
        .iter()
        .copied()
        .filter(|&s| s > PINV_CUTOFF * sigma_max)
        .fold(f64::INFINITY, f64::min);
    Ok(a.frob() / smallest)
}

/// Number of singular values above `RANK_CUTOFF * sigma_max`.
pub fn numerical_rank(a: &ProblemMatrix) -> Result<usize> {
    let sigma = singular_values(a)?;
    Ok(sigma.iter().filter(|&&s| s > RANK_CUTOFF * sigma[0]).count())
}
