//! Matrix and vector substrate for the row/column-action solvers.
//!
//! Dense matrices are stored column-major. Sparse matrices keep both a
//! compressed-column and a compressed-row index over the same nonzeros, so
//! that a column (CD steps) and a row (Kaczmarz steps) can each be visited in
//! time proportional to its nonzero count.
//!
//! Every kernel takes a `&mut u64` flop counter and adds its exact
//! multiply-add count: a dot product or axpy over a view with `k` stored
//! entries adds `2k`.

use crate::error::{Error, Result};

/// Dense `m x n` matrix in column-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Wraps column-major `data` of length `m * n`.
    pub fn new(m: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidMatrix(format!("empty dimensions {m}x{n}")));
        }
        if data.len() != m * n {
            return Err(Error::DimensionMismatch { expected: m * n, got: data.len() });
        }
        Ok(DenseMatrix { m, n, data })
    }

    pub fn zeros(m: usize, n: usize) -> Result<Self> {
        Self::new(m, n, vec![0.0; m * n])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut a = Self::zeros(n, n)?;
        for i in 0..n {
            a.data[i + i * n] = 1.0;
        }
        Ok(a)
    }

    /// Builds a matrix from row slices, e.g. `from_rows(&[&[1.0, 2.0], &[3.0, 4.0]])`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = vec![0.0; m * n];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                data[i + j * m] = v;
            }
        }
        Self::new(m, n, data)
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i + j * self.m]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i + j * self.m] = v;
    }

    /// Column-major backing slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn col_slice(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }
}

/// One compressed index direction: `ptr[k]..ptr[k+1]` addresses the entries
/// of the k-th major line.
#[derive(Clone, Debug, PartialEq)]
struct Compressed {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Compressed {
    fn line(&self, k: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.ptr[k], self.ptr[k + 1]);
        (&self.idx[s..e], &self.val[s..e])
    }

    /// Transposes the index direction with a counting sort; minor indices in
    /// the result come out strictly increasing.
    fn transpose(&self, minor_dim: usize) -> Compressed {
        let major_dim = self.ptr.len() - 1;
        let mut ptr = vec![0usize; minor_dim + 1];
        for &i in &self.idx {
            ptr[i + 1] += 1;
        }
        for k in 0..minor_dim {
            ptr[k + 1] += ptr[k];
        }
        let mut next = ptr.clone();
        let mut idx = vec![0usize; self.idx.len()];
        let mut val = vec![0.0; self.val.len()];
        for major in 0..major_dim {
            let (rows, vals) = self.line(major);
            for (&minor, &v) in rows.iter().zip(vals) {
                let slot = next[minor];
                idx[slot] = major;
                val[slot] = v;
                next[minor] += 1;
            }
        }
        Compressed { ptr, idx, val }
    }
}

/// Sparse matrix holding the same nonzeros in compressed-column and
/// compressed-row form. Explicit zeros are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    m: usize,
    n: usize,
    csc: Compressed,
    csr: Compressed,
}

impl SparseMatrix {
    /// Assembles from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that end up exactly zero are dropped.
    pub fn from_triplets(m: usize, n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidMatrix(format!("empty dimensions {m}x{n}")));
        }
        let mut sorted = Vec::with_capacity(triplets.len());
        for (pos, &(i, j, v)) in triplets.iter().enumerate() {
            if i >= m {
                return Err(Error::IndexOutOfRange { index: i, dim: m });
            }
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, dim: n });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(pos));
            }
            sorted.push((j, i, v));
        }
        sorted.sort_by_key(|e| (e.0, e.1));

        let mut ptr = vec![0usize; n + 1];
        let mut idx = Vec::with_capacity(sorted.len());
        let mut val: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (j, i, v) in sorted {
            if last == Some((j, i)) {
                *val.last_mut().expect("duplicate follows an entry") += v;
            } else {
                idx.push(i);
                val.push(v);
                ptr[j + 1] += 1;
                last = Some((j, i));
            }
        }
        for j in 0..n {
            ptr[j + 1] += ptr[j];
        }
        let csc = drop_zeros(Compressed { ptr, idx, val });
        let csr = csc.transpose(m);
        Ok(SparseMatrix { m, n, csc, csr })
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut ptr = Vec::with_capacity(a.n + 1);
        let mut idx = Vec::new();
        let mut val = Vec::new();
        ptr.push(0);
        for j in 0..a.n {
            for (i, &v) in a.col_slice(j).iter().enumerate() {
                if v != 0.0 {
                    idx.push(i);
                    val.push(v);
                }
            }
            ptr.push(idx.len());
        }
        let csc = Compressed { ptr, idx, val };
        let csr = csc.transpose(a.m);
        SparseMatrix { m: a.m, n: a.n, csc, csr }
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.csc.val.len()
    }

    /// Row indices and values of column `j`.
    pub fn col_entries(&self, j: usize) -> (&[usize], &[f64]) {
        self.csc.line(j)
    }

    /// Column indices and values of row `i`.
    pub fn row_entries(&self, i: usize) -> (&[usize], &[f64]) {
        self.csr.line(i)
    }

    /// Nonzeros as `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for j in 0..self.n {
            let (rows, vals) = self.col_entries(j);
            out.extend(rows.iter().zip(vals).map(|(&i, &v)| (i, j, v)));
        }
        out
    }

    /// Nonzeros as `(row, col, value)` read from the row index, in row-major order.
    pub fn row_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.m {
            let (cols, vals) = self.row_entries(i);
            out.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v)));
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.m, self.n).expect("dimensions checked at construction");
        for (i, j, v) in self.triplets() {
            d.set(i, j, v);
        }
        d
    }
}

fn drop_zeros(c: Compressed) -> Compressed {
    if c.val.iter().all(|&v| v != 0.0) {
        return c;
    }
    let mut ptr = Vec::with_capacity(c.ptr.len());
    let mut idx = Vec::with_capacity(c.idx.len());
    let mut val = Vec::with_capacity(c.val.len());
    ptr.push(0);
    for k in 0..c.ptr.len() - 1 {
        let (ii, vv) = c.line(k);
        for (&i, &v) in ii.iter().zip(vv) {
            if v != 0.0 {
                idx.push(i);
                val.push(v);
            }
        }
        ptr.push(idx.len());
    }
    Compressed { ptr, idx, val }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl Storage {
    pub fn nrows(&self) -> usize {
        match self {
            Storage::Dense(d) => d.nrows(),
            Storage::Sparse(s) => s.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Storage::Dense(d) => d.ncols(),
            Storage::Sparse(s) => s.ncols(),
        }
    }
}

/// Borrowed view of one row or column.
#[derive(Clone, Copy, Debug)]
pub enum VecView<'a> {
    /// Contiguous dense values (a column of a column-major matrix).
    Dense(&'a [f64]),
    /// Every `stride`-th value of `data` starting at `start` (a dense row).
    Strided { data: &'a [f64], start: usize, stride: usize, len: usize },
    /// Stored entries of a sparse line with logical length `len`.
    Sparse { len: usize, indices: &'a [usize], values: &'a [f64] },
}

impl<'a> VecView<'a> {
    /// Logical length of the vector.
    pub fn len(&self) -> usize {
        match *self {
            VecView::Dense(d) => d.len(),
            VecView::Strided { len, .. } => len,
            VecView::Sparse { len, .. } => len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of stored entries the kernels touch.
    pub fn nnz(&self) -> usize {
        match *self {
            VecView::Dense(d) => d.len(),
            VecView::Strided { len, .. } => len,
            VecView::Sparse { values, .. } => values.len(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.for_each(|k, v| out[k] = v);
        out
    }

    /// Visits `(position, value)` for every stored entry.
    #[inline]
    pub fn for_each<F: FnMut(usize, f64)>(&self, mut f: F) {
        match *self {
            VecView::Dense(d) => d.iter().enumerate().for_each(|(k, &v)| f(k, v)),
            VecView::Strided { data, start, stride, len } => {
                for k in 0..len {
                    f(k, data[start + k * stride]);
                }
            }
            VecView::Sparse { indices, values, .. } => {
                indices.iter().zip(values).for_each(|(&k, &v)| f(k, v))
            }
        }
    }

    #[inline]
    fn dot_unchecked(&self, u: &[f64]) -> f64 {
        match *self {
            VecView::Dense(d) => d.iter().zip(u).map(|(a, b)| a * b).sum(),
            VecView::Strided { data, start, stride, len } => {
                (0..len).map(|k| data[start + k * stride] * u[k]).sum()
            }
            VecView::Sparse { indices, values, .. } => {
                indices.iter().zip(values).map(|(&k, &v)| v * u[k]).sum()
            }
        }
    }

    #[inline]
    fn axpy_unchecked(&self, alpha: f64, u: &mut [f64]) {
        match *self {
            VecView::Dense(d) => u.iter_mut().zip(d).for_each(|(y, &x)| *y += alpha * x),
            VecView::Strided { data, start, stride, len } => {
                for (k, y) in u.iter_mut().enumerate().take(len) {
                    *y += alpha * data[start + k * stride];
                }
            }
            VecView::Sparse { indices, values, .. } => {
                for (&k, &v) in indices.iter().zip(values) {
                    u[k] += alpha * v;
                }
            }
        }
    }
}

/// `<u, v>`; adds `2 * nnz(v)` flops.
pub fn dot(u: &[f64], v: &VecView<'_>, flops: &mut u64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), got: u.len() });
    }
    *flops += 2 * v.nnz() as u64;
    Ok(v.dot_unchecked(u))
}

/// `u += alpha * v`, touching only the stored positions of `v`; adds `2 * nnz(v)` flops.
pub fn axpy(alpha: f64, v: &VecView<'_>, u: &mut [f64], flops: &mut u64) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), got: u.len() });
    }
    *flops += 2 * v.nnz() as u64;
    v.axpy_unchecked(alpha, u);
    Ok(())
}

/// Euclidean norm; adds `2 * len` flops.
pub fn norm2(u: &[f64], flops: &mut u64) -> f64 {
    *flops += 2 * u.len() as u64;
    u.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Euclidean norm without flop accounting, for metrics outside the solver cost model.
pub fn norm(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Matrix with cached squared row norms, column norms and Frobenius norm.
/// Immutable after construction.
#[derive(Clone, Debug)]
pub struct ProblemMatrix {
    storage: Storage,
    col_sq_norms: Vec<f64>,
    row_sq_norms: Vec<f64>,
    frob_sq: f64,
}

impl ProblemMatrix {
    pub fn new(storage: Storage) -> Result<Self> {
        let (m, n) = (storage.nrows(), storage.ncols());
        let mut col_sq_norms = vec![0.0; n];
        let mut row_sq_norms = vec![0.0; m];
        match &storage {
            Storage::Dense(d) => {
                for (pos, &v) in d.as_slice().iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::NonFinite(pos));
                    }
                    let (i, j) = (pos % m, pos / m);
                    col_sq_norms[j] += v * v;
                    row_sq_norms[i] += v * v;
                }
            }
            Storage::Sparse(s) => {
                for (pos, (i, j, v)) in s.triplets().into_iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::NonFinite(pos));
                    }
                    col_sq_norms[j] += v * v;
                    row_sq_norms[i] += v * v;
                }
            }
        }
        let frob_sq = col_sq_norms.iter().sum();
        Ok(ProblemMatrix { storage, col_sq_norms, row_sq_norms, frob_sq })
    }

    pub fn dense(a: DenseMatrix) -> Result<Self> {
        Self::new(Storage::Dense(a))
    }

    pub fn sparse(a: SparseMatrix) -> Result<Self> {
        Self::new(Storage::Sparse(a))
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn nrows(&self) -> usize {
        self.storage.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.storage.ncols()
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(d) => d.nrows() * d.ncols(),
            Storage::Sparse(s) => s.nnz(),
        }
    }

    pub fn col_sq_norms(&self) -> &[f64] {
        &self.col_sq_norms
    }

    pub fn row_sq_norms(&self) -> &[f64] {
        &self.row_sq_norms
    }

    pub fn frob_sq(&self) -> f64 {
        self.frob_sq
    }

    pub fn frob(&self) -> f64 {
        self.frob_sq.sqrt()
    }

    pub fn column(&self, j: usize) -> Result<VecView<'_>> {
        let n = self.ncols();
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, dim: n });
        }
        Ok(match &self.storage {
            Storage::Dense(d) => VecView::Dense(d.col_slice(j)),
            Storage::Sparse(s) => {
                let (indices, values) = s.col_entries(j);
                VecView::Sparse { len: s.nrows(), indices, values }
            }
        })
    }

    pub fn row(&self, i: usize) -> Result<VecView<'_>> {
        let m = self.nrows();
        if i >= m {
            return Err(Error::IndexOutOfRange { index: i, dim: m });
        }
        Ok(match &self.storage {
            Storage::Dense(d) => VecView::Strided {
                data: d.as_slice(),
                start: i,
                stride: m,
                len: d.ncols(),
            },
            Storage::Sparse(s) => {
                let (indices, values) = s.row_entries(i);
                VecView::Sparse { len: s.ncols(), indices, values }
            }
        })
    }

    /// `A x`; adds `2 * nnz(A)` flops.
    pub fn mat_vec(&self, x: &[f64], flops: &mut u64) -> Result<Vec<f64>> {
        let n = self.ncols();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        let mut y = vec![0.0; self.nrows()];
        for (j, &xj) in x.iter().enumerate() {
            let col = self.column(j)?;
            if xj != 0.0 {
                col.axpy_unchecked(xj, &mut y);
            }
        }
        *flops += 2 * self.nnz() as u64;
        Ok(y)
    }

    /// `A^T y`; adds `2 * nnz(A)` flops.
    pub fn mat_t_vec(&self, y: &[f64], flops: &mut u64) -> Result<Vec<f64>> {
        let m = self.nrows();
        if y.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: y.len() });
        }
        let out = (0..self.ncols())
            .map(|j| self.column(j).map(|c| c.dot_unchecked(y)))
            .collect::<Result<Vec<_>>>()?;
        *flops += 2 * self.nnz() as u64;
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match &self.storage {
            Storage::Dense(d) => d.clone(),
            Storage::Sparse(s) => s.to_dense(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_by_two() -> ProblemMatrix {
        ProblemMatrix::dense(DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap()).unwrap()
    }

    #[test]
    fn identity_column_and_row_are_unit_vectors() {
        let a = ProblemMatrix::dense(DenseMatrix::identity(3).unwrap()).unwrap();
        assert_eq!(a.column(1).unwrap().to_dense(), vec![0.0, 1.0, 0.0]);
        assert_eq!(a.row(0).unwrap().to_dense(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn dense_reads() {
        let a = two_by_two();
        assert_eq!(a.column(0).unwrap().to_dense(), vec![1.0, 3.0]);
        assert_eq!(a.row(1).unwrap().to_dense(), vec![3.0, 4.0]);
        assert!(matches!(a.column(2), Err(Error::IndexOutOfRange { index: 2, dim: 2 })));
        assert!(matches!(a.row(5), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn sparse_empty_lines() {
        let s = SparseMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (2, 2, 5.0)]).unwrap();
        let a = ProblemMatrix::sparse(s).unwrap();
        let col = a.column(1).unwrap();
        assert_eq!(col.nnz(), 0);
        assert_eq!(col.len(), 3);
        assert_eq!(a.row(1).unwrap().nnz(), 0);
        assert_eq!(a.col_sq_norms(), &[1.0, 0.0, 25.0]);
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let s = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 4.0), (1, 1, -4.0), (1, 0, 0.0)],
        )
        .unwrap();
        assert_eq!(s.triplets(), vec![(0, 0, 3.0)]);
        assert_eq!(s.row_triplets(), vec![(0, 0, 3.0)]);
        assert!(SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, &[(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn small_kernels() {
        let mut flops = 0;
        let v = [1.0, 1.0, 1.0];
        assert_eq!(dot(&[1.0, 2.0, 3.0], &VecView::Dense(&v), &mut flops).unwrap(), 6.0);
        assert_eq!(flops, 6);

        let id = ProblemMatrix::dense(DenseMatrix::identity(3).unwrap()).unwrap();
        assert_eq!(id.mat_vec(&[4.0, 5.0, 6.0], &mut flops).unwrap(), vec![4.0, 5.0, 6.0]);

        // [[1,2],[3,4]]^T (1,1) = (1+3, 2+4)
        assert_eq!(two_by_two().mat_t_vec(&[1.0, 1.0], &mut flops).unwrap(), vec![4.0, 6.0]);

        assert!(dot(&[1.0], &VecView::Dense(&v), &mut flops).is_err());
        assert!(id.mat_vec(&[1.0], &mut flops).is_err());
        assert!(id.mat_t_vec(&[1.0, 2.0], &mut flops).is_err());
    }

    #[test]
    fn axpy_touches_only_stored_positions() {
        let idx = [1usize];
        let vals = [2.0];
        let view = VecView::Sparse { len: 3, indices: &idx, values: &vals };
        let mut u = vec![1.0, 1.0, 1.0];
        let mut flops = 0;
        axpy(0.5, &view, &mut u, &mut flops).unwrap();
        assert_eq!(u, vec![1.0, 2.0, 1.0]);
        assert_eq!(flops, 2);
    }

    #[test]
    fn cached_norms() {
        let a = ProblemMatrix::dense(DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(a.col_sq_norms(), &[1.0, 4.0]);
        assert_eq!(a.row_sq_norms(), &[1.0, 4.0]);
        assert_eq!(a.frob_sq(), 5.0);

        let id = ProblemMatrix::dense(DenseMatrix::identity(7).unwrap()).unwrap();
        assert_eq!(id.frob_sq(), 7.0);

        let zero_col = ProblemMatrix::dense(DenseMatrix::from_rows(&[[1.0, 0.0], [2.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(zero_col.col_sq_norms()[1], 0.0);

        let bad = DenseMatrix::new(1, 2, vec![1.0, f64::INFINITY]).unwrap();
        assert!(matches!(ProblemMatrix::dense(bad), Err(Error::NonFinite(1))));
    }

    #[test]
    fn constructor_errors() {
        assert!(DenseMatrix::new(0, 2, vec![]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![1.0]).is_err());
        assert!(DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    fn arb_dense(max_m: usize, max_n: usize) -> impl Strategy<Value = DenseMatrix> {
        (1..=max_m, 1..=max_n).prop_flat_map(|(m, n)| {
            // about half the entries zero so the sparse paths see empty lines
            prop::collection::vec(prop_oneof![Just(0.0), -10.0..10.0f64], m * n)
                .prop_map(move |data| DenseMatrix::new(m, n, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn dual_index_round_trip(d in arb_dense(12, 12)) {
            let s = SparseMatrix::from_dense(&d);
            prop_assert_eq!(s.to_dense(), d.clone());
            // row index -> dense -> column index reproduces the same nonzeros
            let via_rows = SparseMatrix::from_triplets(d.nrows(), d.ncols(), &s.row_triplets()).unwrap();
            prop_assert_eq!(via_rows.triplets(), s.triplets());
            for j in 0..s.ncols() {
                prop_assert!(s.col_entries(j).0.windows(2).all(|w| w[0] < w[1]));
            }
            for i in 0..s.nrows() {
                prop_assert!(s.row_entries(i).0.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(s.row_entries(i).1.iter().all(|&v| v != 0.0));
            }
        }

        #[test]
        fn frobenius_cache_consistent(d in arb_dense(15, 15), sparse in any::<bool>()) {
            let a = if sparse {
                ProblemMatrix::sparse(SparseMatrix::from_dense(&d)).unwrap()
            } else {
                ProblemMatrix::dense(d).unwrap()
            };
            let by_cols: f64 = a.col_sq_norms().iter().sum();
            let by_rows: f64 = a.row_sq_norms().iter().sum();
            prop_assert!((a.frob_sq() - by_cols).abs() <= 1e-12 * a.frob_sq());
            prop_assert!((a.frob_sq() - by_rows).abs() <= 1e-12 * a.frob_sq());
        }

        #[test]
        fn normal_product_matches_brute_force(
            data in prop::collection::vec(-5.0..5.0f64, 200),
            x in prop::collection::vec(-5.0..5.0f64, 10),
            sparse in any::<bool>(),
        ) {
            let d = DenseMatrix::new(20, 10, data).unwrap();
            let mut oracle = vec![0.0; 10];
            for (k, o) in oracle.iter_mut().enumerate() {
                for i in 0..20 {
                    let ax_i: f64 = (0..10).map(|j| d.get(i, j) * x[j]).sum();
                    *o += d.get(i, k) * ax_i;
                }
            }
            let a = if sparse {
                ProblemMatrix::sparse(SparseMatrix::from_dense(&d)).unwrap()
            } else {
                ProblemMatrix::dense(d).unwrap()
            };
            let mut flops = 0;
            let ax = a.mat_vec(&x, &mut flops).unwrap();
            let got = a.mat_t_vec(&ax, &mut flops).unwrap();
            let scale = norm(&oracle).max(1e-300);
            prop_assert!(dist_sq(&got, &oracle).sqrt() <= 1e-12 * scale);
            prop_assert_eq!(flops, 4 * a.nnz() as u64);
        }

        #[test]
        fn dot_adds_two_flops_per_stored_entry(d in arb_dense(10, 10), j in 0usize..10) {
            let a = ProblemMatrix::sparse(SparseMatrix::from_dense(&d)).unwrap();
            let j = j % a.ncols();
            let col = a.column(j).unwrap();
            let u = vec![1.0; a.nrows()];
            let mut flops = 0;
            dot(&u, &col, &mut flops).unwrap();
            prop_assert_eq!(flops, 2 * col.nnz() as u64);
        }
    }
}
