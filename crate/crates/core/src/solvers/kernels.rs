//! Single projection steps.
//!
//! Flop charges: a CD step costs `4 nnz(A_j) + 2` (dot, divide, axpy, one
//! coordinate update); a Kaczmarz step costs `4 nnz(A^i) + 2` (dot,
//! subtract, divide, axpy); a dual step costs `4 nnz(A^i) + 1`.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, ProblemMatrix};

/// Coordinate descent on column `j`: projects `r_cd` onto the orthogonal
/// complement of `A_j` and moves `x_cd[j]` by the optimal step. Returns the step `mu`.
pub fn cd_step(
    a: &ProblemMatrix,
    r_cd: &mut [f64],
    x_cd: &mut [f64],
    j: usize,
    flops: &mut u64,
) -> Result<f64> {
    let col_sq = *a
        .col_sq_norms()
        .get(j)
        .ok_or(Error::IndexOutOfRange { index: j, dim: a.ncols() })?;
    if col_sq == 0.0 {
        return Err(Error::ZeroNorm { kind: "column", index: j });
    }
    if x_cd.len() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.ncols(), got: x_cd.len() });
    }
    let col = a.column(j)?;
    let mu = dot(r_cd, &col, flops)? / col_sq;
    axpy(-mu, &col, r_cd, flops)?;
    x_cd[j] += mu;
    *flops += 2;
    Ok(mu)
}

/// Projects `x` onto the hyperplane `<A^i, x> = target`.
pub fn kaczmarz_step(
    a: &ProblemMatrix,
    x: &mut [f64],
    target: f64,
    i: usize,
    flops: &mut u64,
) -> Result<()> {
    let row_sq = *a
        .row_sq_norms()
        .get(i)
        .ok_or(Error::IndexOutOfRange { index: i, dim: a.nrows() })?;
    if row_sq == 0.0 {
        return Err(Error::ZeroNorm { kind: "row", index: i });
    }
    let row = a.row(i)?;
    let step = (target - dot(x, &row, flops)?) / row_sq;
    axpy(step, &row, x, flops)?;
    *flops += 2;
    Ok(())
}

/// Projects `q` onto the orthogonal complement of row `i`. Run alongside a
/// Kaczmarz iteration toward `A x = A x_cd` with shared row draws, starting
/// from `q = x_cd` and `x = 0`, it keeps `x + q = x_cd` at every step.
pub fn dual_kaczmarz_step(a: &ProblemMatrix, q: &mut [f64], i: usize, flops: &mut u64) -> Result<()> {
    let row_sq = *a
        .row_sq_norms()
        .get(i)
        .ok_or(Error::IndexOutOfRange { index: i, dim: a.nrows() })?;
    if row_sq == 0.0 {
        return Err(Error::ZeroNorm { kind: "row", index: i });
    }
    let row = a.row(i)?;
    let step = dot(q, &row, flops)? / row_sq;
    axpy(-step, &row, q, flops)?;
    *flops += 1;
    Ok(())
}
