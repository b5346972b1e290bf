//! Stopping criteria.
//!
//! * residual criterion: `|A^T r_cd| / (|A|_F^2 |x|) <= eps_cd`, i.e. the CD
//!   residual is nearly orthogonal to `range(A)`;
//! * system criterion: `|b - r_cd - A x| / (|A|_F |x|) <= eps_k`, i.e. `x`
//!   solves `A x = b - r_cd`.
//!
//! When `|x| = 0` a criterion holds iff its numerator is exactly zero; the
//! reported value is then `0` or `+inf`.

use crate::error::{Error, Result};
use crate::linalg::{norm2, ProblemMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Criterion {
    pub value: f64,
    pub holds: bool,
}

impl Criterion {
    fn ratio(numerator: f64, denominator: f64, eps: f64) -> Self {
        let value = if denominator == 0.0 {
            if numerator == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            numerator / denominator
        };
        Criterion { value, holds: value <= eps }
    }
}

pub fn check_stop_cd(
    a: &ProblemMatrix,
    r_cd: &[f64],
    x_ref: &[f64],
    eps: f64,
    flops: &mut u64,
) -> Result<Criterion> {
    if x_ref.len() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.ncols(), got: x_ref.len() });
    }
    let atr = a.mat_t_vec(r_cd, flops)?;
    let numerator = norm2(&atr, flops);
    let denominator = a.frob_sq() * norm2(x_ref, flops);
    Ok(Criterion::ratio(numerator, denominator, eps))
}

/// `r_cd = None` stands for a zero CD residual, i.e. the system `A x = b`.
pub fn check_stop_k(
    a: &ProblemMatrix,
    b: &[f64],
    r_cd: Option<&[f64]>,
    x_ref: &[f64],
    eps: f64,
    flops: &mut u64,
) -> Result<Criterion> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
    }
    let ax = a.mat_vec(x_ref, flops)?;
    let gap: Vec<f64> = match r_cd {
        Some(r) => {
            if r.len() != b.len() {
                return Err(Error::DimensionMismatch { expected: b.len(), got: r.len() });
            }
            *flops += 2 * b.len() as u64;
            b.iter().zip(r).zip(&ax).map(|((bi, ri), axi)| bi - ri - axi).collect()
        }
        None => {
            *flops += b.len() as u64;
            b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect()
        }
    };
    let numerator = norm2(&gap, flops);
    let denominator = a.frob() * norm2(x_ref, flops);
    Ok(Criterion::ratio(numerator, denominator, eps))
}
