//! Expected-error bounds as computable reference curves.
//!
//! With `q = 1 - 1/kappa_F(A)^2`:
//!
//! * CD residual: `E|r_cd(k) - r_o|^2 <= q^k |b - r_o|^2`
//! * CD solution: `E|x_cd(k) - x_o|^2 <= q^k |A^+|^2 |b - r_o|^2`
//! * Kaczmarz on a consistent system: `E|x(k) - x_o|^2 <= q^k |x(0) - x_o|^2`
//! * EK: `E|x(k) - x_o|^2 <= q^floor(k/2) C` with an unknown constant `C`;
//!   only the decay factor is emitted (`C = 1`).

use serde::{Deserialize, Serialize};

use rankz_core::linalg::dist_sq;
use rankz_core::problems::oracle_solution;
use rankz_core::LsProblem;

use crate::error::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    CdResidual,
    CdSolution,
    Kaczmarz,
    /// Decay factor of the EK bound; the constant is left out.
    EkShape,
}

impl BoundKind {
    pub fn label(self) -> &'static str {
        match self {
            BoundKind::CdResidual => "cd_residual",
            BoundKind::CdSolution => "cd_solution",
            BoundKind::Kaczmarz => "kaczmarz",
            BoundKind::EkShape => "ek_shape",
        }
    }

    pub fn is_shape_only(self) -> bool {
        self == BoundKind::EkShape
    }
}

impl std::str::FromStr for BoundKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [BoundKind::CdResidual, BoundKind::CdSolution, BoundKind::Kaczmarz, BoundKind::EkShape]
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| format!("unknown bound {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub kappa_f: f64,
    /// `|b - r_o|^2`
    pub resid_gap_sq: f64,
    /// `|A^+|^2`
    pub pinv_norm_sq: f64,
    /// `|x(0) - x_o|^2` for `x(0) = 0`, i.e. `|x_o|^2`.
    pub init_err_sq: f64,
}

impl BoundConstants {
    /// Per-iteration decay `1 - 1/kappa_F^2`.
    pub fn rate(&self) -> f64 {
        1.0 - 1.0 / (self.kappa_f * self.kappa_f)
    }

    pub fn initial(&self, kind: BoundKind) -> f64 {
        match kind {
            BoundKind::CdResidual => self.resid_gap_sq,
            BoundKind::CdSolution => self.pinv_norm_sq * self.resid_gap_sq,
            BoundKind::Kaczmarz => self.init_err_sq,
            BoundKind::EkShape => 1.0,
        }
    }

    /// Bound value at iteration `k`, evaluated in closed form.
    pub fn at(&self, kind: BoundKind, k: u64) -> f64 {
        let exponent = if kind == BoundKind::EkShape { k / 2 } else { k };
        self.initial(kind) * self.rate().powf(exponent as f64)
    }
}

/// Evaluates the oracle quantities behind every bound. One SVD.
pub fn bound_constants(problem: &LsProblem) -> Result<BoundConstants> {
    let oracle = oracle_solution(&problem.a, &problem.b)?;
    let b_minus_r: Vec<f64> = problem.b.iter().zip(&oracle.r_o).map(|(b, r)| b - r).collect();
    let pinv = oracle.pinv_norm();
    Ok(BoundConstants {
        kappa_f: problem.a.frob() * pinv,
        resid_gap_sq: b_minus_r.iter().map(|v| v * v).sum(),
        pinv_norm_sq: pinv * pinv,
        init_err_sq: dist_sq(&oracle.x_o, &vec![0.0; oracle.x_o.len()]),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub iterations: Vec<u64>,
    pub values: Vec<f64>,
    pub rate: f64,
    pub constants: BoundConstants,
}

impl BoundCurve {
    /// Values at `k = 0..=k_max`, each obtained from its predecessor by one
    /// multiplication with the decay factor.
    pub fn from_constants(kind: BoundKind, constants: BoundConstants, k_max: u64) -> Self {
        let rate = constants.rate();
        let mut values = Vec::with_capacity(k_max as usize + 1);
        let mut v = constants.initial(kind);
        for k in 0..=k_max {
            if k > 0 && (kind != BoundKind::EkShape || k % 2 == 0) {
                v *= rate;
            }
            values.push(v);
        }
        BoundCurve { kind, iterations: (0..=k_max).collect(), values, rate, constants }
    }

    /// Largest relative deviation of `values[k+1] / values[k]` from the
    /// per-step factor, over steps whose values are normal floats.
    pub fn max_ratio_error(&self) -> f64 {
        self.values
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0].is_normal() && w[1].is_normal())
            .map(|(k, w)| {
                let expected = match self.kind {
                    BoundKind::EkShape if (k + 1) % 2 == 1 => 1.0,
                    _ => self.rate,
                };
                (w[1] / w[0] - expected).abs() / expected
            })
            .fold(0.0, f64::max)
    }
}

pub fn eval_bound(kind: BoundKind, problem: &LsProblem, k_max: u64) -> Result<BoundCurve> {
    if problem.x_o.is_none() {
        return Err(BenchError::Invalid("bound evaluation needs a reference solution".into()));
    }
    Ok(BoundCurve::from_constants(kind, bound_constants(problem)?, k_max))
}
