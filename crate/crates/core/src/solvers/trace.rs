use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Which kind of iteration produced a checkpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cd,
    Ek,
    K,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Cd => "cd",
            Phase::Ek => "ek",
            Phase::K => "k",
        }
    }
}

/// Solver metrics at one iteration count.
///
/// `x` below is the phase's current solution estimate: `x_cd` during CD,
/// `x_ek` during EK and the Kaczmarz iterate during K.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    /// Iterations completed, counted across all phases.
    pub k: u64,
    pub phase: Phase,
    /// `|r_cd|`, or `|c - A x|` for plain Kaczmarz on a target `c`.
    pub r_norm: f64,
    /// Residual criterion evaluated with `x`.
    pub crit1: f64,
    /// System criterion evaluated with `x`.
    pub crit2: f64,
    /// `|x - x_o|^2 / |x_o|^2` when a reference solution is known.
    pub rel_err_sq: Option<f64>,
    /// `|r_cd - r_o|^2` when a reference residual is known and CD has run.
    pub resid_err_sq: Option<f64>,
    /// `|b - A x|`.
    pub x_resid_norm: f64,
    /// `|b - A x_cd - r_cd|` whenever CD iterates exist.
    pub identity_gap: Option<f64>,
    /// Kaczmarz steps taken so far (EK iterations included).
    pub k_iters: u64,
    /// Iteration flops so far; criterion evaluations are not included.
    pub flops: u64,
}

impl Checkpoint {
    pub fn rmse(&self) -> Option<f64> {
        self.rel_err_sq.map(f64::sqrt)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunTrace {
    pub checkpoints: Vec<Checkpoint>,
}

impl RunTrace {
    /// Appends `cp` unless a checkpoint at the same iteration count already exists.
    pub(crate) fn push(&mut self, cp: Checkpoint) {
        match self.checkpoints.last() {
            Some(last) if last.k >= cp.k => {}
            _ => self.checkpoints.push(cp),
        }
    }

    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }

    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    /// CSV with header `k,r_norm,crit1,crit2,rmse,flops,phase`; `rmse` is
    /// empty when no reference solution is known.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,r_norm,crit1,crit2,rmse,flops,phase\n");
        for c in &self.checkpoints {
            let rmse = c.rmse().map(fmt_f64).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.k,
                fmt_f64(c.r_norm),
                fmt_f64(c.crit1),
                fmt_f64(c.crit2),
                rmse,
                c.flops,
                c.phase.as_str()
            );
        }
        out
    }
}

/// Shortest round-trip representation; `inf` for infinity.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}
