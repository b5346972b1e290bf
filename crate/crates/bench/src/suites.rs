//! Named experiment presets (fig1 to fig4) and their default budgets.
//!
//! | suite | ensemble                     | algorithms        |
//! |-------|------------------------------|-------------------|
//! | fig1  | dense 2000 x 500             | cd, ek            |
//! | fig2  | dense 10000 x 500            | cd, ek            |
//! | fig3  | sparse 2000 x 800, 0.25      | cd, ek            |
//! | fig4  | rank 400, 500 x 2000, N 2000 | ek, cd+k, cd+ek+k |
//!
//! `scale` multiplies `m`, `n` and `r`, rounding up. The fig4 phase length
//! `N` is an iteration count and is not scaled.

use serde::{Deserialize, Serialize};

use rankz_core::{Algorithm, EnsembleKind, EnsembleSpec};

use crate::error::{BenchError, Result};
use crate::experiment::{run_experiment, ExperimentResult, ExperimentSpec};
use crate::fig4::{run_fig4_protocol, Fig4Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fig1" => Ok(Suite::Fig1),
            "fig2" => Ok(Suite::Fig2),
            "fig3" => Ok(Suite::Fig3),
            "fig4" => Ok(Suite::Fig4),
            other => Err(format!("unknown suite {other:?} (fig1|fig2|fig3|fig4)")),
        }
    }
}

fn scaled(v: usize, scale: f64) -> usize {
    ((v as f64 * scale).ceil() as usize).max(1)
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Fig1 => "fig1",
            Suite::Fig2 => "fig2",
            Suite::Fig3 => "fig3",
            Suite::Fig4 => "fig4",
        }
    }

    /// Preset spec; `trials` and `base_seed` are left to the caller.
    pub fn spec(self, scale: f64, trials: usize, base_seed: u64) -> Result<ExperimentSpec> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(BenchError::Invalid(format!("scale {scale} must be positive")));
        }
        let (kind, m, n, density, rank) = match self {
            Suite::Fig1 => (EnsembleKind::Dense, 2000, 500, 1.0, None),
            Suite::Fig2 => (EnsembleKind::Dense, 10000, 500, 1.0, None),
            Suite::Fig3 => (EnsembleKind::Sparse, 2000, 800, 0.25, None),
            Suite::Fig4 => (EnsembleKind::RankDeficient, 500, 2000, 1.0, Some(400)),
        };
        let ensemble = EnsembleSpec {
            kind,
            m: scaled(m, scale),
            n: scaled(n, scale),
            density,
            rank: rank.map(|r| scaled(r, scale)),
            trials,
            base_seed,
        };
        let n = ensemble.n as u64;
        let mut spec = match self {
            // budgets in multiples of n keep the curves above the rounding floor
            Suite::Fig1 => ExperimentSpec::new(ensemble, vec![Algorithm::Cd, Algorithm::Ek], 60 * n),
            Suite::Fig2 => ExperimentSpec::new(ensemble, vec![Algorithm::Cd, Algorithm::Ek], 30 * n),
            Suite::Fig3 => ExperimentSpec::new(ensemble, vec![Algorithm::Cd, Algorithm::Ek], 120 * n),
            Suite::Fig4 => {
                let schedule = Fig4Schedule::default();
                let mut s = ExperimentSpec::new(
                    ensemble,
                    vec![Algorithm::Ek, Algorithm::CdK, Algorithm::CdEkK],
                    2 * schedule.horizon(),
                );
                s.fig4 = schedule;
                s.trace_every = (schedule.horizon() / 200).max(1);
                s
            }
        };
        if self != Suite::Fig4 {
            spec.trace_every = (spec.max_iters / 200).max(1);
        }
        Ok(spec)
    }

    pub fn run(self, spec: &ExperimentSpec) -> Result<ExperimentResult> {
        match self {
            Suite::Fig4 => run_fig4_protocol(spec),
            _ => run_experiment(spec),
        }
    }
}
