//! Fixed-length CD / EK / K schedules plotted against Kaczmarz iterations.
//!
//! Each method gets the same number of CD-type and Kaczmarz-type
//! iterations, `horizon`, only ordered differently:
//!
//! | method  | schedule                                   |
//! |---------|--------------------------------------------|
//! | ek      | EK(horizon)                                |
//! | cd+k    | CD(cd + ek), K(horizon)                    |
//! | cd+ek+k | CD(cd), EK(ek), K(horizon - ek)            |
//! | k       | K(horizon)                                 |
//!
//! Zero-length stages are dropped, so `cd = ek = 0` turns CD+K into plain
//! Kaczmarz on `A x = b`.

use serde::{Deserialize, Serialize};

use rankz_core::solvers::{EkEnd, Stage, StageEnd};
use rankz_core::{Algorithm, EnsembleKind, SolverConfig};

use crate::error::{BenchError, Result};
use crate::experiment::{execute, grid, Axis, ExperimentResult, ExperimentSpec, Plan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fig4Schedule {
    /// CD iterations before EK starts.
    pub cd: u64,
    /// EK iterations; defaults to `cd`.
    pub ek: Option<u64>,
    /// Kaczmarz iterations per method; defaults to `cd + ek`.
    pub horizon: Option<u64>,
}

impl Default for Fig4Schedule {
    fn default() -> Self {
        Fig4Schedule { cd: 2000, ek: None, horizon: None }
    }
}

impl Fig4Schedule {
    pub fn ek_iters(&self) -> u64 {
        self.ek.unwrap_or(self.cd)
    }

    pub fn horizon(&self) -> u64 {
        self.horizon.unwrap_or(self.cd + self.ek_iters())
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon() < self.ek_iters() {
            return Err(BenchError::Invalid(format!(
                "horizon {} shorter than the EK phase {}",
                self.horizon(),
                self.ek_iters()
            )));
        }
        if self.horizon() == 0 {
            return Err(BenchError::Invalid("empty schedule".into()));
        }
        Ok(())
    }
}

pub fn fig4_stages(algorithm: Algorithm, schedule: &Fig4Schedule) -> Result<Vec<Stage>> {
    let (cd, ek, h) = (schedule.cd, schedule.ek_iters(), schedule.horizon());
    let stages = match algorithm {
        Algorithm::Ek => vec![Stage::Ek(EkEnd::Iterations(h))],
        Algorithm::K => vec![Stage::K(StageEnd::Iterations(h))],
        Algorithm::CdK => vec![Stage::Cd(StageEnd::Iterations(cd + ek)), Stage::K(StageEnd::Iterations(h))],
        Algorithm::CdEkK => vec![
            Stage::Cd(StageEnd::Iterations(cd)),
            Stage::Ek(EkEnd::Iterations(ek)),
            Stage::K(StageEnd::Iterations(h - ek)),
        ],
        Algorithm::Cd => {
            return Err(BenchError::Invalid("cd takes no Kaczmarz steps; use ek, k, cd+k or cd+ek+k".into()))
        }
    };
    let stages: Vec<Stage> = stages
        .into_iter()
        .filter(|s| !matches!(s, Stage::Cd(StageEnd::Iterations(0)) | Stage::Ek(EkEnd::Iterations(0)) | Stage::K(StageEnd::Iterations(0))))
        .collect();
    if stages.is_empty() {
        return Err(BenchError::Invalid("empty schedule".into()));
    }
    Ok(stages)
}

fn length(stages: &[Stage]) -> u64 {
    stages
        .iter()
        .map(|s| match s {
            Stage::Cd(StageEnd::Iterations(n)) | Stage::K(StageEnd::Iterations(n)) | Stage::Ek(EkEnd::Iterations(n)) => *n,
            _ => 0,
        })
        .sum()
}

/// Runs the schedules of `spec.fig4` for `spec.algorithms` on a rank-deficient
/// ensemble. Curves are indexed by Kaczmarz iterations `0, trace_every, ..,
/// horizon`; `max_iters` and the stopping criteria are not used.
pub fn run_fig4_protocol(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if spec.ensemble.kind != EnsembleKind::RankDeficient {
        return Err(BenchError::Invalid("the fig4 protocol runs on rank-deficient ensembles".into()));
    }
    let schedule = spec.fig4;
    schedule.validate()?;
    for &alg in &spec.algorithms {
        fig4_stages(alg, &schedule)?;
    }
    let stages =
        |alg: Algorithm, _: &SolverConfig| fig4_stages(alg, &schedule).expect("validated above");
    let budget = |alg: Algorithm| length(&fig4_stages(alg, &schedule).expect("validated above")).max(1);
    let mut spec = spec.clone();
    spec.stop_on_criteria = false;
    spec.max_iters = spec.algorithms.iter().map(|&a| budget(a)).max().unwrap_or(1);
    execute(
        &spec,
        Plan {
            axis: Axis::KIterations,
            grid: grid(schedule.horizon(), spec.trace_every.max(1)),
            stages: &stages,
            budget: &budget,
        },
    )
}
