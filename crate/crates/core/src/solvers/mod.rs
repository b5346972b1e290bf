//! Randomized least-squares solvers.
//!
//! All algorithms are compositions of three kinds of stages run by one engine:
//!
//! * **CD**: coordinate descent on a norm-weighted random column, maintaining
//!   `x_cd` and its residual `r_cd = b - A x_cd`;
//! * **EK**: one CD step followed by one Kaczmarz step toward the current
//!   system `A x = b - r_cd` (extended Kaczmarz);
//! * **K**: Kaczmarz steps toward a fixed target, `b - r_cd` when a CD
//!   residual exists and `b` otherwise.
//!
//! | algorithm  | stages                                                       |
//! |------------|--------------------------------------------------------------|
//! | `cd`       | CD until the residual criterion holds                        |
//! | `k`        | K on `A x = b` until the system criterion holds              |
//! | `ek`       | EK until both criteria hold                                  |
//! | `cd+k`     | CD to `eps_cd`, then K on `A x = b - r_cd` from `x = 0`      |
//! | `cd+ek+k`  | CD to `eps_cd_hat`, EK until the residual criterion holds, then K from the EK iterate |
//!
//! Criteria are evaluated every `check_every` iterations of a stage
//! (default `8 min(m, n)`), starting with the stage's first iteration.
//! `max_iters` bounds the iterations of all stages together.

mod criteria;
mod engine;
mod kernels;
mod trace;

use serde::{Deserialize, Serialize};

pub use criteria::{check_stop_cd, check_stop_k, Criterion};
pub use kernels::{cd_step, dual_kaczmarz_step, kaczmarz_step};
pub use trace::{fmt_f64, Checkpoint, Phase, RunTrace};

use crate::error::{Error, Result};
use crate::linalg::ProblemMatrix;
use crate::problems::LsProblem;
use crate::sampling::{IndexSampler, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Tolerance of the residual criterion `|A^T r_cd| / (|A|_F^2 |x|)`.
    pub eps_cd: f64,
    /// Tolerance of the system criterion `|b - r_cd - A x| / (|A|_F |x|)`.
    pub eps_k: f64,
    /// CD tolerance of the first `cd+ek+k` stage; defaults to `1e3 * eps_cd`.
    pub eps_cd_hat: Option<f64>,
    pub max_iters: u64,
    /// Criterion cadence; defaults to `8 min(m, n)`.
    pub check_every: Option<u64>,
    pub seed: u64,
    /// Checkpoint stride; defaults to the criterion cadence.
    pub trace_every: Option<u64>,
    /// When false the final stage ignores its criteria and runs until `max_iters`.
    pub stop_on_criteria: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps_cd: 1e-6,
            eps_k: 1e-6,
            eps_cd_hat: None,
            max_iters: 1_000_000,
            check_every: None,
            seed: 0,
            trace_every: None,
            stop_on_criteria: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.eps_cd, self.eps_k].iter().any(|e| e.is_nan() || *e <= 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.check_every == Some(0) || self.trace_every == Some(0) {
            return Err(Error::InvalidConfig("check and trace strides must be at least 1".into()));
        }
        if let Some(hat) = self.eps_cd_hat {
            if hat.is_nan() || hat < self.eps_cd {
                return Err(Error::InvalidConfig(format!(
                    "eps_cd_hat {hat} must not be below eps_cd {}",
                    self.eps_cd
                )));
            }
        }
        Ok(())
    }

    pub fn eps_cd_hat(&self) -> f64 {
        self.eps_cd_hat.unwrap_or(1e3 * self.eps_cd)
    }

    pub fn check_every_for(&self, m: usize, n: usize) -> u64 {
        self.check_every.unwrap_or(8 * m.min(n) as u64)
    }

    pub fn trace_every_for(&self, m: usize, n: usize) -> u64 {
        self.trace_every.unwrap_or_else(|| self.check_every_for(m, n))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "cd")]
    Cd,
    #[serde(rename = "k")]
    K,
    #[serde(rename = "ek")]
    Ek,
    #[serde(rename = "cd+k")]
    CdK,
    #[serde(rename = "cd+ek+k")]
    CdEkK,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Cd, Algorithm::K, Algorithm::Ek, Algorithm::CdK, Algorithm::CdEkK];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Cd => "cd",
            Algorithm::K => "k",
            Algorithm::Ek => "ek",
            Algorithm::CdK => "cd+k",
            Algorithm::CdEkK => "cd+ek+k",
        }
    }

    /// Stage plan for this algorithm under `config`.
    pub fn stages(self, config: &SolverConfig) -> Vec<Stage> {
        match self {
            Algorithm::Cd => vec![Stage::Cd(StageEnd::Tolerance(config.eps_cd))],
            Algorithm::K => vec![Stage::K(StageEnd::Tolerance(config.eps_k))],
            Algorithm::Ek => vec![Stage::Ek(EkEnd::BothCriteria)],
            Algorithm::CdK => vec![
                Stage::Cd(StageEnd::Tolerance(config.eps_cd)),
                Stage::K(StageEnd::Tolerance(config.eps_k)),
            ],
            Algorithm::CdEkK => vec![
                Stage::Cd(StageEnd::Tolerance(config.eps_cd_hat())),
                Stage::Ek(EkEnd::ResidualCriterion),
                Stage::K(StageEnd::Tolerance(config.eps_k)),
            ],
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?} (cd|k|ek|cd+k|cd+ek+k)"))
    }
}

/// How a CD or K stage ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StageEnd {
    /// CD: residual criterion at this tolerance; K: system criterion.
    Tolerance(f64),
    /// After exactly this many iterations.
    Iterations(u64),
}

/// How an EK stage ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EkEnd {
    /// Both criteria hold (`eps_cd`, `eps_k`); the run is then converged.
    BothCriteria,
    /// The residual criterion holds at `eps_cd`. If the system criterion holds
    /// as well the run is converged, otherwise the next stage starts. The stage
    /// is skipped when the preceding CD stage already met `eps_cd`.
    ResidualCriterion,
    Iterations(u64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stage {
    Cd(StageEnd),
    Ek(EkEnd),
    K(StageEnd),
}

impl Stage {
    pub fn phase(self) -> Phase {
        match self {
            Stage::Cd(_) => Phase::Cd,
            Stage::Ek(_) => Phase::Ek,
            Stage::K(_) => Phase::K,
        }
    }
}

/// Column indices fed to CD steps in place of fresh draws, so that two
/// algorithms can be run on identical column sequences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub columns: Vec<usize>,
}

impl StepRecord {
    /// Draws `len` columns with probability proportional to their squared norms.
    pub fn sample(a: &ProblemMatrix, seed: u64, len: usize) -> Result<Self> {
        let sampler = IndexSampler::new(a.col_sq_norms())?;
        let mut rng = Rng::from_seed(seed);
        Ok(StepRecord { columns: (0..len).map(|_| sampler.draw(&mut rng)).collect() })
    }

    pub fn to_text(&self) -> String {
        self.columns.iter().map(|j| format!("{j}\n")).collect()
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, String> {
        let columns = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.parse::<usize>().map_err(|e| format!("bad column index {l:?}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        Ok(StepRecord { columns })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// The final stage's stopping rule was met.
    Converged,
    /// A fixed-length schedule, or a run with stopping disabled, finished.
    Completed,
    BudgetExhausted,
    /// A coupled run consumed its whole column record.
    RecordExhausted,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    /// Final solution estimate of the last stage that ran.
    pub x: Vec<f64>,
    pub x_cd: Option<Vec<f64>>,
    pub r_cd: Option<Vec<f64>>,
    pub status: Status,
    pub iterations: u64,
    /// Kaczmarz steps, EK iterations included.
    pub k_iterations: u64,
    /// Flops spent in iterations.
    pub flops: u64,
    /// Flops spent evaluating stopping criteria.
    pub check_flops: u64,
    /// Iterations spent in each stage that ran, in order.
    pub stage_iterations: Vec<(Phase, u64)>,
    pub trace: RunTrace,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn final_checkpoint(&self) -> &Checkpoint {
        self.trace.last().expect("every run records a final checkpoint")
    }

    /// Mean iteration flops per iteration.
    pub fn flops_per_iteration(&self) -> f64 {
        self.flops as f64 / self.iterations.max(1) as f64
    }
}

/// Runs `stages` on `problem`. Columns come from `record` when given.
pub fn solve_stages(
    problem: &LsProblem,
    config: &SolverConfig,
    stages: &[Stage],
    record: Option<&StepRecord>,
) -> Result<SolveOutcome> {
    engine::Engine::new(problem, &problem.b, config, record)?.run(stages, None)
}

pub fn solve(problem: &LsProblem, config: &SolverConfig, algorithm: Algorithm) -> Result<SolveOutcome> {
    solve_stages(problem, config, &algorithm.stages(config), None)
}

/// Coordinate descent until the residual criterion holds with `x_cd`.
pub fn solve_cd(problem: &LsProblem, config: &SolverConfig) -> Result<SolveOutcome> {
    solve(problem, config, Algorithm::Cd)
}

/// Coordinate descent on a recorded column sequence.
pub fn solve_cd_recorded(
    problem: &LsProblem,
    config: &SolverConfig,
    record: &StepRecord,
) -> Result<SolveOutcome> {
    solve_stages(problem, config, &Algorithm::Cd.stages(config), Some(record))
}

/// Kaczmarz on `A x = target` from `x0`, until `|target - A x| / (|A|_F |x|) <= eps_k`.
/// From `x0 = 0` the iterates stay in `range(A^T)`.
pub fn solve_kaczmarz(
    problem: &LsProblem,
    target: &[f64],
    config: &SolverConfig,
    x0: &[f64],
) -> Result<SolveOutcome> {
    if x0.len() != problem.ncols() {
        return Err(Error::DimensionMismatch { expected: problem.ncols(), got: x0.len() });
    }
    engine::Engine::new(problem, target, config, None)?
        .run(&[Stage::K(StageEnd::Tolerance(config.eps_k))], Some(x0.to_vec()))
}

/// Extended Kaczmarz until both criteria hold with `x_ek`; columns come from
/// `record` when given, rows are always drawn.
pub fn solve_ek(
    problem: &LsProblem,
    config: &SolverConfig,
    record: Option<&StepRecord>,
) -> Result<SolveOutcome> {
    solve_stages(problem, config, &Algorithm::Ek.stages(config), record)
}

pub fn solve_cd_k(problem: &LsProblem, config: &SolverConfig) -> Result<SolveOutcome> {
    solve(problem, config, Algorithm::CdK)
}

pub fn solve_cd_ek_k(problem: &LsProblem, config: &SolverConfig) -> Result<SolveOutcome> {
    solve(problem, config, Algorithm::CdEkK)
}
