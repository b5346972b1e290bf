use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rankz_core::solvers::{solve_stages, Checkpoint, Phase, Stage};
use rankz_core::{derive_trial_seed, Algorithm, EnsembleSpec, LsProblem, SolveOutcome, SolverConfig, StepRecord};

use crate::bounds::{bound_constants, BoundConstants, BoundKind};
use crate::error::{BenchError, Result};
use crate::fig4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub ensemble: EnsembleSpec,
    pub algorithms: Vec<Algorithm>,
    /// Iteration budget of every run (all phases together).
    pub max_iters: u64,
    /// Checkpoint stride shared by all algorithms.
    pub trace_every: u64,
    /// Feed CD and EK the same recorded column sequence within a trial.
    pub coupled: bool,
    pub eps_cd: f64,
    pub eps_k: f64,
    pub eps_cd_hat: Option<f64>,
    pub check_every: Option<u64>,
    /// When false every run continues to `max_iters`, so every curve covers the whole grid.
    pub stop_on_criteria: bool,
    /// Attach bound curves to the output.
    pub bounds: bool,
    /// Fixed-length schedule used by [`crate::run_fig4_protocol`].
    pub fig4: fig4::Fig4Schedule,
}

impl ExperimentSpec {
    /// Run-to-budget spec with roughly 100 checkpoints.
    pub fn new(ensemble: EnsembleSpec, algorithms: Vec<Algorithm>, max_iters: u64) -> Self {
        ExperimentSpec {
            ensemble,
            algorithms,
            max_iters,
            trace_every: max_iters.div_ceil(100).max(1),
            coupled: false,
            eps_cd: 1e-6,
            eps_k: 1e-6,
            eps_cd_hat: None,
            check_every: None,
            stop_on_criteria: false,
            bounds: false,
            fig4: fig4::Fig4Schedule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        if self.algorithms.is_empty() {
            return Err(BenchError::Invalid("no algorithms requested".into()));
        }
        if self.trace_every == 0 {
            return Err(BenchError::Invalid("trace_every must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(BenchError::Invalid("max_iters must be at least 1".into()));
        }
        self.solver_config(0).validate()?;
        Ok(())
    }

    pub fn solver_config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            eps_cd: self.eps_cd,
            eps_k: self.eps_k,
            eps_cd_hat: self.eps_cd_hat,
            max_iters: self.max_iters,
            check_every: self.check_every,
            seed,
            trace_every: Some(self.trace_every),
            stop_on_criteria: self.stop_on_criteria,
        }
    }

    /// Seed of trial `t`'s problem.
    pub fn problem_seed(&self, trial: usize) -> u64 {
        derive_trial_seed(self.ensemble.base_seed, trial as u64)
    }
}

/// Seed of `algorithm`'s solver run on the problem with seed `problem_seed`.
pub fn solver_seed(problem_seed: u64, algorithm: Algorithm) -> u64 {
    let idx = Algorithm::ALL.iter().position(|&a| a == algorithm).expect("listed") as u64;
    derive_trial_seed(problem_seed, 1 + idx)
}

/// Seed of the shared column record in coupled mode.
pub fn record_seed(problem_seed: u64) -> u64 {
    derive_trial_seed(problem_seed, 0)
}

/// What the checkpoint grid counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Iterations of any kind.
    Iterations,
    /// Kaczmarz steps (EK iterations included); CD-phase checkpoints are ignored.
    KIterations,
}

impl Axis {
    fn key(self, c: &Checkpoint) -> Option<u64> {
        match self {
            Axis::Iterations => Some(c.k),
            Axis::KIterations => (c.phase != Phase::Cd).then_some(c.k_iters),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmseCurve {
    pub label: String,
    pub iterations: Vec<u64>,
    pub rmse: Vec<f64>,
}

/// A bound averaged over trials and expressed on the RMSE scale,
/// `sqrt(mean_t bound_t(k) / |x_o,t|^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSeries {
    /// Algorithm the bound refers to.
    pub label: String,
    pub kind: BoundKind,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct AlgoRun {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub outcome: SolveOutcome,
    /// `|x - x_o|^2 / |x_o|^2` on the experiment grid.
    pub samples: Vec<f64>,
}

impl AlgoRun {
    /// First grid-free count on `axis` at which the relative error is at most
    /// `threshold`.
    pub fn first_below(&self, axis: Axis, threshold: f64) -> Option<u64> {
        let t2 = threshold * threshold;
        self.outcome
            .trace
            .checkpoints
            .iter()
            .find_map(|c| match (axis.key(c), c.rel_err_sq) {
                (Some(key), Some(e)) if e <= t2 => Some(key),
                _ => None,
            })
    }
}

#[derive(Clone, Debug)]
pub struct TrialRun {
    pub trial: usize,
    pub problem_seed: u64,
    pub runs: Vec<AlgoRun>,
    pub bounds: Option<BoundConstants>,
    /// `|x_o|^2`
    pub x_o_sq: f64,
}

impl TrialRun {
    pub fn run(&self, algorithm: Algorithm) -> Option<&AlgoRun> {
        self.runs.iter().find(|r| r.algorithm == algorithm)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub axis: Axis,
    pub grid: Vec<u64>,
    pub trials: Vec<TrialRun>,
    pub curves: Vec<RmseCurve>,
    pub bounds: Vec<BoundSeries>,
}

impl ExperimentResult {
    pub fn curve(&self, algorithm: Algorithm) -> Option<&RmseCurve> {
        self.curves.iter().find(|c| c.label == algorithm.label())
    }
}

/// `0, stride, 2 stride, ..` up to `end`, with `end` always included.
pub(crate) fn grid(end: u64, stride: u64) -> Vec<u64> {
    let mut g: Vec<u64> = (0..=end).step_by(stride as usize).collect();
    if g.last() != Some(&end) {
        g.push(end);
    }
    g
}

/// Relative error at each grid point, holding the latest checkpoint at or
/// before it. Runs that stopped early keep their final value.
fn sample(outcome: &SolveOutcome, axis: Axis, grid: &[u64]) -> std::result::Result<Vec<f64>, String> {
    let points: Vec<(u64, f64)> = outcome
        .trace
        .checkpoints
        .iter()
        .filter_map(|c| Some((axis.key(c)?, c.rel_err_sq?)))
        .collect();
    let Some(&first) = points.first() else {
        return Err("run has no checkpoints with a reference error".into());
    };
    let mut pos = 0;
    Ok(grid
        .iter()
        .map(|&g| {
            while pos + 1 < points.len() && points[pos + 1].0 <= g {
                pos += 1;
            }
            if points[pos].0 <= g { points[pos].1 } else { first.1 }
        })
        .collect())
}

pub(crate) struct Plan<'a> {
    pub axis: Axis,
    pub grid: Vec<u64>,
    pub stages: &'a (dyn Fn(Algorithm, &SolverConfig) -> Vec<Stage> + Sync),
    /// Overrides `spec.max_iters` per algorithm.
    pub budget: &'a (dyn Fn(Algorithm) -> u64 + Sync),
}

fn run_trial(spec: &ExperimentSpec, plan: &Plan<'_>, trial: usize) -> rankz_core::Result<TrialRun> {
    let problem_seed = spec.problem_seed(trial);
    let problem: LsProblem = spec.ensemble.generate_with_seed(problem_seed)?;
    let x_o = problem.x_o.as_deref().ok_or(rankz_core::Error::SvdFailure)?;
    let x_o_sq: f64 = x_o.iter().map(|v| v * v).sum();

    let record = if spec.coupled {
        Some(StepRecord::sample(&problem.a, record_seed(problem_seed), spec.max_iters as usize)?)
    } else {
        None
    };
    let mut runs = Vec::with_capacity(spec.algorithms.len());
    for &algorithm in &spec.algorithms {
        let seed = solver_seed(problem_seed, algorithm);
        let config = SolverConfig { max_iters: (plan.budget)(algorithm), ..spec.solver_config(seed) };
        let shared = record.as_ref().filter(|_| matches!(algorithm, Algorithm::Cd | Algorithm::Ek));
        let outcome = solve_stages(&problem, &config, &(plan.stages)(algorithm, &config), shared)?;
        let samples = sample(&outcome, plan.axis, &plan.grid).map_err(rankz_core::Error::InvalidConfig)?;
        runs.push(AlgoRun { algorithm, seed, outcome, samples });
    }
    let bounds = if spec.bounds {
        Some(bound_constants(&problem).map_err(|e| match e {
            BenchError::Core(c) => c,
            other => rankz_core::Error::InvalidConfig(other.to_string()),
        })?)
    } else {
        None
    };
    Ok(TrialRun { trial, problem_seed, runs, bounds, x_o_sq })
}

pub(crate) fn execute(spec: &ExperimentSpec, plan: Plan<'_>) -> Result<ExperimentResult> {
    spec.validate()?;
    let outcomes: Vec<rankz_core::Result<TrialRun>> =
        (0..spec.ensemble.trials).into_par_iter().map(|t| run_trial(spec, &plan, t)).collect();
    let mut trials = Vec::with_capacity(outcomes.len());
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        trials.push(outcome.map_err(|source| BenchError::Trial { trial, source })?);
    }

    let count = trials.len() as f64;
    let curves = spec
        .algorithms
        .iter()
        .enumerate()
        .map(|(a, alg)| {
            let rmse = (0..plan.grid.len())
                .map(|g| (trials.iter().map(|t| t.runs[a].samples[g]).sum::<f64>() / count).sqrt())
                .collect();
            RmseCurve { label: alg.label().to_string(), iterations: plan.grid.clone(), rmse }
        })
        .collect();

    let bounds = if spec.bounds {
        spec.algorithms
            .iter()
            .filter_map(|&alg| {
                let kind = match alg {
                    Algorithm::Cd => BoundKind::CdSolution,
                    Algorithm::Ek => BoundKind::EkShape,
                    Algorithm::K => BoundKind::Kaczmarz,
                    Algorithm::CdK | Algorithm::CdEkK => return None,
                };
                let values = plan
                    .grid
                    .iter()
                    .map(|&k| {
                        let mean = trials
                            .iter()
                            .map(|t| {
                                let c = t.bounds.expect("bounds requested");
                                let scale = if kind.is_shape_only() { 1.0 } else { t.x_o_sq };
                                c.at(kind, k) / scale
                            })
                            .sum::<f64>()
                            / count;
                        mean.sqrt()
                    })
                    .collect();
                Some(BoundSeries { label: alg.label().to_string(), kind, values })
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(ExperimentResult { spec: spec.clone(), axis: plan.axis, grid: plan.grid, trials, curves, bounds })
}

/// Runs every algorithm on every trial of the ensemble and averages the
/// relative squared error on the grid `0, trace_every, .., max_iters`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let stages = |alg: Algorithm, config: &SolverConfig| alg.stages(config);
    let budget = |_| spec.max_iters;
    execute(
        spec,
        Plan {
            axis: Axis::Iterations,
            grid: grid(spec.max_iters, spec.trace_every.max(1)),
            stages: &stages,
            budget: &budget,
        },
    )
}
