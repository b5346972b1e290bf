use super::criteria::{check_stop_cd, check_stop_k, Criterion};
use super::kernels::{cd_step, kaczmarz_step};
use super::trace::{Checkpoint, Phase, RunTrace};
use super::{EkEnd, SolveOutcome, SolverConfig, Stage, StageEnd, Status, StepRecord};
use crate::error::{Error, Result};
use crate::linalg::{dist_sq, norm, ProblemMatrix};
use crate::problems::LsProblem;
use crate::sampling::{IndexSampler, Rng};

enum StageExit {
    /// Move on to the next stage.
    Next,
    /// The whole run converged.
    Converged,
    Completed,
    Budget,
    Record,
}

pub(super) struct Engine<'p> {
    a: &'p ProblemMatrix,
    b: &'p [f64],
    x_o: Option<&'p [f64]>,
    r_o: Option<&'p [f64]>,
    config: &'p SolverConfig,
    record: Option<&'p StepRecord>,
    record_pos: usize,
    rng: Rng,
    columns: Option<IndexSampler>,
    rows: Option<IndexSampler>,
    check_every: u64,
    trace_every: u64,

    x_cd: Option<Vec<f64>>,
    r_cd: Option<Vec<f64>>,
    /// EK or Kaczmarz iterate.
    x: Option<Vec<f64>>,
    /// Fixed right-hand side of the current K stage.
    k_target: Vec<f64>,
    phase: Phase,
    /// Last residual criterion value seen in a CD stage.
    last_cd_crit1: f64,

    k: u64,
    k_iters: u64,
    flops: u64,
    check_flops: u64,
    trace: RunTrace,
}

impl<'p> Engine<'p> {
    /// `b` replaces `problem.b` as the right-hand side (plain Kaczmarz on a target).
    pub(super) fn new(
        problem: &'p LsProblem,
        b: &'p [f64],
        config: &'p SolverConfig,
        record: Option<&'p StepRecord>,
    ) -> Result<Self> {
        config.validate()?;
        let a = &problem.a;
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
        }
        let (m, n) = (a.nrows(), a.ncols());
        Ok(Engine {
            a,
            b,
            x_o: problem.x_o.as_deref(),
            r_o: problem.r_o.as_deref(),
            config,
            record,
            record_pos: 0,
            rng: Rng::from_seed(config.seed),
            columns: None,
            rows: None,
            check_every: config.check_every_for(m, n),
            trace_every: config.trace_every_for(m, n),
            x_cd: None,
            r_cd: None,
            x: None,
            k_target: Vec::new(),
            phase: Phase::Cd,
            last_cd_crit1: f64::INFINITY,
            k: 0,
            k_iters: 0,
            flops: 0,
            check_flops: 0,
            trace: RunTrace::default(),
        })
    }

    pub(super) fn run(mut self, stages: &[Stage], x0: Option<Vec<f64>>) -> Result<SolveOutcome> {
        if stages.is_empty() {
            return Err(Error::InvalidConfig("empty stage plan".into()));
        }
        self.x = x0;
        let mut stage_iterations = Vec::with_capacity(stages.len());
        let mut status = Status::Completed;
        for (idx, &stage) in stages.iter().enumerate() {
            let is_final = idx + 1 == stages.len();
            let start = self.k;
            let exit = self.run_stage(stage, is_final)?;
            stage_iterations.push((stage.phase(), self.k - start));
            status = match exit {
                StageExit::Next => continue,
                StageExit::Converged => Status::Converged,
                StageExit::Completed => Status::Completed,
                StageExit::Budget => Status::BudgetExhausted,
                StageExit::Record => Status::RecordExhausted,
            };
            break;
        }
        stage_iterations.retain(|&(_, iters)| iters > 0);
        self.record_checkpoint()?;

        let x = match self.phase {
            Phase::Cd => self.x_cd.clone(),
            Phase::Ek | Phase::K => self.x.clone(),
        }
        .expect("the current phase owns an iterate");
        Ok(SolveOutcome {
            x,
            x_cd: self.x_cd,
            r_cd: self.r_cd,
            status,
            iterations: self.k,
            k_iterations: self.k_iters,
            flops: self.flops,
            check_flops: self.check_flops,
            stage_iterations,
            trace: self.trace,
        })
    }

    fn run_stage(&mut self, stage: Stage, is_final: bool) -> Result<StageExit> {
        let stop_enabled = !is_final || self.config.stop_on_criteria;
        match stage {
            Stage::Cd(_) => self.ensure_cd_state(),
            Stage::Ek(end) => {
                if end == EkEnd::ResidualCriterion && self.last_cd_crit1 <= self.config.eps_cd {
                    return Ok(StageExit::Next);
                }
                self.ensure_cd_state();
                self.x = Some(vec![0.0; self.a.ncols()]);
            }
            Stage::K(_) => {
                self.k_target = match &self.r_cd {
                    Some(r) => {
                        self.flops += r.len() as u64;
                        self.b.iter().zip(r).map(|(b, r)| b - r).collect()
                    }
                    None => self.b.to_vec(),
                };
                if self.x.is_none() {
                    self.x = Some(vec![0.0; self.a.ncols()]);
                }
            }
        }
        self.phase = stage.phase();
        // the new stage's starting iterate supersedes the previous stage's
        // final checkpoint at the same iteration count
        if self.trace.last().is_some_and(|c| c.k == self.k) {
            self.trace.checkpoints.pop();
        }
        self.record_checkpoint()?;

        let mut local = 0u64;
        loop {
            if let Some(limit) = fixed_length(stage) {
                if local == limit {
                    return Ok(if is_final { StageExit::Completed } else { StageExit::Next });
                }
            } else if stop_enabled && local.is_multiple_of(self.check_every) {
                if let Some(exit) = self.check(stage, is_final)? {
                    return Ok(exit);
                }
            }
            if self.k == self.config.max_iters {
                return Ok(if stop_enabled || fixed_length(stage).is_some() {
                    StageExit::Budget
                } else {
                    StageExit::Completed
                });
            }
            let stepped = match stage {
                Stage::Cd(_) => self.cd_iteration()?,
                Stage::Ek(_) => self.ek_iteration()?,
                Stage::K(_) => {
                    self.k_iteration()?;
                    true
                }
            };
            if !stepped {
                return Ok(StageExit::Record);
            }
            self.k += 1;
            local += 1;
            if self.k.is_multiple_of(self.trace_every) {
                self.record_checkpoint()?;
            }
        }
    }

    /// Evaluates the stage's stopping rule; `Some` ends the stage.
    fn check(&mut self, stage: Stage, is_final: bool) -> Result<Option<StageExit>> {
        let done = if is_final { StageExit::Converged } else { StageExit::Next };
        Ok(match stage {
            Stage::Cd(StageEnd::Tolerance(eps)) => {
                let c = self.crit1(eps)?;
                self.last_cd_crit1 = c.value;
                c.holds.then_some(done)
            }
            Stage::K(StageEnd::Tolerance(eps)) => self.crit2(eps)?.holds.then_some(done),
            Stage::Ek(EkEnd::BothCriteria) => {
                let residual_done = self.crit1(self.config.eps_cd)?.holds;
                (residual_done && self.crit2(self.config.eps_k)?.holds).then_some(done)
            }
            Stage::Ek(EkEnd::ResidualCriterion) => {
                if !self.crit1(self.config.eps_cd)?.holds {
                    None
                } else if self.config.stop_on_criteria && self.crit2(self.config.eps_k)?.holds {
                    Some(StageExit::Converged)
                } else {
                    Some(done)
                }
            }
            Stage::Cd(StageEnd::Iterations(_))
            | Stage::K(StageEnd::Iterations(_))
            | Stage::Ek(EkEnd::Iterations(_)) => None,
        })
    }

    fn current_x(&self) -> &[f64] {
        match self.phase {
            Phase::Cd => self.x_cd.as_deref(),
            Phase::Ek | Phase::K => self.x.as_deref(),
        }
        .expect("the current phase owns an iterate")
    }

    fn crit1(&mut self, eps: f64) -> Result<Criterion> {
        let mut flops = 0;
        let c = match self.r_cd.as_deref() {
            Some(r) => check_stop_cd(self.a, r, self.current_x(), eps, &mut flops)?,
            // plain Kaczmarz treats the system as consistent
            None => Criterion { value: 0.0, holds: true },
        };
        self.check_flops += flops;
        Ok(c)
    }

    fn crit2(&mut self, eps: f64) -> Result<Criterion> {
        let mut flops = 0;
        let c = check_stop_k(self.a, self.b, self.r_cd.as_deref(), self.current_x(), eps, &mut flops)?;
        self.check_flops += flops;
        Ok(c)
    }

    fn ensure_cd_state(&mut self) {
        if self.r_cd.is_none() {
            self.r_cd = Some(self.b.to_vec());
            self.x_cd = Some(vec![0.0; self.a.ncols()]);
        }
    }

    fn next_column(&mut self) -> Result<Option<usize>> {
        if let Some(record) = self.record {
            let Some(&j) = record.columns.get(self.record_pos) else {
                return Ok(None);
            };
            self.record_pos += 1;
            return Ok(Some(j));
        }
        if self.columns.is_none() {
            self.columns = Some(IndexSampler::new(self.a.col_sq_norms())?);
        }
        Ok(Some(self.columns.as_ref().expect("built above").draw(&mut self.rng)))
    }

    fn next_row(&mut self) -> Result<usize> {
        if self.rows.is_none() {
            self.rows = Some(IndexSampler::new(self.a.row_sq_norms())?);
        }
        Ok(self.rows.as_ref().expect("built above").draw(&mut self.rng))
    }

    /// Returns false when the column record is exhausted.
    fn cd_iteration(&mut self) -> Result<bool> {
        let Some(j) = self.next_column()? else {
            return Ok(false);
        };
        let r = self.r_cd.as_mut().expect("CD state initialized");
        let x = self.x_cd.as_mut().expect("CD state initialized");
        cd_step(self.a, r, x, j, &mut self.flops)?;
        Ok(true)
    }

    fn ek_iteration(&mut self) -> Result<bool> {
        if !self.cd_iteration()? {
            return Ok(false);
        }
        let i = self.next_row()?;
        let r = self.r_cd.as_ref().expect("CD state initialized");
        // uses the residual just updated by the CD half of the iteration
        let target = self.b[i] - r[i];
        self.flops += 1;
        let x = self.x.as_mut().expect("EK iterate initialized");
        kaczmarz_step(self.a, x, target, i, &mut self.flops)?;
        self.k_iters += 1;
        Ok(true)
    }

    fn k_iteration(&mut self) -> Result<()> {
        let i = self.next_row()?;
        let x = self.x.as_mut().expect("K iterate initialized");
        kaczmarz_step(self.a, x, self.k_target[i], i, &mut self.flops)?;
        self.k_iters += 1;
        Ok(())
    }

    fn record_checkpoint(&mut self) -> Result<()> {
        if self.trace.last().is_some_and(|c| c.k >= self.k) {
            return Ok(());
        }
        let mut scratch = 0;
        let c1 = match self.r_cd.as_deref() {
            Some(r) => check_stop_cd(self.a, r, self.current_x(), f64::INFINITY, &mut scratch)?.value,
            None => 0.0,
        };
        let c2 = check_stop_k(self.a, self.b, self.r_cd.as_deref(), self.current_x(), f64::INFINITY, &mut scratch)?
            .value;
        let x = self.current_x();
        let ax = self.a.mat_vec(x, &mut scratch)?;
        let x_resid_norm = dist_sq(self.b, &ax).sqrt();
        let r_norm = match self.r_cd.as_deref() {
            Some(r) => norm(r),
            None => dist_sq(&self.k_target, &ax).sqrt(),
        };
        let rel_err_sq = self.x_o.map(|xo| {
            let denom = norm(xo).powi(2);
            let err = dist_sq(x, xo);
            if denom > 0.0 { err / denom } else { err }
        });
        let resid_err_sq = match (self.r_cd.as_deref(), self.r_o) {
            (Some(r), Some(ro)) => Some(dist_sq(r, ro)),
            _ => None,
        };
        let identity_gap = match (self.x_cd.as_deref(), self.r_cd.as_deref()) {
            (Some(xc), Some(r)) => {
                let axc = self.a.mat_vec(xc, &mut scratch)?;
                let gap: f64 = self
                    .b
                    .iter()
                    .zip(&axc)
                    .zip(r)
                    .map(|((b, a), r)| (b - a - r).powi(2))
                    .sum();
                Some(gap.sqrt())
            }
            _ => None,
        };
        self.trace.push(Checkpoint {
            k: self.k,
            phase: self.phase,
            r_norm,
            crit1: c1,
            crit2: c2,
            rel_err_sq,
            resid_err_sq,
            x_resid_norm,
            identity_gap,
            k_iters: self.k_iters,
            flops: self.flops,
        });
        Ok(())
    }
}

fn fixed_length(stage: Stage) -> Option<u64> {
    match stage {
        Stage::Cd(StageEnd::Iterations(n)) | Stage::K(StageEnd::Iterations(n)) => Some(n),
        Stage::Ek(EkEnd::Iterations(n)) => Some(n),
        _ => None,
    }
}
