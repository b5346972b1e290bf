use std::fs;
use std::path::Path;

use rankz_bench::{run_experiment, run_fig4_protocol, ExperimentSpec, Fig4Schedule};
use rankz_core::linalg::{dist_sq, norm};
use rankz_core::mmio::write_vector;
use rankz_core::solvers::{self, fmt_f64, Status};
use rankz_core::{Algorithm, EnsembleKind, EnsembleSpec, LsProblem, SolverConfig};

use crate::{BenchArgs, Failure, GenArgs, SolveArgs, SolverArgs};

type Result<T> = std::result::Result<T, Failure>;

fn ensemble(kind: EnsembleKind, m: usize, n: usize, density: f64, r: Option<usize>, seed: u64) -> EnsembleSpec {
    EnsembleSpec { kind, m, n, density, rank: r, trials: 1, base_seed: seed }
}

pub fn gen(args: GenArgs) -> Result<()> {
    let spec = ensemble(args.kind, args.m, args.n, args.density, args.r, args.seed.seed);
    spec.validate()?;
    let problem = spec.generate_with_seed(args.seed.seed)?;
    problem.save(&args.out)?;
    println!("{}x{} {} problem, seed {}", args.m, args.n, kind_name(args.kind), args.seed.seed);
    Ok(())
}

fn kind_name(kind: EnsembleKind) -> &'static str {
    match kind {
        EnsembleKind::Dense => "dense",
        EnsembleKind::Sparse => "sparse",
        EnsembleKind::RankDeficient => "rankdef",
    }
}

fn solver_config(s: &SolverArgs, max_iters: u64, seed: u64, stop: bool) -> SolverConfig {
    SolverConfig {
        eps_cd: s.eps_cd,
        eps_k: s.eps_k,
        eps_cd_hat: s.eps_cd_hat,
        max_iters,
        check_every: s.check_every,
        seed,
        trace_every: s.trace_every,
        stop_on_criteria: stop,
    }
}

pub fn solve(args: SolveArgs) -> Result<()> {
    let config = solver_config(&args.solver, args.max_iters, args.seed.seed, true);
    config.validate()?;
    let problem = LsProblem::load(&args.problem)?;
    let outcome = solvers::solve(&problem, &config, args.algo)?;
    let last = outcome.final_checkpoint();

    let status = match outcome.status {
        Status::Converged => "converged",
        Status::Completed => "completed",
        Status::BudgetExhausted => "budget_exhausted",
        Status::RecordExhausted => "record_exhausted",
    };
    println!("algo {}", args.algo);
    println!("status {status}");
    println!("iterations {}", outcome.iterations);
    println!("k_iterations {}", outcome.k_iterations);
    println!("flops {}", outcome.flops);
    println!("check_flops {}", outcome.check_flops);
    println!("crit1 {}", fmt_f64(last.crit1));
    println!("crit2 {}", fmt_f64(last.crit2));
    println!("residual_norm {}", fmt_f64(last.x_resid_norm));
    if let Some(x_o) = &problem.x_o {
        let rel = dist_sq(&outcome.x, x_o).sqrt() / norm(x_o).max(f64::MIN_POSITIVE);
        println!("rel_err {}", fmt_f64(rel));
    }

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        write_text(&dir.join("trace.csv"), &outcome.trace.to_csv())?;
        write_vector(&dir.join("x.txt"), &outcome.x)?;
    }
    match outcome.status {
        Status::BudgetExhausted | Status::RecordExhausted => Err(Failure::Budget),
        Status::Converged | Status::Completed => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn bench_spec(args: &BenchArgs) -> Result<ExperimentSpec> {
    let seed = args.seed.seed;
    let mut spec = match (args.suite, args.kind) {
        (Some(suite), _) => suite.spec(args.scale, args.trials, seed)?,
        (None, Some(kind)) => {
            let (m, n) = (args.m.expect("required by clap"), args.n.expect("required by clap"));
            let ens = EnsembleSpec { trials: args.trials, ..ensemble(kind, m, n, args.density, args.r, seed) };
            let default_algos = if kind == EnsembleKind::RankDeficient {
                vec![Algorithm::Ek, Algorithm::CdK, Algorithm::CdEkK]
            } else {
                vec![Algorithm::Cd, Algorithm::Ek]
            };
            ExperimentSpec::new(ens, default_algos, args.max_iters.unwrap_or(40 * n as u64))
        }
        (None, None) => return Err(Failure::Input("bench needs --suite or --kind/--m/--n".into())),
    };
    if let Some(algos) = &args.algo {
        spec.algorithms = algos.clone();
    }
    if let Some(max) = args.max_iters {
        if max != spec.max_iters {
            spec.max_iters = max;
            spec.trace_every = (max / 200).max(1);
        }
    }
    let s = &args.solver;
    spec.eps_cd = s.eps_cd;
    spec.eps_k = s.eps_k;
    spec.eps_cd_hat = s.eps_cd_hat;
    spec.check_every = s.check_every;
    if let Some(t) = s.trace_every {
        spec.trace_every = t;
    }
    spec.stop_on_criteria = args.stop;
    spec.coupled = args.coupled;
    spec.bounds = args.bounds;
    if args.fig4_n.is_some() || args.fig4_ek.is_some() || args.fig4_horizon.is_some() {
        spec.fig4 = Fig4Schedule {
            cd: args.fig4_n.unwrap_or(spec.fig4.cd),
            ek: args.fig4_ek.or(spec.fig4.ek),
            horizon: args.fig4_horizon.or(spec.fig4.horizon),
        };
        if s.trace_every.is_none() {
            spec.trace_every = (spec.fig4.horizon() / 200).max(1);
        }
    }
    spec.validate()?;
    if spec.ensemble.kind == EnsembleKind::RankDeficient {
        spec.fig4.validate()?;
        for &alg in &spec.algorithms {
            rankz_bench::fig4_stages(alg, &spec.fig4)?;
        }
    }
    Ok(spec)
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let spec = bench_spec(&args)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| Failure::Input(format!("thread pool: {e}")))?;
    let result = pool.install(|| {
        if spec.ensemble.kind == EnsembleKind::RankDeficient {
            run_fig4_protocol(&spec)
        } else {
            run_experiment(&spec)
        }
    })?;

    let stem = args.suite.map(|s| s.name()).unwrap_or("experiment");
    result.write(&args.out, stem, args.long)?;
    println!(
        "{stem} {}x{}, {} trials: {stem}.csv {stem}_flops.csv {stem}.json",
        spec.ensemble.m, spec.ensemble.n, spec.ensemble.trials
    );
    let flops = result.flop_report();
    for curve in &result.curves {
        let per_iter = flops.iter().find(|f| f.label == curve.label).map(|f| f.per_iteration).unwrap_or(0.0);
        println!(
            "{:>8} final rmse {} at k={}, {} flops/iter",
            curve.label,
            fmt_f64(*curve.rmse.last().expect("grid is never empty")),
            curve.iterations.last().expect("grid is never empty"),
            fmt_f64(per_iter)
        );
    }
    Ok(())
}
