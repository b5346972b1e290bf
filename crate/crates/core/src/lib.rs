//! Randomized row- and column-action solvers for linear least squares.
//!
//! The crate provides the building blocks shared by the `rankz` tools:
//!
//! * [`linalg`]: dense and dual-indexed sparse matrices with cached row and
//!   column norms, plus flop-counting BLAS-1/2 kernels.
//! * [`sampling`]: seeded index sampling proportional to squared norms.
//! * [`solvers`]: coordinate descent (CD), Kaczmarz (K), extended Kaczmarz
//!   (EK) and the sequential pipelines CD+K and CD+EK+K.
//! * [`problems`]: random test ensembles and pseudoinverse reference solutions.
//! * [`mmio`]: Matrix Market and plain-text vector I/O.
//!
//! ```
//! use rankz_core::{problems, solvers::{self, SolverConfig}, Rng};
//!
//! let problem = problems::gen_dense(60, 10, &mut Rng::from_seed(7)).unwrap();
//! let config = SolverConfig { eps_cd: 1e-10, ..SolverConfig::default() };
//! let run = solvers::solve_cd(&problem, &config).unwrap();
//! assert!(run.converged());
//! ```

pub mod error;
pub mod linalg;
pub mod mmio;
pub mod problems;
pub mod sampling;
pub mod solvers;

/// Crate version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, ProblemMatrix, SparseMatrix, Storage, VecView};
pub use problems::{EnsembleKind, EnsembleSpec, LsProblem};
pub use sampling::{derive_trial_seed, IndexSampler, Rng};
pub use solvers::{Algorithm, RunTrace, SolveOutcome, SolverConfig, StepRecord};
