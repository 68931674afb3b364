//! Partitioned fluid–structure-interaction coupling testbed.
//!
//! Black-box flow and solid solvers with capped inner iterations are coupled
//! by a Gauss-Seidel loop with constant, Aitken or IQN-ILS acceleration. Time
//! steps can be declared converged with the first-residual criterion or the
//! classic fixed-point-norm test. Run costs are measured in equivalent time.

pub mod config;
pub mod cost;
pub mod coupling;
pub mod error;
pub mod field;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod record;
pub mod subproblem;

pub use config::{Acceleration, Cap, CouplingConfig, Criterion};
pub use cost::{equivalent_time, literature_measure, CostFactors};
pub use coupling::{run_simulation, run_time_step, IqnHistory};
pub use error::{CostError, CouplingError, FieldError, HarnessError, ModelError, SolverCallError, SolverError};
pub use field::{deviation_from_reference, fixed_point_residual, residual_norm, FieldRole, InterfaceField};
pub use models::{CoupledProblem, ModelKind};
pub use record::{IterationCounters, RunRecord, SolverCallReport, TimeStepRecord, Timings};
pub use subproblem::{call_solver, BlackBoxSolver, NonlinearSystem, Preconditioner, SolverId};
