use thiserror::Error;

use crate::record::RunRecord;
use crate::subproblem::SolverId;

/// Violations of the interface-field contracts.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
}

/// Failures inside a single subproblem solve.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("singular linear system in inner iteration {iteration}")]
    Singular { iteration: usize },
    #[error("singular fixed-point preconditioner in inner iteration {iteration}")]
    SingularPreconditioner { iteration: usize },
    #[error("non-finite iterate in inner iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("no tangent available for a Newton solve")]
    MissingTangent,
    #[error("unbounded solve did not converge within {0} inner iterations")]
    IterationGuard(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A [`SolverError`] annotated with the solver that raised it.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{solver} solver: {source}")]
pub struct SolverCallError {
    pub solver: SolverId,
    #[source]
    pub source: SolverError,
}

/// Problems building a testbed model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("non-positive cross-section area {area:e} m^2 in cell {cell}")]
    Geometry { cell: usize, area: f64 },
    #[error("model construction failed: {0}")]
    Construction(String),
    #[error("interface length {got} does not match the model's {expected} nodes")]
    InterfaceLength { expected: usize, got: usize },
}

/// Errors surfaced by the coupling loop.
#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("coupling diverged in time step {step}: {reason}")]
    Diverged {
        step: usize,
        reason: String,
        /// Everything computed up to and including the failing step.
        record: Box<RunRecord>,
    },
    #[error("time step {step}: {source}")]
    Solver {
        step: usize,
        #[source]
        source: SolverCallError,
        record: Box<RunRecord>,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid coupling configuration: {0}")]
    Config(String),
}

impl CouplingError {
    /// Everything computed before the run aborted, if it got that far.
    pub fn partial_record(&self) -> Option<&RunRecord> {
        match self {
            Self::Diverged { record, .. } | Self::Solver { record, .. } => Some(record),
            _ => None,
        }
    }
}

/// Errors of the regression and error-metric routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("rank-deficient design matrix: {0}")]
    RankDeficient(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Errors of the study harness (configs, CSV files, sweeps).
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("invalid study specification: {0}")]
    Spec(String),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
