//! Black-box subproblem solvers and their inner-iteration drivers.
//!
//! Every solver call iterates on `A(u) u = b` with `b` frozen for the whole
//! call. Each inner iteration assembles `A(u^{i-1})`, records the scaled
//! residual of `r^{i-1} = b − A(u^{i-1}) u^{i-1}`, applies the update and only
//! then checks convergence, so a converged call always performs one more
//! update than strictly necessary.

use std::any::Any;
use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::config::Cap;
use crate::error::{FieldError, ModelError, SolverCallError, SolverError};
use crate::field::{residual_norm, InterfaceField};
use crate::linalg::Lu;
use crate::record::SolverCallReport;

/// Hard stop for calls with an unbounded cap.
pub const UNBOUNDED_GUARD: usize = 10_000;

/// The discrete nonlinear system `A(u) u = b` of one solver call.
pub trait NonlinearSystem {
    fn dim(&self) -> usize;

    /// System matrix `A(u)`.
    fn matrix(&self, u: &DVector<f64>) -> DMatrix<f64>;

    /// Right-hand side; constant for the lifetime of the system.
    fn rhs(&self) -> &DVector<f64>;

    /// Newton tangent `K(u) = A(u) + (∂A/∂u) u`, if the model provides one.
    fn tangent(&self, _u: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    fn residual(&self, u: &DVector<f64>) -> DVector<f64> {
        self.rhs() - self.matrix(u) * u
    }
}

type MatrixFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// A [`NonlinearSystem`] assembled from closures.
pub struct ClosureSystem {
    dim: usize,
    matrix: MatrixFn,
    tangent: Option<MatrixFn>,
    rhs: DVector<f64>,
}

impl ClosureSystem {
    pub fn new(rhs: DVector<f64>, matrix: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self { dim: rhs.len(), matrix: Box::new(matrix), tangent: None, rhs }
    }

    pub fn with_tangent(mut self, tangent: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.tangent = Some(Box::new(tangent));
        self
    }

    /// Scalar convenience: `a(u) u = b` with optional tangent `k(u)`.
    pub fn scalar(
        b: f64,
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        k: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
    ) -> Self {
        let sys = Self::new(DVector::from_element(1, b), move |u| DMatrix::from_element(1, 1, a(u[0])));
        match k {
            Some(k) => sys.with_tangent(move |u| DMatrix::from_element(1, 1, k(u[0]))),
            None => sys,
        }
    }
}

impl NonlinearSystem for ClosureSystem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn matrix(&self, u: &DVector<f64>) -> DMatrix<f64> {
        (self.matrix)(u)
    }

    fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    fn tangent(&self, u: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.tangent.as_ref().map(|k| k(u))
    }
}

/// Approximation `M ≈ A` used by the fixed-point update `M Δu = r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    #[default]
    DiagonalOfA,
    FullA,
}

/// Inner iteration flavour of a solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerMethod {
    Newton,
    FixedPoint(Preconditioner),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverCallInput {
    /// Starting iterate, carried over from the previous call.
    pub u0: DVector<f64>,
    pub eps: f64,
    pub n_max: Cap,
    /// Convergence is checked only after every `batch_size` iterations.
    pub batch_size: usize,
}

impl SolverCallInput {
    pub fn new(u0: DVector<f64>, eps: f64, n_max: Cap) -> Self {
        Self { u0, eps, n_max, batch_size: 1 }
    }
}

fn drive(
    sys: &dyn NonlinearSystem,
    input: &SolverCallInput,
    mut increment: impl FnMut(&DVector<f64>, &DMatrix<f64>, &DVector<f64>, usize) -> Result<DVector<f64>, SolverError>,
) -> Result<(DVector<f64>, SolverCallReport), SolverError> {
    let n = sys.dim();
    if input.u0.len() != n {
        return Err(FieldError::ContractViolation(format!(
            "initial iterate has length {} but the system has {n} unknowns",
            input.u0.len()
        ))
        .into());
    }
    if input.u0.iter().any(|v| !v.is_finite()) {
        return Err(FieldError::InvalidInput("non-finite initial iterate".into()).into());
    }
    let batch = input.batch_size.max(1);
    let b = sys.rhs();
    let mut u = input.u0.clone();
    let mut history = Vec::new();
    let mut converged = false;
    let mut i = 0;
    while input.n_max.allows(i + 1) {
        i += 1;
        if input.n_max.is_unbounded() && i > UNBOUNDED_GUARD {
            return Err(SolverError::IterationGuard(UNBOUNDED_GUARD));
        }
        let a = sys.matrix(&u);
        let r = b - &a * &u;
        let norm = residual_norm(r.as_slice(), n).map_err(|_| SolverError::Divergence { iteration: i })?;
        history.push(norm);
        let du = increment(&u, &a, &r, i)?;
        u += du;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Divergence { iteration: i });
        }
        if i % batch == 0 && norm < input.eps {
            converged = true;
            break;
        }
    }
    let report = SolverCallReport {
        inner_iters: i,
        converged_on_first: history[0] < input.eps,
        converged,
        final_residual: *history.last().expect("at least one inner iteration"),
        residual_history: history,
        wall_time: Default::default(),
    };
    Ok((u, report))
}

/// Newton iterations `K(u^{i-1}) Δu = r^{i-1}`.
pub fn newton_drive(
    sys: &dyn NonlinearSystem,
    input: &SolverCallInput,
) -> Result<(DVector<f64>, SolverCallReport), SolverError> {
    drive(sys, input, |u, _a, r, i| {
        let k = sys.tangent(u).ok_or(SolverError::MissingTangent)?;
        let lu = Lu::factor(k).ok_or(SolverError::Singular { iteration: i })?;
        Ok(lu.solve(r))
    })
}

/// Picard / fixed-point iterations `M(u^{i-1}) (u^i − u^{i-1}) = r^{i-1}`.
pub fn picard_drive(
    sys: &dyn NonlinearSystem,
    input: &SolverCallInput,
    preconditioner: Preconditioner,
) -> Result<(DVector<f64>, SolverCallReport), SolverError> {
    drive(sys, input, |_u, a, r, i| match preconditioner {
        Preconditioner::FullA => {
            let lu = Lu::factor(a.clone()).ok_or(SolverError::SingularPreconditioner { iteration: i })?;
            Ok(lu.solve(r))
        }
        Preconditioner::DiagonalOfA => {
            let mut du = r.clone();
            for (k, v) in du.iter_mut().enumerate() {
                let d = a[(k, k)];
                if d == 0.0 || !d.is_finite() {
                    return Err(SolverError::SingularPreconditioner { iteration: i });
                }
                *v /= d;
            }
            Ok(du)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverId {
    Flow,
    Solid,
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverId::Flow => "flow",
            SolverId::Solid => "solid",
        })
    }
}

/// A subproblem solver seen only through its interface data.
///
/// The solver owns its unknowns and time-level history; the coupling loop
/// only hands in boundary data and reads back interface output.
pub trait BlackBoxSolver: Send {
    fn id(&self) -> SolverId;

    fn method(&self) -> InnerMethod;

    /// Number of interface degrees of freedom exchanged.
    fn interface_len(&self) -> usize;

    /// System for the current time step with `coupling` applied as boundary data.
    fn system(&self, coupling: &InterfaceField) -> Result<Box<dyn NonlinearSystem + '_>, ModelError>;

    /// Current iterate, the starting point of the next call.
    fn state(&self) -> &DVector<f64>;

    fn set_state(&mut self, u: DVector<f64>);

    /// Interface output (traction for flow, displacement for solid).
    fn output(&self, u: &DVector<f64>, coupling: &InterfaceField) -> Result<InterfaceField, ModelError>;

    /// Prepares time step `step` (0-based).
    fn begin_step(&mut self, step: usize);

    /// Accepts the current iterate as the new time level; `last_input` is the
    /// coupling data of the latest call.
    fn commit_step(&mut self, last_input: &InterfaceField);

    /// Concrete-type access for model-specific inspection.
    fn as_any(&self) -> &dyn Any;
}

/// Runs one solver call: applies the coupling data, drives the inner
/// iterations from the solver's own state, stores the new state and returns
/// the interface output.
pub fn call_solver(
    solver: &mut dyn BlackBoxSolver,
    coupling: &InterfaceField,
    eps: f64,
    n_max: Cap,
    batch_size: usize,
) -> Result<(InterfaceField, SolverCallReport), SolverCallError> {
    let id = solver.id();
    let wrap = |source: SolverError| SolverCallError { solver: id, source };
    let start = Instant::now();
    let input = SolverCallInput { u0: solver.state().clone(), eps, n_max, batch_size };
    let (u, mut report) = {
        let sys = solver.system(coupling).map_err(|e| wrap(e.into()))?;
        match solver.method() {
            InnerMethod::Newton => newton_drive(&*sys, &input),
            InnerMethod::FixedPoint(m) => picard_drive(&*sys, &input, m),
        }
        .map_err(wrap)?
    };
    let output = solver.output(&u, coupling).map_err(|e| wrap(e.into()))?;
    solver.set_state(u);
    report.wall_time = start.elapsed();
    Ok((output, report))
}

/// Scaled first residual a call with `coupling` would see, without changing
/// the solver.
pub fn first_residual(solver: &dyn BlackBoxSolver, coupling: &InterfaceField) -> Result<f64, SolverCallError> {
    let wrap = |source: SolverError| SolverCallError { solver: solver.id(), source };
    let sys = solver.system(coupling).map_err(|e| wrap(e.into()))?;
    let r = sys.residual(solver.state());
    residual_norm(r.as_slice(), r.len()).map_err(|e| wrap(e.into()))
}
