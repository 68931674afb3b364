//! One-unknown nonlinear pair with a closed-form fixed point.
//!
//! Flow: `(1 + u) u = 5 + d`, traction `t = u` (Picard, full `A`).
//! Solid: `(2 + d²) d = t + 1` (Newton).
//! The coupled solution is `d = 1`, `u = t = 2`.

use std::any::Any;

use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;
use crate::field::{FieldRole, InterfaceField};
use crate::models::CoupledProblem;
use crate::subproblem::{BlackBoxSolver, ClosureSystem, InnerMethod, NonlinearSystem, Preconditioner, SolverId};

#[derive(Debug, Clone)]
struct ScalarFlow {
    u: DVector<f64>,
}

#[derive(Debug, Clone)]
struct ScalarSolid {
    u: DVector<f64>,
}

fn check(field: &InterfaceField) -> Result<f64, ModelError> {
    if field.len() != 1 {
        return Err(ModelError::InterfaceLength { expected: 1, got: field.len() });
    }
    Ok(field.values()[0])
}

impl BlackBoxSolver for ScalarFlow {
    fn id(&self) -> SolverId {
        SolverId::Flow
    }

    fn method(&self) -> InnerMethod {
        InnerMethod::FixedPoint(Preconditioner::FullA)
    }

    fn interface_len(&self) -> usize {
        1
    }

    fn system(&self, coupling: &InterfaceField) -> Result<Box<dyn NonlinearSystem + '_>, ModelError> {
        let d = check(coupling)?;
        Ok(Box::new(ClosureSystem::new(DVector::from_element(1, 5.0 + d), |u| DMatrix::from_element(1, 1, 1.0 + u[0]))))
    }

    fn state(&self) -> &DVector<f64> {
        &self.u
    }

    fn set_state(&mut self, u: DVector<f64>) {
        self.u = u;
    }

    fn output(&self, u: &DVector<f64>, _coupling: &InterfaceField) -> Result<InterfaceField, ModelError> {
        InterfaceField::new(u.clone(), FieldRole::Traction).map_err(|e| ModelError::Construction(e.to_string()))
    }

    fn begin_step(&mut self, _step: usize) {}

    fn commit_step(&mut self, _last_input: &InterfaceField) {}

    fn as_any(&self) -> &dyn Any {
        self
    }
}

impl BlackBoxSolver for ScalarSolid {
    fn id(&self) -> SolverId {
        SolverId::Solid
    }

    fn method(&self) -> InnerMethod {
        InnerMethod::Newton
    }

    fn interface_len(&self) -> usize {
        1
    }

    fn system(&self, coupling: &InterfaceField) -> Result<Box<dyn NonlinearSystem + '_>, ModelError> {
        let t = check(coupling)?;
        Ok(Box::new(ClosureSystem::scalar(t + 1.0, |d| 2.0 + d * d, Some(Box::new(|d| 2.0 + 3.0 * d * d)))))
    }

    fn state(&self) -> &DVector<f64> {
        &self.u
    }

    fn set_state(&mut self, u: DVector<f64>) {
        self.u = u;
    }

    fn output(&self, u: &DVector<f64>, _coupling: &InterfaceField) -> Result<InterfaceField, ModelError> {
        InterfaceField::new(u.clone(), FieldRole::Displacement).map_err(|e| ModelError::Construction(e.to_string()))
    }

    fn begin_step(&mut self, _step: usize) {}

    fn commit_step(&mut self, _last_input: &InterfaceField) {}

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Scalar problem started from `d = 0`, `u = 0`.
pub fn scalar_problem(steps: usize) -> CoupledProblem {
    CoupledProblem {
        name: "scalar_toy".into(),
        flow: Box::new(ScalarFlow { u: DVector::zeros(1) }),
        solid: Box::new(ScalarSolid { u: DVector::zeros(1) }),
        steps,
        initial_displacement: InterfaceField::zeros(1, FieldRole::Displacement),
    }
}
