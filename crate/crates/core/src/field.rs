//! Interface fields and the norms used by the coupling loop.
//!
//! Two conventions coexist: subproblem convergence tests use the
//! `‖r‖₂ / √n` scaled norm ([`residual_norm`]), while coupling-side
//! quantities such as the fixed-point residual are reported as plain
//! Euclidean norms.

use nalgebra::DVector;

use crate::error::FieldError;

/// What an interface vector physically represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldRole {
    /// Radial/normal displacement in meters.
    Displacement,
    /// Normal traction in pascals.
    Traction,
}

/// A dense vector over the interface degrees of freedom, tagged with its role.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceField {
    values: DVector<f64>,
    role: FieldRole,
}

impl InterfaceField {
    pub fn new(values: DVector<f64>, role: FieldRole) -> Result<Self, FieldError> {
        if values.is_empty() {
            return Err(FieldError::InvalidInput("empty interface field".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::InvalidInput(format!("non-finite entry {} at interface dof {i}", values[i])));
        }
        Ok(Self { values, role })
    }

    pub fn from_slice(values: &[f64], role: FieldRole) -> Result<Self, FieldError> {
        Self::new(DVector::from_column_slice(values), role)
    }

    pub fn zeros(len: usize, role: FieldRole) -> Self {
        assert!(len >= 1, "interface field needs at least one dof");
        Self { values: DVector::zeros(len), role }
    }

    pub fn displacement(values: DVector<f64>) -> Result<Self, FieldError> {
        Self::new(values, FieldRole::Displacement)
    }

    pub fn traction(values: DVector<f64>) -> Result<Self, FieldError> {
        Self::new(values, FieldRole::Traction)
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn norm(&self) -> f64 {
        self.values.norm()
    }
}

/// `‖r‖₂ / √n`, the residual measure of a subproblem convergence test.
pub fn residual_norm(r: &[f64], n: usize) -> Result<f64, FieldError> {
    if r.is_empty() || n == 0 {
        return Err(FieldError::InvalidInput("empty residual vector".into()));
    }
    if n != r.len() {
        return Err(FieldError::InvalidInput(format!("residual length {} but n = {n}", r.len())));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(FieldError::InvalidInput("non-finite residual entry".into()));
    }
    Ok(euclidean(r) / (n as f64).sqrt())
}

/// Euclidean norm with scaling against overflow/underflow.
pub(crate) fn euclidean(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

fn check_pair(a: &InterfaceField, b: &InterfaceField) -> Result<(), FieldError> {
    if a.role != FieldRole::Displacement || b.role != FieldRole::Displacement {
        return Err(FieldError::ContractViolation(format!(
            "expected two displacement fields, got {:?} and {:?}",
            a.role, b.role
        )));
    }
    if a.len() != b.len() {
        return Err(FieldError::ContractViolation(format!("field lengths differ: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

/// Fixed-point residual `R = d̃ − d` of one coupling iteration.
pub fn fixed_point_residual(d_tilde: &InterfaceField, d: &InterfaceField) -> Result<DVector<f64>, FieldError> {
    check_pair(d_tilde, d)?;
    Ok(&d_tilde.values - &d.values)
}

/// `‖d − d_ref‖₂ / √n_Γ`.
pub fn deviation_from_reference(d: &InterfaceField, d_ref: &InterfaceField) -> Result<f64, FieldError> {
    check_pair(d, d_ref)?;
    let diff = &d.values - &d_ref.values;
    Ok(euclidean(diff.as_slice()) / (d.len() as f64).sqrt())
}
