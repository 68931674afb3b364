//! Two coupled linear systems with a monolithic direct-solve oracle.
//!
//! Flow: `A_f x_f = f + s E_f d`, traction `t = E_fᵀ x_f`.
//! Solid: `A_s x_s = g + E_s t`, displacement `d̃ = E_sᵀ x_s`.
//! `E_f`, `E_s` embed the `m = min(dim_f, dim_s)` interface entries as the
//! leading unknowns. The Gauss-Seidel interface map is then affine with
//! linear part `G = s E_sᵀ A_s⁻¹ E_s E_fᵀ A_f⁻¹ E_f`.

use std::any::Any;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;
use crate::field::{FieldRole, InterfaceField};
use crate::linalg::lu_solve;
use crate::models::CoupledProblem;
use crate::subproblem::{BlackBoxSolver, ClosureSystem, InnerMethod, NonlinearSystem, Preconditioner, SolverId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearToyPreset {
    /// `ρ(G) = 0.5`.
    Stable,
    /// `ρ(G) = 2` with a negative coupling strength, mimicking added mass.
    Unstable,
    /// `s = 0`.
    Decoupled,
}

impl FromStr for LinearToyPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stable" => Ok(Self::Stable),
            "unstable" => Ok(Self::Unstable),
            "decoupled" => Ok(Self::Decoupled),
            other => Err(format!("unknown linear toy preset `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearToy {
    a_f: DMatrix<f64>,
    a_s: DMatrix<f64>,
    strength: f64,
    steps: usize,
    /// Loads scale with `1 + load_growth · step`.
    load_growth: f64,
}

fn tridiag(n: usize, diag: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |r, c| match r.abs_diff(c) {
        0 => diag,
        1 => -1.0,
        _ => 0.0,
    })
}

fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl LinearToy {
    pub fn new(dim_f: usize, dim_s: usize, strength: f64, steps: usize) -> Result<Self, ModelError> {
        if dim_f == 0 || dim_s == 0 {
            return Err(ModelError::Construction("linear toy dimensions must be positive".into()));
        }
        if !strength.is_finite() {
            return Err(ModelError::Construction("coupling strength must be finite".into()));
        }
        let toy = Self { a_f: tridiag(dim_f, 4.0), a_s: tridiag(dim_s, 3.0), strength, steps, load_growth: 0.5 };
        if lu_solve(toy.monolithic_matrix(), &DVector::zeros(dim_f + dim_s)).is_none() {
            return Err(ModelError::Construction("monolithic matrix is singular".into()));
        }
        Ok(toy)
    }

    pub fn preset(preset: LinearToyPreset, dim_f: usize, dim_s: usize, steps: usize) -> Result<Self, ModelError> {
        let unit = Self::new(dim_f, dim_s, 1.0, steps)?;
        let rho = spectral_radius(&unit.interface_map());
        let s = match preset {
            LinearToyPreset::Stable => 0.5 / rho,
            LinearToyPreset::Unstable => -2.0 / rho,
            LinearToyPreset::Decoupled => 0.0,
        };
        Self::new(dim_f, dim_s, s, steps)
    }

    pub fn with_load_growth(mut self, growth: f64) -> Self {
        self.load_growth = growth;
        self
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn interface_len(&self) -> usize {
        self.a_f.nrows().min(self.a_s.nrows())
    }

    fn embed(n: usize, m: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, m, |r, c| if r == c { 1.0 } else { 0.0 })
    }

    /// Linear part `G` of the Gauss-Seidel interface map.
    pub fn interface_map(&self) -> DMatrix<f64> {
        let m = self.interface_len();
        let ef = Self::embed(self.a_f.nrows(), m);
        let es = Self::embed(self.a_s.nrows(), m);
        let af_inv = self.a_f.clone().try_inverse().expect("A_f is SPD");
        let as_inv = self.a_s.clone().try_inverse().expect("A_s is SPD");
        es.transpose() * as_inv * &es * ef.transpose() * af_inv * &ef * self.strength
    }

    pub fn gauss_seidel_radius(&self) -> f64 {
        spectral_radius(&self.interface_map())
    }

    pub fn loads(&self, step: usize) -> (DVector<f64>, DVector<f64>) {
        let scale = 1.0 + self.load_growth * step as f64;
        let f = DVector::from_fn(self.a_f.nrows(), |i, _| scale * (1.0 + 0.1 * i as f64));
        let g = DVector::from_fn(self.a_s.nrows(), |i, _| scale * (0.5 - 0.05 * i as f64));
        (f, g)
    }

    fn monolithic_matrix(&self) -> DMatrix<f64> {
        let (nf, ns) = (self.a_f.nrows(), self.a_s.nrows());
        let m = self.interface_len();
        let mut k = DMatrix::zeros(nf + ns, nf + ns);
        k.view_mut((0, 0), (nf, nf)).copy_from(&self.a_f);
        k.view_mut((nf, nf), (ns, ns)).copy_from(&self.a_s);
        for i in 0..m {
            k[(i, nf + i)] = -self.strength;
            k[(nf + i, i)] = -1.0;
        }
        k
    }

    /// Interface displacement of the monolithic solution at `step`.
    pub fn monolithic_displacement(&self, step: usize) -> Result<InterfaceField, ModelError> {
        let (f, g) = self.loads(step);
        let rhs = DVector::from_iterator(f.len() + g.len(), f.iter().chain(g.iter()).copied());
        let x = lu_solve(self.monolithic_matrix(), &rhs)
            .ok_or_else(|| ModelError::Construction("monolithic matrix is singular".into()))?;
        let nf = self.a_f.nrows();
        let d = x.rows(nf, self.interface_len()).into_owned();
        InterfaceField::displacement(d).map_err(|e| ModelError::Construction(e.to_string()))
    }

    pub fn problem(&self) -> CoupledProblem {
        let m = self.interface_len();
        CoupledProblem {
            name: "linear_toy".into(),
            flow: Box::new(ToySolver {
                toy: self.clone(),
                id: SolverId::Flow,
                step: 0,
                u: DVector::zeros(self.a_f.nrows()),
            }),
            solid: Box::new(ToySolver {
                toy: self.clone(),
                id: SolverId::Solid,
                step: 0,
                u: DVector::zeros(self.a_s.nrows()),
            }),
            steps: self.steps,
            initial_displacement: InterfaceField::zeros(m, FieldRole::Displacement),
        }
    }
}

#[derive(Debug, Clone)]
struct ToySolver {
    toy: LinearToy,
    id: SolverId,
    step: usize,
    u: DVector<f64>,
}

impl BlackBoxSolver for ToySolver {
    fn id(&self) -> SolverId {
        self.id
    }

    fn method(&self) -> InnerMethod {
        match self.id {
            SolverId::Flow => InnerMethod::FixedPoint(Preconditioner::FullA),
            SolverId::Solid => InnerMethod::Newton,
        }
    }

    fn interface_len(&self) -> usize {
        self.toy.interface_len()
    }

    fn system(&self, coupling: &InterfaceField) -> Result<Box<dyn NonlinearSystem + '_>, ModelError> {
        let m = self.toy.interface_len();
        if coupling.len() != m {
            return Err(ModelError::InterfaceLength { expected: m, got: coupling.len() });
        }
        let (f, g) = self.toy.loads(self.step);
        let (a, mut b, scale) = match self.id {
            SolverId::Flow => (self.toy.a_f.clone(), f, self.toy.strength),
            SolverId::Solid => (self.toy.a_s.clone(), g, 1.0),
        };
        for i in 0..m {
            b[i] += scale * coupling.values()[i];
        }
        let k = a.clone();
        Ok(Box::new(ClosureSystem::new(b, move |_| a.clone()).with_tangent(move |_| k.clone())))
    }

    fn state(&self) -> &DVector<f64> {
        &self.u
    }

    fn set_state(&mut self, u: DVector<f64>) {
        self.u = u;
    }

    fn output(&self, u: &DVector<f64>, _coupling: &InterfaceField) -> Result<InterfaceField, ModelError> {
        let role = match self.id {
            SolverId::Flow => FieldRole::Traction,
            SolverId::Solid => FieldRole::Displacement,
        };
        InterfaceField::new(u.rows(0, self.toy.interface_len()).into_owned(), role)
            .map_err(|e| ModelError::Construction(e.to_string()))
    }

    fn begin_step(&mut self, step: usize) {
        self.step = step;
    }

    fn commit_step(&mut self, _last_input: &InterfaceField) {}

    fn as_any(&self) -> &dyn Any {
        self
    }
}
