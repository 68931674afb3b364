//! Coupled testbed problems.

pub mod linear_toy;
pub mod scalar_toy;
pub mod tube;

use std::fmt;
use std::str::FromStr;

use crate::field::InterfaceField;
use crate::subproblem::BlackBoxSolver;

pub use linear_toy::{LinearToy, LinearToyPreset};
pub use scalar_toy::scalar_problem;
pub use tube::{tube_problem, TubeFlow, TubeParams, TubeSolid};

/// A flow solver, a solid solver and the time-stepping frame around them.
pub struct CoupledProblem {
    pub name: String,
    pub flow: Box<dyn BlackBoxSolver>,
    pub solid: Box<dyn BlackBoxSolver>,
    pub steps: usize,
    /// Interface displacement at `t = 0`.
    pub initial_displacement: InterfaceField,
}

impl fmt::Debug for CoupledProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoupledProblem")
            .field("name", &self.name)
            .field("steps", &self.steps)
            .field("interface_len", &self.initial_displacement.len())
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Tube1D,
    LinearToy,
    ScalarToy,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tube" | "tube1d" => Ok(Self::Tube1D),
            "linear_toy" | "linear-toy" => Ok(Self::LinearToy),
            "scalar_toy" | "scalar-toy" => Ok(Self::ScalarToy),
            other => Err(format!("unknown model `{other}` (tube, linear_toy, scalar_toy)")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tube1D => "tube",
            Self::LinearToy => "linear_toy",
            Self::ScalarToy => "scalar_toy",
        })
    }
}
