//! Deterministic fixtures shared by the benchmarks.

use fsicost_core::config::{Cap, CouplingConfig};
use fsicost_core::coupling::IqnHistory;
use fsicost_core::models::{tube_problem, TubeParams};
use fsicost_core::{CoupledProblem, InterfaceField};
use nalgebra::{DMatrix, DVector};

/// Cheap reproducible pseudo-random numbers in [-1, 1).
fn lcg(seed: &mut u64) -> f64 {
    *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
}

pub fn vector(n: usize, seed: u64) -> DVector<f64> {
    let mut s = seed;
    DVector::from_fn(n, |_, _| lcg(&mut s))
}

/// Diagonally dominant dense matrix.
pub fn dense_matrix(n: usize, seed: u64) -> DMatrix<f64> {
    let mut s = seed;
    let mut a = DMatrix::from_fn(n, n, |_, _| lcg(&mut s));
    for i in 0..n {
        a[(i, i)] += n as f64;
    }
    a
}

/// History with `cols` secant pairs of length `n`, plus a residual and a
/// solid output to update from.
pub fn iqn_fixture(n: usize, cols: usize) -> (IqnHistory, DVector<f64>, DVector<f64>) {
    let mut h = IqnHistory::new(0);
    for c in 0..cols {
        h.push(vector(n, 2 * c as u64 + 1), vector(n, 2 * c as u64 + 2), 0);
    }
    (h, vector(n, 999), vector(n, 1000))
}

pub fn short_tube(steps: usize) -> CoupledProblem {
    tube_problem(TubeParams { steps, ..TubeParams::default() }).expect("reference tube is valid")
}

pub fn tube_config(n_max_f: Cap, n_max_s: Cap) -> CouplingConfig {
    CouplingConfig {
        n_max_f,
        n_max_s,
        eps_f: 1e-10,
        eps_s: 1e-12,
        reuse_q: 5,
        eps_fil: 1e-2,
        ..CouplingConfig::default()
    }
}

pub fn zero_displacement(n: usize) -> InterfaceField {
    InterfaceField::zeros(n, fsicost_core::FieldRole::Displacement)
}
