//! Reduced 1-D flexible tube: an incompressible flow in a tube whose
//! cross-section follows independent elastic rings.
//!
//! Flow unknowns sit on a staggered grid: axial velocity `v_j` on the `n + 1`
//! faces and pressure `p_i` in the `n` cells, interleaved as
//! `[v_0, p_0, v_1, p_1, …, p_{n-1}, v_n]` so the matrix stays banded.
//! The interface nodes coincide with the faces.

use std::any::Any;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;
use crate::field::{FieldRole, InterfaceField};
use crate::models::CoupledProblem;
use crate::subproblem::{BlackBoxSolver, InnerMethod, NonlinearSystem, Preconditioner, SolverId};

#[derive(Debug, Clone, PartialEq)]
pub struct TubeParams {
    pub length: f64,
    pub r0: f64,
    pub h: f64,
    pub rho_f: f64,
    /// Kept for completeness; the inviscid 1-D equations do not use it.
    pub mu_f: f64,
    pub rho_s: f64,
    pub e: f64,
    pub nu: f64,
    pub cells: usize,
    pub dt: f64,
    pub steps: usize,
    pub pulse_pressure: f64,
    pub pulse_end: f64,
    pub outlet_pressure: f64,
    /// Cubic ring stiffening `κ₃` in Pa/m³.
    pub kappa3: f64,
    /// Drops the ring inertia (quasi-static solid).
    pub static_solid: bool,
}

/// Cubic stiffening giving three Newton iterations in the first solid call
/// of the default setup.
pub const DEFAULT_KAPPA3: f64 = 2.0e12;

impl Default for TubeParams {
    fn default() -> Self {
        Self {
            length: 0.05,
            r0: 0.005,
            h: 0.001,
            rho_f: 1000.0,
            mu_f: 0.003,
            rho_s: 1200.0,
            e: 3.0e5,
            nu: 0.3,
            cells: 100,
            dt: 1e-4,
            steps: 100,
            pulse_pressure: 1333.2,
            pulse_end: 0.003,
            outlet_pressure: 0.0,
            kappa3: DEFAULT_KAPPA3,
            static_solid: false,
        }
    }
}

impl TubeParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("length", self.length),
            ("r0", self.r0),
            ("h", self.h),
            ("rho_f", self.rho_f),
            ("mu_f", self.mu_f),
            ("rho_s", self.rho_s),
            ("E", self.e),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::Construction(format!("{name} must be positive")));
            }
        }
        if !(0.0..0.5).contains(&self.nu) {
            return Err(ModelError::Construction("nu must lie in [0, 0.5)".into()));
        }
        if !(self.kappa3 >= 0.0 && self.kappa3.is_finite()) {
            return Err(ModelError::Construction("kappa3 must be non-negative".into()));
        }
        if self.cells < 2 {
            return Err(ModelError::Construction("the tube needs at least 2 cells".into()));
        }
        Ok(())
    }

    /// Linear ring stiffness `E h / (r0² (1 − ν²))` in Pa/m.
    pub fn k1(&self) -> f64 {
        self.e * self.h / (self.r0 * self.r0 * (1.0 - self.nu * self.nu))
    }

    pub fn dx(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn nodes(&self) -> usize {
        self.cells + 1
    }

    pub fn reference_area(&self) -> f64 {
        PI * self.r0 * self.r0
    }

    /// Inlet pressure at the end of time step `step` (0-based).
    pub fn inlet_pressure(&self, step: usize) -> f64 {
        let t = (step + 1) as f64 * self.dt;
        // guard against 30 · 1e-4 landing a hair below 0.003
        if t < self.pulse_end - 1e-9 * self.dt {
            self.pulse_pressure
        } else {
            0.0
        }
    }

    pub fn face_areas(&self, d: &[f64]) -> Result<Vec<f64>, ModelError> {
        d.iter()
            .enumerate()
            .map(|(j, &dj)| {
                let r = self.r0 + dj;
                if r > 0.0 {
                    Ok(PI * r * r)
                } else {
                    Err(ModelError::Geometry { cell: j, area: -PI * r * r })
                }
            })
            .collect()
    }

    pub fn cell_areas(&self, d: &[f64]) -> Result<Vec<f64>, ModelError> {
        d.windows(2)
            .enumerate()
            .map(|(i, w)| {
                let r = self.r0 + 0.5 * (w[0] + w[1]);
                if r > 0.0 {
                    Ok(PI * r * r)
                } else {
                    Err(ModelError::Geometry { cell: i, area: -PI * r * r })
                }
            })
            .collect()
    }
}

fn iv(j: usize) -> usize {
    2 * j
}

fn ip(i: usize) -> usize {
    2 * i + 1
}

/// Flow solver: backward Euler, first-order upwind convection, Picard
/// linearization of the convective velocity.
#[derive(Debug, Clone)]
pub struct TubeFlow {
    params: TubeParams,
    step: usize,
    cell_area_old: Vec<f64>,
    face_area_old: Vec<f64>,
    v_old: Vec<f64>,
    u: DVector<f64>,
    committed_cells: Vec<f64>,
    mass_defects: Vec<f64>,
}

impl TubeFlow {
    pub fn new(params: TubeParams) -> Result<Self, ModelError> {
        params.validate()?;
        let n = params.cells;
        let rest = vec![0.0; n + 1];
        let cells = params.cell_areas(&rest)?;
        let faces = params.face_areas(&rest)?;
        Ok(Self {
            step: 0,
            cell_area_old: cells.clone(),
            face_area_old: faces,
            v_old: vec![0.0; n + 1],
            u: DVector::zeros(2 * n + 1),
            committed_cells: cells,
            mass_defects: Vec::new(),
            params,
        })
    }

    pub fn params(&self) -> &TubeParams {
        &self.params
    }

    pub fn velocities(&self) -> Vec<f64> {
        (0..=self.params.cells).map(|j| self.u[iv(j)]).collect()
    }

    pub fn pressures(&self) -> Vec<f64> {
        (0..self.params.cells).map(|i| self.u[ip(i)]).collect()
    }

    /// Cell areas recomputed from the displacement of the latest committed step.
    pub fn committed_cell_areas(&self) -> &[f64] {
        &self.committed_cells
    }

    /// `|ΔV + dt (outflux − influx)|` in m³ for every committed step.
    pub fn mass_defects(&self) -> &[f64] {
        &self.mass_defects
    }

    /// Rest volume of the tube, the scale for [`Self::mass_defects`].
    pub fn volume_scale(&self) -> f64 {
        self.params.reference_area() * self.params.length
    }

    fn check_len(&self, field: &InterfaceField) -> Result<(), ModelError> {
        let n = self.params.nodes();
        if field.len() != n {
            return Err(ModelError::InterfaceLength { expected: n, got: field.len() });
        }
        Ok(())
    }
}

struct TubeFlowSystem<'a> {
    flow: &'a TubeFlow,
    faces: Vec<f64>,
    b: DVector<f64>,
}

impl NonlinearSystem for TubeFlowSystem<'_> {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn matrix(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let p = &self.flow.params;
        let n = p.cells;
        let af = &self.faces;
        let sc = p.dt / (p.reference_area() * p.dx());
        let a_ref = p.reference_area();
        let mut m = DMatrix::zeros(2 * n + 1, 2 * n + 1);
        for i in 0..n {
            m[(ip(i), iv(i + 1))] = sc * af[i + 1];
            m[(ip(i), iv(i))] = -sc * af[i];
        }
        for j in 0..=n {
            let r = iv(j);
            let frac = if j == 0 || j == n { 0.5 } else { 1.0 };
            m[(r, r)] += frac * af[j] / a_ref;
            let pc = sc * af[j] / p.rho_f;
            if j > 0 {
                m[(r, ip(j - 1))] -= pc;
            }
            if j < n {
                m[(r, ip(j))] += pc;
            }
        }
        // Convective fluxes at cell centres, plus the boundary faces.
        for i in 0..n {
            let ubar = 0.5 * (u[iv(i)] + u[iv(i + 1)]);
            let up = if ubar >= 0.0 { i } else { i + 1 };
            let c = sc * ubar * af[up];
            // F_i leaves CV i, enters CV i+1
            m[(iv(i), iv(up))] += c;
            m[(iv(i + 1), iv(up))] -= c;
        }
        m[(iv(0), iv(0))] -= sc * u[iv(0)] * af[0];
        m[(iv(n), iv(n))] += sc * u[iv(n)] * af[n];
        m
    }

    fn rhs(&self) -> &DVector<f64> {
        &self.b
    }
}

impl BlackBoxSolver for TubeFlow {
    fn id(&self) -> SolverId {
        SolverId::Flow
    }

    fn method(&self) -> InnerMethod {
        InnerMethod::FixedPoint(Preconditioner::FullA)
    }

    fn interface_len(&self) -> usize {
        self.params.nodes()
    }

    fn system(&self, coupling: &InterfaceField) -> Result<Box<dyn NonlinearSystem + '_>, ModelError> {
        self.check_len(coupling)?;
        let p = &self.params;
        let n = p.cells;
        let d = coupling.values().as_slice();
        let faces = p.face_areas(d)?;
        let cells = p.cell_areas(d)?;
        let a_ref = p.reference_area();
        let sc = p.dt / (a_ref * p.dx());
        let mut b = DVector::zeros(2 * n + 1);
        for i in 0..n {
            b[ip(i)] = -(cells[i] - self.cell_area_old[i]) / a_ref;
        }
        for j in 0..=n {
            let frac = if j == 0 || j == n { 0.5 } else { 1.0 };
            b[iv(j)] = frac * self.face_area_old[j] * self.v_old[j] / a_ref;
        }
        b[iv(0)] += sc * faces[0] / p.rho_f * p.inlet_pressure(self.step);
        b[iv(n)] -= sc * faces[n] / p.rho_f * p.outlet_pressure;
        Ok(Box::new(TubeFlowSystem { flow: self, faces, b }))
    }

    fn state(&self) -> &DVector<f64> {
        &self.u
    }

    fn set_state(&mut self, u: DVector<f64>) {
        self.u = u;
    }

    fn output(&self, u: &DVector<f64>, coupling: &InterfaceField) -> Result<InterfaceField, ModelError> {
        self.check_len(coupling)?;
        let n = self.params.cells;
        let mut t = DVector::zeros(n + 1);
        t[0] = self.params.inlet_pressure(self.step);
        t[n] = self.params.outlet_pressure;
        for j in 1..n {
            t[j] = 0.5 * (u[ip(j - 1)] + u[ip(j)]);
        }
        InterfaceField::new(t, FieldRole::Traction).map_err(|e| ModelError::Construction(e.to_string()))
    }

    fn begin_step(&mut self, step: usize) {
        self.step = step;
    }

    fn commit_step(&mut self, last_input: &InterfaceField) {
        let p = &self.params;
        let d = last_input.values().as_slice();
        let (Ok(cells), Ok(faces)) = (p.cell_areas(d), p.face_areas(d)) else {
            return;
        };
        let n = p.cells;
        let dv: f64 = cells.iter().zip(&self.cell_area_old).map(|(a, o)| (a - o) * p.dx()).sum();
        let net = faces[n] * self.u[iv(n)] - faces[0] * self.u[iv(0)];
        self.mass_defects.push((dv + p.dt * net).abs());
        self.v_old = self.velocities();
        self.cell_area_old = cells.clone();
        self.face_area_old = faces;
        self.committed_cells = cells;
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Solid solver: independent rings `ρ_s h d̈ + k₁ d + κ₃ d³ = p`, clamped at
/// both tube ends, backward Euler in time. Rows are divided by `k₁` so the
/// residual is measured in meters.
#[derive(Debug, Clone)]
pub struct TubeSolid {
    params: TubeParams,
    d_old: DVector<f64>,
    w_old: DVector<f64>,
    u: DVector<f64>,
}

impl TubeSolid {
    pub fn new(params: TubeParams) -> Result<Self, ModelError> {
        params.validate()?;
        let n = params.nodes();
        Ok(Self { d_old: DVector::zeros(n), w_old: DVector::zeros(n), u: DVector::zeros(n), params })
    }

    pub fn params(&self) -> &TubeParams {
        &self.params
    }

    /// Kinetic plus linear elastic ring energy per unit area, at the last
    /// committed step.
    pub fn energy(&self) -> f64 {
        let p = &self.params;
        let m = p.rho_s * p.h;
        self.d_old
            .iter()
            .zip(self.w_old.iter())
            .map(|(d, w)| 0.5 * m * w * w + 0.5 * p.k1() * d * d + 0.25 * p.kappa3 * d.powi(4))
            .sum()
    }

    fn inertia(&self) -> f64 {
        if self.params.static_solid {
            0.0
        } else {
            self.params.rho_s * self.params.h / (self.params.dt * self.params.dt)
        }
    }
}

struct TubeSolidSystem {
    k1: f64,
    inertia: f64,
    kappa3: f64,
    b: DVector<f64>,
}

impl TubeSolidSystem {
    fn diag(&self, u: &DVector<f64>, cubic: f64) -> DMatrix<f64> {
        let n = self.b.len();
        DMatrix::from_fn(n, n, |r, c| {
            if r != c {
                0.0
            } else if r == 0 || r == n - 1 {
                1.0
            } else {
                (self.inertia + self.k1 + cubic * self.kappa3 * u[r] * u[r]) / self.k1
            }
        })
    }
}

impl NonlinearSystem for TubeSolidSystem {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn matrix(&self, u: &DVector<f64>) -> DMatrix<f64> {
        self.diag(u, 1.0)
    }

    fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    fn tangent(&self, u: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.diag(u, 3.0))
    }
}

impl BlackBoxSolver for TubeSolid {
    fn id(&self) -> SolverId {
        SolverId::Solid
    }

    fn method(&self) -> InnerMethod {
        InnerMethod::Newton
    }

    fn interface_len(&self) -> usize {
        self.params.nodes()
    }

    fn system(&self, coupling: &InterfaceField) -> Result<Box<dyn NonlinearSystem + '_>, ModelError> {
        let n = self.params.nodes();
        if coupling.len() != n {
            return Err(ModelError::InterfaceLength { expected: n, got: coupling.len() });
        }
        let k1 = self.params.k1();
        let inertia = self.inertia();
        let t = coupling.values();
        let mut b = DVector::zeros(n);
        for j in 1..n - 1 {
            b[j] = (t[j] + inertia * (self.d_old[j] + self.params.dt * self.w_old[j])) / k1;
        }
        Ok(Box::new(TubeSolidSystem { k1, inertia, kappa3: self.params.kappa3, b }))
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

    fn commit_step(&mut self, _last_input: &InterfaceField) {
        self.w_old = (&self.u - &self.d_old) / self.params.dt;
        self.d_old = self.u.clone();
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

pub fn tube_problem(params: TubeParams) -> Result<CoupledProblem, ModelError> {
    let nodes = params.nodes();
    let steps = params.steps;
    Ok(CoupledProblem {
        name: "tube".into(),
        flow: Box::new(TubeFlow::new(params.clone())?),
        solid: Box::new(TubeSolid::new(params)?),
        steps,
        initial_displacement: InterfaceField::zeros(nodes, FieldRole::Displacement),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Cap;
    use crate::subproblem::{call_solver, newton_drive, SolverCallInput};

    fn small(cells: usize) -> TubeParams {
        TubeParams { cells, ..Default::default() }
    }

    #[test]
    fn ring_stiffness_and_static_deflection() {
        let p = TubeParams { kappa3: 0.0, static_solid: true, cells: 10, ..Default::default() };
        let want = 1333.2 * 0.005_f64.powi(2) * (1.0 - 0.09) / (3.0e5 * 0.001);
        assert!((want - 1.0110e-4).abs() < 1e-8);
        let mut solid = TubeSolid::new(p.clone()).unwrap();
        let t = InterfaceField::new(DVector::from_element(11, 1333.2), FieldRole::Traction).unwrap();
        let (d, _) = call_solver(&mut solid, &t, 1e-14, Cap::Unbounded, 1).unwrap();
        assert_eq!(d.values()[0], 0.0);
        assert_eq!(d.values()[10], 0.0);
        for j in 1..10 {
            assert!((d.values()[j] - want).abs() < 1e-12 * want.max(1.0));
        }
    }

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn static_cubic_ring_matches_bisection() {
        for kappa3 in [1e12, 5e14, 1e16] {
            let p = TubeParams { kappa3, static_solid: true, cells: 4, ..Default::default() };
            let k1 = p.k1();
            let root = bisect(|x| k1 * x + kappa3 * x.powi(3) - 1333.2, 0.0, 1.0);
            let mut solid = TubeSolid::new(p).unwrap();
            let t = InterfaceField::new(DVector::from_element(5, 1333.2), FieldRole::Traction).unwrap();
            let (d, rep) = call_solver(&mut solid, &t, 1e-18, Cap::Unbounded, 1).unwrap();
            assert!(rep.converged);
            assert!((d.values()[2] - root).abs() < 1e-12, "kappa3 {kappa3}");
        }
    }

    #[test]
    fn unloaded_rings_stay_at_rest() {
        let mut solid = TubeSolid::new(small(8)).unwrap();
        let t = InterfaceField::zeros(9, FieldRole::Traction);
        let (d, rep) = call_solver(&mut solid, &t, 1e-12, Cap::Unbounded, 1).unwrap();
        assert!(d.values().iter().all(|&x| x == 0.0));
        assert!(rep.converged_on_first);
    }

    #[test]
    fn rest_state_flow_is_zero() {
        let p = TubeParams { pulse_pressure: 0.0, cells: 10, ..Default::default() };
        let mut flow = TubeFlow::new(p).unwrap();
        flow.begin_step(0);
        let d = InterfaceField::zeros(11, FieldRole::Displacement);
        let (t, rep) = call_solver(&mut flow, &d, 1e-12, Cap::Unbounded, 1).unwrap();
        assert!(rep.converged_on_first);
        assert!(t.values().iter().all(|&x| x == 0.0));
        assert!(flow.state().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn uniform_pressure_gives_uniform_velocity() {
        let p = TubeParams {
            pulse_pressure: 800.0,
            pulse_end: 1.0,
            outlet_pressure: 800.0,
            cells: 12,
            ..Default::default()
        };
        let mut flow = TubeFlow::new(p).unwrap();
        let d = InterfaceField::zeros(13, FieldRole::Displacement);
        for step in 0..3 {
            flow.begin_step(step);
            call_solver(&mut flow, &d, 1e-13, Cap::Unbounded, 1).unwrap();
            flow.commit_step(&d);
        }
        let v = flow.velocities();
        assert!(v.iter().all(|x| (x - v[0]).abs() < 1e-12));
        assert!(flow.pressures().iter().all(|x| (x - 800.0).abs() < 1e-8));
    }

    #[test]
    fn pulse_passes_through_to_inlet_traction() {
        let p = small(20);
        let mut flow = TubeFlow::new(p).unwrap();
        flow.begin_step(0);
        let d = InterfaceField::zeros(21, FieldRole::Displacement);
        let (t, rep) = call_solver(&mut flow, &d, 1e-10, Cap::Unbounded, 1).unwrap();
        assert!(rep.converged);
        assert!((t.values()[0] - 1333.2).abs() < 1e-10);
        // rigid tube: the fluid column accelerates as a whole, pressure falls linearly
        let pr = flow.pressures();
        assert!(pr.windows(2).all(|w| w[0] > w[1]));
        assert!(t.values()[10] > 0.0 && t.values()[10] < 1333.2);
    }

    #[test]
    fn pulse_switches_off_after_duration() {
        let p = TubeParams::default();
        assert_eq!(p.inlet_pressure(0), 1333.2);
        assert_eq!(p.inlet_pressure(28), 1333.2);
        assert_eq!(p.inlet_pressure(29), 0.0);
        assert_eq!(p.inlet_pressure(99), 0.0);
    }

    #[test]
    fn collapsed_radius_is_a_geometry_error() {
        let flow = TubeFlow::new(small(4)).unwrap();
        let mut d = DVector::zeros(5);
        d[2] = -0.006;
        let d = InterfaceField::displacement(d).unwrap();
        assert!(matches!(flow.system(&d), Err(ModelError::Geometry { .. })));
    }

    #[test]
    fn interface_length_is_checked() {
        let flow = TubeFlow::new(small(4)).unwrap();
        let d = InterfaceField::zeros(3, FieldRole::Displacement);
        assert!(matches!(flow.system(&d), Err(ModelError::InterfaceLength { expected: 5, got: 3 })));
    }

    #[test]
    fn default_kappa3_gives_three_newton_iterations_on_first_solid_call() {
        let p = TubeParams::default();
        let mut flow = TubeFlow::new(p.clone()).unwrap();
        let solid = TubeSolid::new(p.clone()).unwrap();
        flow.begin_step(0);
        let d = InterfaceField::zeros(p.nodes(), FieldRole::Displacement);
        let (t, _) = call_solver(&mut flow, &d, 1e-10, Cap::Unbounded, 1).unwrap();
        let sys = solid.system(&t).unwrap();
        let (_, rep) =
            newton_drive(&*sys, &SolverCallInput::new(DVector::zeros(p.nodes()), 1e-12, Cap::Unbounded)).unwrap();
        assert_eq!(rep.inner_iters, 3, "history {:?}", rep.residual_history);
    }

    #[test]
    fn free_ring_energy_does_not_grow() {
        let p = TubeParams { kappa3: 0.0, cells: 6, ..Default::default() };
        let mut solid = TubeSolid::new(p).unwrap();
        let load = InterfaceField::new(DVector::from_element(7, 1333.2), FieldRole::Traction).unwrap();
        let free = InterfaceField::zeros(7, FieldRole::Traction);
        for step in 0..5 {
            solid.begin_step(step);
            call_solver(&mut solid, &load, 1e-16, Cap::Unbounded, 1).unwrap();
            solid.commit_step(&load);
        }
        let mut e = solid.energy();
        assert!(e > 0.0);
        for step in 5..200 {
            solid.begin_step(step);
            call_solver(&mut solid, &free, 1e-16, Cap::Unbounded, 1).unwrap();
            solid.commit_step(&free);
            let next = solid.energy();
            assert!(next <= e * (1.0 + 1e-12), "step {step}: {next} > {e}");
            e = next;
        }
    }
}
