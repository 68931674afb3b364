//! Gauss-Seidel Dirichlet–Neumann coupling loop.

use std::time::{Duration, Instant};

use nalgebra::DVector;

use crate::config::{Acceleration, CouplingConfig, Criterion};
use crate::coupling::aitken::aitken_omega;
use crate::coupling::iqn::{iqn_ils_update, IqnHistory};
use crate::error::{CouplingError, SolverCallError};
use crate::field::{fixed_point_residual, InterfaceField};
use crate::models::CoupledProblem;
use crate::record::{
    AcceptedNorms, IterationCounters, ResolveAudit, RunRecord, SolverCallReport, TimeStepRecord, Timings,
};
use crate::subproblem::{call_solver, first_residual};

/// A step whose residual exceeds this multiple of its first residual is
/// declared divergent.
pub const GROWTH_LIMIT: f64 = 1e6;

/// Convergence test of one coupling iteration.
pub fn check_convergence(
    report_f: &SolverCallReport,
    report_s: &SolverCallReport,
    criterion: Criterion,
    r_k: &DVector<f64>,
    d_k: &DVector<f64>,
) -> bool {
    match criterion {
        Criterion::FirstResidual => report_f.converged_on_first && report_s.converged_on_first,
        Criterion::FixedPointNorm { eps_c, relative } => {
            let r = r_k.norm();
            if relative {
                let d = d_k.norm();
                r == 0.0 || (d > 0.0 && r / d < eps_c)
            } else {
                r < eps_c
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// The displacement `d^k` handed to the flow solver in the accepted iteration.
    pub accepted: InterfaceField,
    pub record: TimeStepRecord,
    pub flow_time: Duration,
    pub solid_time: Duration,
}

#[derive(Debug, Clone)]
pub enum StepFailureKind {
    Diverged(String),
    Solver(SolverCallError),
}

/// A time step that did not converge, with what it computed so far.
#[derive(Debug, Clone)]
pub struct StepFailure {
    pub kind: StepFailureKind,
    pub record: TimeStepRecord,
    pub flow_time: Duration,
    pub solid_time: Duration,
}

/// Runs the coupling iterations of time step `step`, starting from the
/// previous step's accepted displacement `d_start`.
#[allow(clippy::result_large_err)]
pub fn run_time_step(
    problem: &mut CoupledProblem,
    config: &CouplingConfig,
    step: usize,
    d_start: &InterfaceField,
    hist: &mut IqnHistory,
) -> Result<StepOutcome, StepFailure> {
    problem.flow.begin_step(step);
    problem.solid.begin_step(step);
    hist.evict(step);

    let mut rec = TimeStepRecord {
        step,
        coupling_iters: 0,
        flow_iters: 0,
        solid_iters: 0,
        converged: false,
        accepted_norms: None,
        residual_history: Vec::new(),
        fallback_events: 0,
        audit: None,
    };
    let (mut t_flow, mut t_solid) = (Duration::ZERO, Duration::ZERO);
    macro_rules! fail {
        ($kind:expr) => {
            return Err(StepFailure { kind: $kind, record: rec, flow_time: t_flow, solid_time: t_solid })
        };
    }

    let mut d = d_start.clone();
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut omega = config.omega0;
    let mut first_norm = None;

    for _k in 1..=config.max_coupling_iters_per_step {
        let (traction, rf) =
            match call_solver(problem.flow.as_mut(), &d, config.eps_f, config.n_max_f, config.batch_size_f) {
                Ok(x) => x,
                Err(e) => fail!(StepFailureKind::Solver(e)),
            };
        t_flow += rf.wall_time;
        rec.flow_iters += rf.inner_iters;
        let (d_tilde, rs) = match call_solver(problem.solid.as_mut(), &traction, config.eps_s, config.n_max_s, 1) {
            Ok(x) => x,
            Err(e) => {
                rec.coupling_iters += 1;
                fail!(StepFailureKind::Solver(e))
            }
        };
        t_solid += rs.wall_time;
        rec.solid_iters += rs.inner_iters;
        rec.coupling_iters += 1;

        let r = match fixed_point_residual(&d_tilde, &d) {
            Ok(r) => r,
            Err(e) => fail!(StepFailureKind::Diverged(e.to_string())),
        };
        let r_norm = r.norm();
        rec.residual_history.push(r_norm);
        let r1 = *first_norm.get_or_insert(r_norm);
        if r1 > 0.0 && r_norm > GROWTH_LIMIT * r1 {
            fail!(StepFailureKind::Diverged(format!("fixed-point residual grew from {r1:e} to {r_norm:e}")));
        }

        let dt = d_tilde.values();
        let relax = |w: f64| d.values() + &r * w;
        let d_next = match config.accel {
            Acceleration::Constant => relax(config.omega0),
            Acceleration::Aitken => {
                if let Some((r_prev, _)) = &prev {
                    let a = aitken_omega(&r, r_prev, omega);
                    if a.stagnated {
                        rec.fallback_events += 1;
                    }
                    omega = a.omega;
                }
                relax(omega)
            }
            Acceleration::IqnIls => {
                if let Some((r_prev, dt_prev)) = &prev {
                    hist.push(&r - r_prev, dt - dt_prev, step);
                }
                match iqn_ils_update(hist, &r, dt, config.eps_fil) {
                    Some(up) => up.d_next,
                    None => {
                        if !hist.is_empty() {
                            rec.fallback_events += 1;
                        }
                        relax(config.omega0)
                    }
                }
            }
        };
        let increment = (&d_next - dt).norm();

        if check_convergence(&rf, &rs, config.criterion, &r, d.values()) {
            let d_norm = d.norm();
            rec.accepted_norms = Some(AcceptedNorms {
                residual: r_norm,
                relative_residual: if d_norm > 0.0 { r_norm / d_norm } else { f64::INFINITY },
                increment,
            });
            rec.converged = true;
            if config.audit_every > 0 && step.is_multiple_of(config.audit_every) {
                let audit = first_residual(problem.flow.as_ref(), &d)
                    .and_then(|f| first_residual(problem.solid.as_ref(), &traction).map(|s| (f, s)));
                match audit {
                    Ok((f, s)) => rec.audit = Some(ResolveAudit { flow_first_residual: f, solid_first_residual: s }),
                    Err(e) => fail!(StepFailureKind::Solver(e)),
                }
            }
            problem.flow.commit_step(&d);
            problem.solid.commit_step(&traction);
            return Ok(StepOutcome { accepted: d, record: rec, flow_time: t_flow, solid_time: t_solid });
        }

        prev = Some((r, dt.clone()));
        d = match InterfaceField::displacement(d_next) {
            Ok(f) => f,
            Err(e) => fail!(StepFailureKind::Diverged(e.to_string())),
        };
    }
    let limit = config.max_coupling_iters_per_step;
    fail!(StepFailureKind::Diverged(format!("no convergence within {limit} coupling iterations")))
}

/// Runs every time step of `problem` and collects counters, timings and
/// accepted interface displacements.
pub fn run_simulation(problem: &mut CoupledProblem, config: &CouplingConfig) -> Result<RunRecord, CouplingError> {
    config.validate()?;
    let start = Instant::now();
    let mut hist = IqnHistory::new(config.reuse_q);
    let mut record = RunRecord {
        counters: IterationCounters::default(),
        converged: true,
        failed_step: None,
        timings: Timings::default(),
        snapshots: Vec::with_capacity(problem.steps),
        steps: Vec::with_capacity(problem.steps),
    };
    let (mut t_flow, mut t_solid) = (Duration::ZERO, Duration::ZERO);
    let mut d = problem.initial_displacement.clone();
    let finish = |record: &mut RunRecord, t_flow: Duration, t_solid: Duration| {
        let total = start.elapsed().as_secs_f64();
        let (f, s) = (t_flow.as_secs_f64(), t_solid.as_secs_f64());
        record.timings = Timings { flow: f, solid: s, coupling: (total - f - s).max(0.0) };
    };
    for step in 0..problem.steps {
        match run_time_step(problem, config, step, &d, &mut hist) {
            Ok(out) => {
                t_flow += out.flow_time;
                t_solid += out.solid_time;
                let r = &out.record;
                record.counters.push(step, r.coupling_iters, r.flow_iters, r.solid_iters);
                record.steps.push(out.record);
                record.snapshots.push(out.accepted.clone());
                d = out.accepted;
            }
            Err(fail) => {
                t_flow += fail.flow_time;
                t_solid += fail.solid_time;
                let r = &fail.record;
                record.counters.push(step, r.coupling_iters, r.flow_iters, r.solid_iters);
                record.steps.push(fail.record);
                record.converged = false;
                record.failed_step = Some(step);
                finish(&mut record, t_flow, t_solid);
                let record = Box::new(record);
                return Err(match fail.kind {
                    StepFailureKind::Diverged(reason) => CouplingError::Diverged { step, reason, record },
                    StepFailureKind::Solver(source) => CouplingError::Solver { step, source, record },
                });
            }
        }
    }
    finish(&mut record, t_flow, t_solid);
    Ok(record)
}
