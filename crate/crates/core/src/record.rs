//! Per-call, per-step and per-run bookkeeping.

use std::time::Duration;

use crate::field::InterfaceField;

/// Outcome of one black-box solver call.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverCallReport {
    /// Number of inner iterations `n^p` performed (always ≥ 1).
    pub inner_iters: usize,
    /// Scaled residual norm of each inner iteration, evaluated before its update.
    pub residual_history: Vec<f64>,
    /// The very first residual already met the tolerance.
    pub converged_on_first: bool,
    /// The call stopped because the tolerance was met (not because of the cap).
    pub converged: bool,
    /// Residual of the last inner iteration.
    pub final_residual: f64,
    pub wall_time: Duration,
}

/// Norms recorded at the accepted coupling iteration of a time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptedNorms {
    /// `‖R^k‖₂`.
    pub residual: f64,
    /// `‖R^k‖₂ / ‖d^k‖₂`, `+∞` when `d^k` vanishes.
    pub relative_residual: f64,
    /// Norm of the update increment that would follow the accepted iteration.
    pub increment: f64,
}

/// First residuals of both solvers re-evaluated with the accepted data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolveAudit {
    pub flow_first_residual: f64,
    pub solid_first_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeStepRecord {
    pub step: usize,
    pub coupling_iters: usize,
    pub flow_iters: usize,
    pub solid_iters: usize,
    pub converged: bool,
    /// Present for every accepted step.
    pub accepted_norms: Option<AcceptedNorms>,
    /// `‖R^k‖₂` of every coupling iteration of the step.
    pub residual_history: Vec<f64>,
    /// Number of iterations in which IQN filtering removed every column or
    /// Aitken hit its stagnation guard.
    pub fallback_events: usize,
    pub audit: Option<ResolveAudit>,
}

/// Iteration totals `N^c`, `N^f`, `N^s` plus the per-step breakdown.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IterationCounters {
    pub coupling_total: usize,
    pub flow_total: usize,
    pub solid_total: usize,
    /// `(step, coupling, flow, solid)`.
    pub per_step: Vec<(usize, usize, usize, usize)>,
}

impl IterationCounters {
    pub fn push(&mut self, step: usize, coupling: usize, flow: usize, solid: usize) {
        self.coupling_total += coupling;
        self.flow_total += flow;
        self.solid_total += solid;
        self.per_step.push((step, coupling, flow, solid));
    }

    pub fn totals(&self) -> (usize, usize, usize) {
        (self.coupling_total, self.flow_total, self.solid_total)
    }

    /// Totals agree with the per-step entries.
    pub fn is_consistent(&self) -> bool {
        let (c, f, s) = self.per_step.iter().fold((0, 0, 0), |acc, e| (acc.0 + e.1, acc.1 + e.2, acc.2 + e.3));
        (c, f, s) == self.totals()
    }
}

/// Wall-clock split of a run: flow solver, solid solver, and the remainder.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub flow: f64,
    pub solid: f64,
    pub coupling: f64,
}

impl Timings {
    pub fn total(&self) -> f64 {
        self.flow + self.solid + self.coupling
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub counters: IterationCounters,
    pub converged: bool,
    /// Step at which the run aborted, if it did.
    pub failed_step: Option<usize>,
    pub timings: Timings,
    /// Interface displacement accepted at each completed step.
    pub snapshots: Vec<InterfaceField>,
    pub steps: Vec<TimeStepRecord>,
}

impl RunRecord {
    /// Mean and maximum of the accepted `‖R^k‖`, `‖R^k‖/‖d^k‖` and increment
    /// norms; infinite relative values are skipped.
    pub fn diagnostics_summary(&self) -> DiagnosticsSummary {
        let mut acc = [Stat::default(); 3];
        for n in self.steps.iter().filter_map(|s| s.accepted_norms) {
            acc[0].add(n.residual);
            acc[1].add(n.relative_residual);
            acc[2].add(n.increment);
        }
        DiagnosticsSummary { residual: acc[0].finish(), relative_residual: acc[1].finish(), increment: acc[2].finish() }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Stat {
    sum: f64,
    max: f64,
    n: usize,
}

impl Stat {
    fn add(&mut self, x: f64) {
        if x.is_finite() {
            self.sum += x;
            self.max = self.max.max(x);
            self.n += 1;
        }
    }

    fn finish(self) -> (f64, f64) {
        if self.n == 0 {
            (f64::NAN, f64::NAN)
        } else {
            (self.sum / self.n as f64, self.max)
        }
    }
}

/// `(mean, max)` pairs of the accepted-iteration norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsSummary {
    pub residual: (f64, f64),
    pub relative_residual: (f64, f64),
    pub increment: (f64, f64),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counters_accumulate() {
        let mut c = IterationCounters::default();
        c.push(0, 3, 7, 5);
        c.push(1, 2, 2, 4);
        assert_eq!(c.totals(), (5, 9, 9));
        assert!(c.is_consistent());
        c.flow_total += 1;
        assert!(!c.is_consistent());
    }
}
