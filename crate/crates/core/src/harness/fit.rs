//! Cost-factor regression from sweep timings.

use std::fmt;

use crate::cost::{equivalent_time, fit_coupling_cost, fit_solver_cost, mape_maxape, rmse, rrmse, CostFactors};
use crate::error::{CostError, HarnessError};
use crate::harness::sweep::SweepRow;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitQuality {
    pub rmse: f64,
    pub rrmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub factors: CostFactors,
    pub samples: usize,
    pub flow: FitQuality,
    pub solid: FitQuality,
    pub coupling: FitQuality,
    /// Equivalent vs actual total run time, as fractions.
    pub mape: f64,
    pub maxape: f64,
}

fn quality(actual: &[f64], fitted: &[f64]) -> Result<FitQuality, CostError> {
    Ok(FitQuality { rmse: rmse(actual, fitted)?, rrmse: rrmse(actual, fitted)? })
}

/// Fits flow, solid and coupling cost factors to the converged rows.
pub fn fit_from_rows(rows: &[SweepRow]) -> Result<FitReport, HarnessError> {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.converged).collect();
    if ok.len() < 3 {
        return Err(CostError::RankDeficient(format!(
            "only {} converged run(s); widen the sweep grid to at least 3 cells with different iteration counts",
            ok.len()
        ))
        .into());
    }
    let guidance = |e: CostError| match e {
        CostError::RankDeficient(m) => {
            CostError::RankDeficient(format!("{m}; widen the sweep grid so the counts vary independently"))
        }
        other => other,
    };
    let flow: Vec<_> = ok.iter().map(|r| (r.n_c as f64, r.n_f as f64, r.t_f)).collect();
    let solid: Vec<_> = ok.iter().map(|r| (r.n_c as f64, r.n_s as f64, r.t_s)).collect();
    let coupling: Vec<_> = ok.iter().map(|r| (r.n_c as f64, r.t_c)).collect();
    let (c_fix_f, c_iter_f) = fit_solver_cost(&flow).map_err(guidance)?;
    let (c_fix_s, c_iter_s) = fit_solver_cost(&solid).map_err(guidance)?;
    let c_couple = fit_coupling_cost(&coupling).map_err(guidance)?;
    let factors = CostFactors { c_couple, c_fix_f, c_iter_f, c_fix_s, c_iter_s };

    let pred3 = |s: &[(f64, f64, f64)], a: f64, b: f64| -> (Vec<f64>, Vec<f64>) {
        (s.iter().map(|x| x.2).collect(), s.iter().map(|x| a * x.0 + b * x.1).collect())
    };
    let (fa, ff) = pred3(&flow, c_fix_f, c_iter_f);
    let (sa, sf) = pred3(&solid, c_fix_s, c_iter_s);
    let ca: Vec<f64> = coupling.iter().map(|x| x.1).collect();
    let cf: Vec<f64> = coupling.iter().map(|x| c_couple * x.0).collect();
    let actual: Vec<f64> = ok.iter().map(|r| r.t_f + r.t_s + r.t_c).collect();
    let teq: Vec<f64> = ok.iter().map(|r| equivalent_time(r.counts(), &factors)).collect();
    let (mape, maxape) = mape_maxape(&actual, &teq)?;
    Ok(FitReport {
        factors,
        samples: ok.len(),
        flow: quality(&fa, &ff)?,
        solid: quality(&sa, &sf)?,
        coupling: quality(&ca, &cf)?,
        mape,
        maxape,
    })
}

/// Four decimals, or four significant digits for smaller values.
fn decimals4(x: f64) -> String {
    let d = if x == 0.0 || x.abs() >= 1e-1 { 4 } else { (3 - x.abs().log10().floor() as i64).max(4) as usize };
    format!("{x:.d$}")
}

impl fmt::Display for FitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.factors;
        writeln!(f, "c_fix_f,c_iter_f,c_fix_s,c_iter_s,c_couple,gamma,mape_pct,maxape_pct")?;
        let cols: Vec<String> =
            [c.c_fix_f, c.c_iter_f, c.c_fix_s, c.c_iter_s, c.c_couple, c.gamma()].into_iter().map(decimals4).collect();
        writeln!(f, "{},{:.2},{:.2}", cols.join(","), 100.0 * self.mape, 100.0 * self.maxape)?;
        writeln!(f, "fit,rmse,rrmse")?;
        for (name, q) in [("flow", self.flow), ("solid", self.solid), ("coupling", self.coupling)] {
            writeln!(f, "{name},{:.3e},{:.3e}", q.rmse, q.rrmse)?;
        }
        write!(f, "samples: {}", self.samples)
    }
}
