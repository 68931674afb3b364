//! Parameter sweeps over the inner-iteration caps.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{Cap, CouplingConfig};
use crate::cost::{equivalent_time, CostFactors};
use crate::coupling::run_simulation;
use crate::error::HarnessError;
use crate::field::{deviation_from_reference, InterfaceField};
use crate::harness::config::{StudyConfig, TimingMode};
use crate::record::RunRecord;

pub const SWEEP_HEADER: [&str; 12] = [
    "nmax_f",
    "nmax_s",
    "converged",
    "N_c",
    "N_f",
    "N_s",
    "T_f",
    "T_s",
    "T_c",
    "teq",
    "teq_norm",
    "max_dev_vs_reference",
];

/// One line of `sweep.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub nmax_f: Cap,
    pub nmax_s: Cap,
    pub converged: bool,
    pub n_c: usize,
    pub n_f: usize,
    pub n_s: usize,
    pub t_f: f64,
    pub t_s: f64,
    pub t_c: f64,
    pub teq: Option<f64>,
    pub teq_norm: Option<f64>,
    pub max_dev: Option<f64>,
}

impl SweepRow {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.n_c, self.n_f, self.n_s)
    }

    /// CSV fields in [`SWEEP_HEADER`] order.
    pub fn fields(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        vec![
            self.nmax_f.to_string(),
            self.nmax_s.to_string(),
            self.converged.to_string(),
            self.n_c.to_string(),
            self.n_f.to_string(),
            self.n_s.to_string(),
            format!("{:?}", self.t_f),
            format!("{:?}", self.t_s),
            format!("{:?}", self.t_c),
            opt(self.teq),
            opt(self.teq_norm),
            opt(self.max_dev),
        ]
    }
}

/// Outcome of one grid cell.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub nmax_f: Cap,
    pub nmax_s: Cap,
    pub record: Option<RunRecord>,
    pub converged: bool,
    pub error: Option<String>,
}

/// Runs one simulation of `cfg` with the given caps.
pub fn run_cell(cfg: &StudyConfig, nmax_f: Cap, nmax_s: Cap) -> Result<CellRun, HarnessError> {
    let coupling = CouplingConfig { n_max_f: nmax_f, n_max_s: nmax_s, ..cfg.coupling.clone() };
    let mut problem = cfg.build_problem()?;
    Ok(match run_simulation(&mut problem, &coupling) {
        Ok(rec) => CellRun { nmax_f, nmax_s, converged: rec.converged, record: Some(rec), error: None },
        Err(e) => CellRun {
            nmax_f,
            nmax_s,
            converged: false,
            record: e.partial_record().cloned(),
            error: Some(e.to_string()),
        },
    })
}

fn max_deviation(a: &[InterfaceField], b: &[InterfaceField]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut max = 0.0_f64;
    for (x, y) in a.iter().zip(b) {
        max = max.max(deviation_from_reference(x, y).ok()?);
    }
    Some(max)
}

/// Runs every `(grid_f × grid_s)` cell on `cfg.workers` threads and returns
/// rows ordered by grid position.
pub fn run_sweep(cfg: &StudyConfig) -> Result<Vec<SweepRow>, HarnessError> {
    if cfg.grid_f.is_empty() || cfg.grid_s.is_empty() {
        return Err(HarnessError::Spec("sweep grids must be non-empty".into()));
    }
    if !cfg.grid_f.contains(&Cap::Unbounded) || !cfg.grid_s.contains(&Cap::Unbounded) {
        return Err(HarnessError::Spec("the reference cell (inf, inf) must be part of the sweep grid".into()));
    }
    let cells: Vec<(Cap, Cap)> = cfg.grid_f.iter().flat_map(|&f| cfg.grid_s.iter().map(move |&s| (f, s))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| HarnessError::Spec(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<CellRun> =
        pool.install(|| cells.par_iter().map(|&(f, s)| run_cell(cfg, f, s)).collect::<Result<Vec<_>, _>>())?;
    Ok(rows_from_runs(&runs, &cfg.factors, cfg.timings))
}

/// Turns cell runs into sweep rows normalized by the `(inf, inf)` cell.
pub fn rows_from_runs(runs: &[CellRun], factors: &CostFactors, timings: TimingMode) -> Vec<SweepRow> {
    let reference = runs
        .iter()
        .find(|r| r.nmax_f == Cap::Unbounded && r.nmax_s == Cap::Unbounded && r.converged)
        .and_then(|r| r.record.as_ref());
    let teq_ref = reference.map(|r| equivalent_time(r.counters.totals(), factors));
    runs.iter()
        .map(|run| {
            let (n_c, n_f, n_s) = run.record.as_ref().map(|r| r.counters.totals()).unwrap_or_default();
            let t = match (timings, &run.record) {
                (TimingMode::Measured, Some(r)) => r.timings,
                _ => Default::default(),
            };
            let (teq, teq_norm, max_dev) = match (&run.record, run.converged) {
                (Some(rec), true) => {
                    let teq = equivalent_time((n_c, n_f, n_s), factors);
                    let norm = teq_ref.filter(|&r| r > 0.0).map(|r| teq / r);
                    let dev = reference.and_then(|r| max_deviation(&rec.snapshots, &r.snapshots));
                    (Some(teq), norm, dev)
                }
                _ => (None, None, None),
            };
            SweepRow {
                nmax_f: run.nmax_f,
                nmax_s: run.nmax_s,
                converged: run.converged,
                n_c,
                n_f,
                n_s,
                t_f: t.flow,
                t_s: t.solid,
                t_c: t.coupling,
                teq,
                teq_norm,
                max_dev,
            }
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_csv_string(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

/// A sweep file read back, keeping the raw cell text next to the parsed row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub raw: Vec<Vec<String>>,
}

pub fn read_sweep_csv(path: &Path) -> Result<SweepTable, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
    parse_sweep_csv(&text, &path.display().to_string())
}

pub fn parse_sweep_csv(text: &str, origin: &str) -> Result<SweepTable, HarnessError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let perr = |line: usize, message: String| HarnessError::Parse { path: origin.to_string(), line, message };
    let header = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != SWEEP_HEADER {
        return Err(perr(1, format!("unexpected header, expected {}", SWEEP_HEADER.join(","))));
    }
    let mut table = SweepTable { rows: Vec::new(), raw: Vec::new() };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            perr(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let f = |i: usize| rec.get(i).unwrap_or("");
        let bad = |what: &str, v: &str| perr(line, format!("invalid {what} `{v}`"));
        let int = |i: usize| f(i).parse::<usize>().map_err(|_| bad(SWEEP_HEADER[i], f(i)));
        let real = |i: usize| f(i).parse::<f64>().map_err(|_| bad(SWEEP_HEADER[i], f(i)));
        let opt = |i: usize| if f(i).is_empty() { Ok(None) } else { real(i).map(Some) };
        table.rows.push(SweepRow {
            nmax_f: f(0).parse().map_err(|_| bad("nmax_f", f(0)))?,
            nmax_s: f(1).parse().map_err(|_| bad("nmax_s", f(1)))?,
            converged: f(2).parse().map_err(|_| bad("converged", f(2)))?,
            n_c: int(3)?,
            n_f: int(4)?,
            n_s: int(5)?,
            t_f: real(6)?,
            t_s: real(7)?,
            t_c: real(8)?,
            teq: opt(9)?,
            teq_norm: opt(10)?,
            max_dev: opt(11)?,
        });
        table.raw.push(rec.iter().map(str::to_string).collect());
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_cfg(grid: &str) -> StudyConfig {
        StudyConfig::parse(
            &format!("model = scalar_toy\nsteps = 2\neps_f = 1e-12\neps_s = 1e-12\ngrid_f = {grid}\ngrid_s = {grid}\ntimings = off"),
            "-",
        )
        .unwrap()
    }

    #[test]
    fn single_reference_cell_normalizes_to_one() {
        let rows = run_sweep(&scalar_cfg("inf")).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].teq_norm, Some(1.0));
        assert_eq!(rows[0].max_dev, Some(0.0));
    }

    #[test]
    fn missing_reference_is_rejected() {
        assert!(matches!(run_sweep(&scalar_cfg("1,2")), Err(HarnessError::Spec(_))));
    }

    #[test]
    fn csv_round_trip() {
        let rows = run_sweep(&scalar_cfg("1,inf")).unwrap();
        let text = sweep_csv_string(&rows);
        assert!(text.starts_with("nmax_f,nmax_s,converged,N_c"));
        let back = parse_sweep_csv(&text, "-").unwrap();
        assert_eq!(back.rows, rows);
        assert_eq!(back.raw[0][0], "1");
    }

    #[test]
    fn malformed_rows_report_their_line() {
        let mut text = sweep_csv_string(&run_sweep(&scalar_cfg("1,inf")).unwrap());
        text.push_str("inf,inf,maybe,1,1,1,0.0,0.0,0.0,,,\n");
        match parse_sweep_csv(&text, "s.csv") {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
    }
}
