//! Replays published iteration tables through the cost model.

use std::fmt;
use std::path::Path;

use crate::config::Cap;
use crate::cost::{equivalent_time, CostFactors};
use crate::error::HarnessError;

/// Largest accepted |recomputed − published| for two-decimal cells.
pub const REPLAY_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedCell {
    pub teq_norm: f64,
    pub n_c: usize,
    pub n_f: usize,
    pub n_s: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PublishedTableRow {
    pub nmax_f: Cap,
    pub nmax_s: Cap,
    /// `None` for a run whose coupling did not converge.
    pub cell: Option<PublishedCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PublishedTable {
    /// Name from the `# study: <name>` comment, if present.
    pub study: Option<String>,
    pub rows: Vec<PublishedTableRow>,
}

/// One row of the factor summary file.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorRow {
    pub study: String,
    pub factors: CostFactors,
    pub gamma: f64,
    pub mape_pct: f64,
    pub maxape_pct: f64,
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.display().to_string(), source })
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, want: &[&str], origin: &str) -> Result<(), HarnessError> {
    let h = rdr.headers().map_err(|e| HarnessError::Parse { path: origin.into(), line: 1, message: e.to_string() })?;
    if h.iter().collect::<Vec<_>>() != want {
        let line = h.position().map(|p| p.line() as usize).unwrap_or(1);
        return Err(HarnessError::Parse {
            path: origin.into(),
            line,
            message: format!("expected header {}", want.join(",")),
        });
    }
    Ok(())
}

const TABLE_HEADER: [&str; 6] = ["nmax_f", "nmax_s", "teq_norm", "N_c", "N_f", "N_s"];
const FACTOR_HEADER: [&str; 9] =
    ["study", "c_fix_f", "c_iter_f", "c_fix_s", "c_iter_s", "c_couple", "gamma", "mape_pct", "maxape_pct"];

pub fn parse_published_table(text: &str, origin: &str) -> Result<PublishedTable, HarnessError> {
    let study = text
        .lines()
        .filter_map(|l| l.trim().strip_prefix('#'))
        .find_map(|l| l.trim().strip_prefix("study:"))
        .map(|s| s.trim().to_string());
    let mut rdr = reader(text);
    check_header(&mut rdr, &TABLE_HEADER, origin)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| HarnessError::Parse {
            path: origin.into(),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let err = |message: String| HarnessError::Parse { path: origin.into(), line, message };
        let f = |i: usize| rec.get(i).unwrap_or("");
        let nmax_f: Cap = f(0).parse().map_err(err)?;
        let nmax_s: Cap = f(1).parse().map_err(err)?;
        let missing: Vec<bool> = (2..6).map(|i| f(i) == "-").collect();
        let cell = if missing.iter().all(|&m| m) {
            None
        } else if missing.iter().any(|&m| m) {
            return Err(err("`-` must mark the whole row".into()));
        } else {
            let int =
                |i: usize| f(i).parse::<usize>().map_err(|_| err(format!("invalid {} `{}`", TABLE_HEADER[i], f(i))));
            Some(PublishedCell {
                teq_norm: f(2).parse().map_err(|_| err(format!("invalid teq_norm `{}`", f(2))))?,
                n_c: int(3)?,
                n_f: int(4)?,
                n_s: int(5)?,
            })
        };
        rows.push(PublishedTableRow { nmax_f, nmax_s, cell });
    }
    Ok(PublishedTable { study, rows })
}

pub fn read_published_table(path: &Path) -> Result<PublishedTable, HarnessError> {
    parse_published_table(&read(path)?, &path.display().to_string())
}

pub fn parse_factor_rows(text: &str, origin: &str) -> Result<Vec<FactorRow>, HarnessError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &FACTOR_HEADER, origin)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| HarnessError::Parse {
            path: origin.into(),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut v = [0.0; 8];
        for (k, slot) in v.iter_mut().enumerate() {
            let s = rec.get(k + 1).unwrap_or("");
            *slot = s.parse().map_err(|_| HarnessError::Parse {
                path: origin.into(),
                line,
                message: format!("invalid {} `{s}`", FACTOR_HEADER[k + 1]),
            })?;
        }
        out.push(FactorRow {
            study: rec.get(0).unwrap_or("").to_string(),
            factors: CostFactors { c_fix_f: v[0], c_iter_f: v[1], c_fix_s: v[2], c_iter_s: v[3], c_couple: v[4] },
            gamma: v[5],
            mape_pct: v[6],
            maxape_pct: v[7],
        });
    }
    Ok(out)
}

pub fn read_factor_rows(path: &Path) -> Result<Vec<FactorRow>, HarnessError> {
    parse_factor_rows(&read(path)?, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRow {
    pub nmax_f: Cap,
    pub nmax_s: Cap,
    pub published: f64,
    pub recomputed: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub study: Option<String>,
    pub rows: Vec<ReplayRow>,
    /// Rows marked as not converged.
    pub skipped: usize,
    pub max_error: f64,
    pub pass: bool,
}

impl ReplayReport {
    pub fn worst(&self) -> Option<&ReplayRow> {
        self.rows.iter().max_by(|a, b| a.abs_error.total_cmp(&b.abs_error))
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReplayRow> {
        self.rows.iter().filter(|r| r.abs_error > REPLAY_TOLERANCE)
    }
}

impl fmt::Display for ReplayReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nmax_f,nmax_s,published,recomputed,abs_error")?;
        for r in &self.rows {
            writeln!(f, "{},{},{:.2},{:.4},{:.4}", r.nmax_f, r.nmax_s, r.published, r.recomputed, r.abs_error)?;
        }
        let name = self.study.as_deref().unwrap_or("table");
        write!(
            f,
            "{name}: {} rows, {} skipped, max abs error {:.4} -> {}",
            self.rows.len(),
            self.skipped,
            self.max_error,
            if self.pass { "PASS" } else { "FAIL" }
        )?;
        for r in self.failures() {
            write!(f, "\n  offending cell ({}, {}): {:.4} vs {:.2}", r.nmax_f, r.nmax_s, r.recomputed, r.published)?;
        }
        Ok(())
    }
}

/// Recomputes every normalized equivalent time from the iteration counts.
pub fn replay_published(table: &PublishedTable, factors: &CostFactors) -> Result<ReplayReport, HarnessError> {
    let reference = table
        .rows
        .iter()
        .find(|r| r.nmax_f == Cap::Unbounded && r.nmax_s == Cap::Unbounded)
        .and_then(|r| r.cell)
        .ok_or_else(|| HarnessError::Spec("table has no converged (inf, inf) reference row".into()))?;
    let t_ref = equivalent_time((reference.n_c, reference.n_f, reference.n_s), factors);
    if t_ref <= 0.0 {
        return Err(HarnessError::Spec("reference equivalent time is zero".into()));
    }
    let mut rows = Vec::new();
    let mut skipped = 0;
    for r in &table.rows {
        let Some(c) = r.cell else {
            skipped += 1;
            continue;
        };
        let recomputed = equivalent_time((c.n_c, c.n_f, c.n_s), factors) / t_ref;
        rows.push(ReplayRow {
            nmax_f: r.nmax_f,
            nmax_s: r.nmax_s,
            published: c.teq_norm,
            recomputed,
            abs_error: (recomputed - c.teq_norm).abs(),
        });
    }
    let max_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    Ok(ReplayReport { study: table.study.clone(), rows, skipped, max_error, pass: max_error <= REPLAY_TOLERANCE })
}
