//! Plottable grids of sweep quantities.

use std::fmt;
use std::str::FromStr;

use crate::config::Cap;
use crate::error::HarnessError;
use crate::harness::sweep::SweepTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    NC,
    NF,
    NS,
    TeqNorm,
}

impl Quantity {
    fn column(self) -> usize {
        match self {
            Quantity::NC => 3,
            Quantity::NF => 4,
            Quantity::NS => 5,
            Quantity::TeqNorm => 10,
        }
    }
}

impl FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N_c" => Ok(Self::NC),
            "N_f" => Ok(Self::NF),
            "N_s" => Ok(Self::NS),
            "teq_norm" => Ok(Self::TeqNorm),
            _ => Err(format!("unknown quantity `{s}` (N_c, N_f, N_s, teq_norm)")),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::NC => "N_c",
            Quantity::NF => "N_f",
            Quantity::NS => "N_s",
            Quantity::TeqNorm => "teq_norm",
        })
    }
}

/// Grid CSV: header row of `nmax_s` caps, first column of `nmax_f` caps,
/// cells copied verbatim from the sweep (empty for diverged runs).
pub fn emit_contour(table: &SweepTable, quantity: Quantity) -> Result<String, HarnessError> {
    let mut fs: Vec<Cap> = Vec::new();
    let mut ss: Vec<Cap> = Vec::new();
    for r in &table.rows {
        if !fs.contains(&r.nmax_f) {
            fs.push(r.nmax_f);
        }
        if !ss.contains(&r.nmax_s) {
            ss.push(r.nmax_s);
        }
    }
    if fs.is_empty() {
        return Err(HarnessError::Spec("sweep file has no rows".into()));
    }
    if table.rows.len() != fs.len() * ss.len() {
        return Err(HarnessError::Spec(format!(
            "ragged grid: {} rows for {} x {} caps",
            table.rows.len(),
            fs.len(),
            ss.len()
        )));
    }
    let mut out = String::from("nmax_f/nmax_s");
    for s in &ss {
        out.push_str(&format!(",{s}"));
    }
    out.push('\n');
    for f in &fs {
        out.push_str(&f.to_string());
        for s in &ss {
            let mut hits = table.rows.iter().zip(&table.raw).filter(|(r, _)| r.nmax_f == *f && r.nmax_s == *s);
            let (row, raw) = match (hits.next(), hits.next()) {
                (Some(x), None) => x,
                (None, _) => return Err(HarnessError::Spec(format!("ragged grid: cell ({f}, {s}) missing"))),
                (Some(_), Some(_)) => return Err(HarnessError::Spec(format!("cell ({f}, {s}) appears twice"))),
            };
            out.push(',');
            if row.converged {
                out.push_str(&raw[quantity.column()]);
            }
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sweep::parse_sweep_csv;

    const SWEEP: &str = "nmax_f,nmax_s,converged,N_c,N_f,N_s,T_f,T_s,T_c,teq,teq_norm,max_dev_vs_reference
1,1,true,12,12,12,0.0,0.0,0.0,30.0,0.75,1e-15
1,inf,false,50,50,90,0.0,0.0,0.0,,,
inf,1,true,11,30,11,0.0,0.0,0.0,35.0,0.875,0.0
inf,inf,true,10,30,25,0.0,0.0,0.0,40.0,1.0,0.0
";

    #[test]
    fn grid_shape_and_cells() {
        let t = parse_sweep_csv(SWEEP, "-").unwrap();
        let g = emit_contour(&t, Quantity::TeqNorm).unwrap();
        assert_eq!(g, "nmax_f/nmax_s,1,inf\n1,0.75,\ninf,0.875,1.0\n");
        let lines: Vec<_> = emit_contour(&t, Quantity::NC).unwrap().lines().map(String::from).collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.split(',').count() == 3));
    }

    #[test]
    fn ragged_grid_is_rejected() {
        let text: String = SWEEP.lines().take(4).map(|l| format!("{l}\n")).collect();
        let t = parse_sweep_csv(&text, "-").unwrap();
        assert!(emit_contour(&t, Quantity::NF).is_err());
    }
}
