//! Study orchestration: configs, sweeps, table replay, fitting and contours.

pub mod config;
pub mod contour;
pub mod fit;
pub mod replay;
pub mod sweep;

pub use config::{StudyConfig, TimingMode, ToyParams, DEFAULT_FACTORS};
pub use contour::{emit_contour, Quantity};
pub use fit::{fit_from_rows, FitQuality, FitReport};
pub use replay::{
    read_factor_rows, read_published_table, replay_published, FactorRow, PublishedTable, ReplayReport, REPLAY_TOLERANCE,
};
pub use sweep::{read_sweep_csv, run_cell, run_sweep, sweep_csv_string, write_sweep_csv, SweepRow, SweepTable};
