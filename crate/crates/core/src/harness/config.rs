//! Flat `key = value` study configuration.
//!
//! Blank lines and `#` comments are ignored; unknown or repeated keys are
//! errors. Iteration caps accept an integer or `inf`.
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `model` | `tube`, `linear_toy`, `scalar_toy` | `tube` |
//! | `steps` | time steps | 100 / 3 / 1 by model |
//! | `cells`, `dt`, `kappa3`, `static_solid` | tube discretization and solid | 100, 1e-4, built-in, false |
//! | `length`, `r0`, `h`, `rho_f`, `mu_f`, `rho_s`, `E`, `nu` | tube physics | reference tube |
//! | `pulse_pressure`, `pulse_end`, `outlet_pressure` | tube boundary pressures | 1333.2, 0.003, 0 |
//! | `toy_dim_f`, `toy_dim_s`, `toy_preset`, `toy_strength`, `toy_load_growth` | linear toy | 4, 4, stable, preset, 0.5 |
//! | `nmax_f`, `nmax_s` | inner iteration caps | inf |
//! | `eps_f`, `eps_s`, `eps_fil` | tolerances | 1e-9, 1e-9, 1e-12 |
//! | `reuse_q`, `omega0`, `accel` | acceleration | 0, 0.1, iqn-ils |
//! | `criterion`, `eps_c`, `relative_eps_c` | `first-residual` or `fixed-point` | first-residual |
//! | `max_coupling_iters`, `batch_size_f`, `audit_every` | loop controls | 200, 1, 0 |
//! | `grid_f`, `grid_s` | comma-separated caps for sweeps | `inf` |
//! | `workers` | sweep threads | 1 |
//! | `timings` | `measured` or `off` (zeros, for reproducible files) | measured |
//! | `c_couple`, `c_fix_f`, `c_iter_f`, `c_fix_s`, `c_iter_s` | cost factors in s | FV-FE tube |

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use crate::config::{Cap, CouplingConfig, Criterion};
use crate::cost::CostFactors;
use crate::error::{HarnessError, ModelError};
use crate::models::{scalar_problem, tube_problem, CoupledProblem, LinearToy, LinearToyPreset, ModelKind, TubeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingMode {
    Measured,
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyParams {
    pub dim_f: usize,
    pub dim_s: usize,
    pub preset: LinearToyPreset,
    /// Explicit coupling strength, overriding the preset.
    pub strength: Option<f64>,
    pub load_growth: f64,
}

impl Default for ToyParams {
    fn default() -> Self {
        Self { dim_f: 4, dim_s: 4, preset: LinearToyPreset::Stable, strength: None, load_growth: 0.5 }
    }
}

/// Everything needed to run one simulation or a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub model: ModelKind,
    pub steps: Option<usize>,
    pub tube: TubeParams,
    pub toy: ToyParams,
    pub coupling: CouplingConfig,
    pub grid_f: Vec<Cap>,
    pub grid_s: Vec<Cap>,
    pub workers: usize,
    pub timings: TimingMode,
    pub factors: CostFactors,
}

/// Cost factors of the FV-FE tube study.
pub const DEFAULT_FACTORS: CostFactors =
    CostFactors { c_couple: 0.0795, c_fix_f: 1.1542, c_iter_f: 0.1068, c_fix_s: 0.1587, c_iter_s: 0.2510 };

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Tube1D,
            steps: None,
            tube: TubeParams::default(),
            toy: ToyParams::default(),
            coupling: CouplingConfig::default(),
            grid_f: vec![Cap::Unbounded],
            grid_s: vec![Cap::Unbounded],
            workers: 1,
            timings: TimingMode::Measured,
            factors: DEFAULT_FACTORS,
        }
    }
}

fn parse_caps(v: &str) -> Result<Vec<Cap>, String> {
    let caps = v.split(',').map(Cap::from_str).collect::<Result<Vec<_>, _>>()?;
    let unique: HashSet<_> = caps.iter().collect();
    if caps.is_empty() || unique.len() != caps.len() {
        return Err("grid must be a non-empty list of distinct caps".into());
    }
    Ok(caps)
}

fn num<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true/false, got `{v}`")),
    }
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses config text; `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        let mut eps_c = 1e-10;
        let mut relative = false;
        let mut fixed_point = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| HarnessError::Parse { path: origin.to_string(), line: i + 1, message };
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(format!("expected `key = value`, got `{line}`")));
            };
            let (key, v) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(err(format!("key `{key}` given twice")));
            }
            let c = &mut cfg.coupling;
            let t = &mut cfg.tube;
            let result: Result<(), String> = (|| {
                match key {
                    "model" => cfg.model = v.parse()?,
                    "steps" => cfg.steps = Some(num(v)?),
                    "cells" => t.cells = num(v)?,
                    "dt" => t.dt = num(v)?,
                    "kappa3" => t.kappa3 = num(v)?,
                    "static_solid" => t.static_solid = boolean(v)?,
                    "length" => t.length = num(v)?,
                    "r0" => t.r0 = num(v)?,
                    "h" => t.h = num(v)?,
                    "rho_f" => t.rho_f = num(v)?,
                    "mu_f" => t.mu_f = num(v)?,
                    "rho_s" => t.rho_s = num(v)?,
                    "E" => t.e = num(v)?,
                    "nu" => t.nu = num(v)?,
                    "pulse_pressure" => t.pulse_pressure = num(v)?,
                    "pulse_end" => t.pulse_end = num(v)?,
                    "outlet_pressure" => t.outlet_pressure = num(v)?,
                    "toy_dim_f" => cfg.toy.dim_f = num(v)?,
                    "toy_dim_s" => cfg.toy.dim_s = num(v)?,
                    "toy_preset" => cfg.toy.preset = v.parse()?,
                    "toy_strength" => cfg.toy.strength = Some(num(v)?),
                    "toy_load_growth" => cfg.toy.load_growth = num(v)?,
                    "nmax_f" => c.n_max_f = v.parse()?,
                    "nmax_s" => c.n_max_s = v.parse()?,
                    "eps_f" => c.eps_f = num(v)?,
                    "eps_s" => c.eps_s = num(v)?,
                    "eps_fil" => c.eps_fil = num(v)?,
                    "reuse_q" => c.reuse_q = num(v)?,
                    "omega0" => c.omega0 = num(v)?,
                    "accel" => c.accel = v.parse()?,
                    "criterion" => {
                        fixed_point = match v {
                            "first-residual" => false,
                            "fixed-point" => true,
                            _ => return Err(format!("unknown criterion `{v}` (first-residual, fixed-point)")),
                        }
                    }
                    "eps_c" => eps_c = num(v)?,
                    "relative_eps_c" => relative = boolean(v)?,
                    "max_coupling_iters" => c.max_coupling_iters_per_step = num(v)?,
                    "batch_size_f" => c.batch_size_f = num(v)?,
                    "audit_every" => c.audit_every = num(v)?,
                    "grid_f" => cfg.grid_f = parse_caps(v)?,
                    "grid_s" => cfg.grid_s = parse_caps(v)?,
                    "workers" => {
                        cfg.workers = num(v)?;
                        if cfg.workers == 0 {
                            return Err("workers must be at least 1".into());
                        }
                    }
                    "timings" => {
                        cfg.timings = match v {
                            "measured" => TimingMode::Measured,
                            "off" => TimingMode::Off,
                            _ => return Err(format!("timings must be `measured` or `off`, got `{v}`")),
                        }
                    }
                    "c_couple" => cfg.factors.c_couple = num(v)?,
                    "c_fix_f" => cfg.factors.c_fix_f = num(v)?,
                    "c_iter_f" => cfg.factors.c_iter_f = num(v)?,
                    "c_fix_s" => cfg.factors.c_fix_s = num(v)?,
                    "c_iter_s" => cfg.factors.c_iter_s = num(v)?,
                    _ => return Err(format!("unknown key `{key}`")),
                }
                Ok(())
            })();
            result.map_err(err)?;
        }
        if fixed_point {
            cfg.coupling.criterion = Criterion::FixedPointNorm { eps_c, relative };
        }
        cfg.coupling.validate().map_err(|e| HarnessError::Spec(e.to_string()))?;
        cfg.factors.validate()?;
        Ok(cfg)
    }

    pub fn steps(&self) -> usize {
        self.steps.unwrap_or(match self.model {
            ModelKind::Tube1D => self.tube.steps,
            ModelKind::LinearToy => 3,
            ModelKind::ScalarToy => 1,
        })
    }

    /// Fresh coupled problem in its initial state.
    pub fn build_problem(&self) -> Result<CoupledProblem, ModelError> {
        let steps = self.steps();
        match self.model {
            ModelKind::Tube1D => tube_problem(TubeParams { steps, ..self.tube.clone() }),
            ModelKind::LinearToy => {
                let p = &self.toy;
                let toy = match p.strength {
                    Some(s) => LinearToy::new(p.dim_f, p.dim_s, s, steps)?,
                    None => LinearToy::preset(p.preset, p.dim_f, p.dim_s, steps)?,
                };
                Ok(toy.with_load_growth(p.load_growth).problem())
            }
            ModelKind::ScalarToy => Ok(scalar_problem(steps)),
        }
    }
}
