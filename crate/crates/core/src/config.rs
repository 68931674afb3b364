//! Coupling configuration: iteration caps, tolerances and acceleration choice.

use std::fmt;
use std::str::FromStr;

use crate::error::CouplingError;

/// Maximum number of inner iterations permitted per solver call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cap {
    Limit(usize),
    Unbounded,
}

impl Cap {
    pub fn allows(self, iteration: usize) -> bool {
        match self {
            Cap::Limit(n) => iteration <= n,
            Cap::Unbounded => true,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Cap::Unbounded)
    }
}

impl fmt::Display for Cap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cap::Limit(n) => write!(f, "{n}"),
            Cap::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for Cap {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Cap::Unbounded);
        }
        match s.parse::<usize>() {
            Ok(0) => Err("iteration cap must be at least 1".into()),
            Ok(n) => Ok(Cap::Limit(n)),
            Err(_) => Err(format!("invalid iteration cap `{s}` (integer or `inf`)")),
        }
    }
}

/// Interface update applied between coupling iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acceleration {
    /// `d^{k+1} = d^k + ω0 R^k`.
    Constant,
    /// Dynamic relaxation with the secant (Aitken) factor.
    Aitken,
    /// Interface quasi-Newton with least-squares inverse Jacobian.
    IqnIls,
}

impl FromStr for Acceleration {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" => Ok(Self::Constant),
            "aitken" => Ok(Self::Aitken),
            "iqn-ils" | "iqnils" | "iqn" => Ok(Self::IqnIls),
            other => Err(format!("unknown acceleration `{other}`")),
        }
    }
}

impl fmt::Display for Acceleration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Constant => "constant",
            Self::Aitken => "aitken",
            Self::IqnIls => "iqn-ils",
        })
    }
}

/// How the coupling loop decides a time step has converged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Both solvers met their tolerance on the first inner iteration of the
    /// latest call.
    FirstResidual,
    /// Legacy test on the fixed-point residual, `‖R^k‖₂ < eps_c`
    /// (or `‖R^k‖₂ / ‖d^k‖₂ < eps_c` when `relative`).
    FixedPointNorm { eps_c: f64, relative: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConfig {
    pub n_max_f: Cap,
    pub n_max_s: Cap,
    pub eps_f: f64,
    pub eps_s: f64,
    pub eps_fil: f64,
    pub reuse_q: usize,
    pub omega0: f64,
    pub accel: Acceleration,
    pub criterion: Criterion,
    pub max_coupling_iters_per_step: usize,
    pub batch_size_f: usize,
    /// Re-evaluate both first residuals with the accepted data every this many
    /// steps (0 disables the audit).
    pub audit_every: usize,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            n_max_f: Cap::Unbounded,
            n_max_s: Cap::Unbounded,
            eps_f: 1e-9,
            eps_s: 1e-9,
            eps_fil: 1e-12,
            reuse_q: 0,
            omega0: 0.1,
            accel: Acceleration::IqnIls,
            criterion: Criterion::FirstResidual,
            max_coupling_iters_per_step: 200,
            batch_size_f: 1,
            audit_every: 0,
        }
    }
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<(), CouplingError> {
        let bad = |m: &str| Err(CouplingError::Config(m.to_string()));
        for (cap, name) in [(self.n_max_f, "n_max_f"), (self.n_max_s, "n_max_s")] {
            if cap == Cap::Limit(0) {
                return bad(&format!("{name} must be at least 1"));
            }
        }
        for (eps, name) in [(self.eps_f, "eps_f"), (self.eps_s, "eps_s"), (self.eps_fil, "eps_fil")] {
            if !(eps > 0.0 && eps.is_finite()) {
                return bad(&format!("{name} must be a positive real"));
            }
        }
        if !(self.omega0 > 0.0 && self.omega0 <= 1.0) {
            return bad("omega0 must lie in (0, 1]");
        }
        if self.max_coupling_iters_per_step == 0 {
            return bad("max_coupling_iters_per_step must be at least 1");
        }
        if self.batch_size_f == 0 {
            return bad("batch_size_f must be at least 1");
        }
        if let Criterion::FixedPointNorm { eps_c, .. } = self.criterion {
            if !(eps_c > 0.0 && eps_c.is_finite()) {
                return bad("eps_c must be a positive real");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_text_form() {
        assert_eq!("inf".parse::<Cap>().unwrap(), Cap::Unbounded);
        assert_eq!(" 12 ".parse::<Cap>().unwrap(), Cap::Limit(12));
        assert!("0".parse::<Cap>().is_err());
        assert!("-3".parse::<Cap>().is_err());
        assert_eq!(Cap::Unbounded.to_string(), "inf");
        assert_eq!(Cap::Limit(7).to_string(), "7");
        assert!(Cap::Limit(3) < Cap::Unbounded);
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = CouplingConfig::default();
        assert!(c.validate().is_ok());
        c.omega0 = 0.0;
        assert!(c.validate().is_err());
        c = CouplingConfig { n_max_s: Cap::Limit(0), ..Default::default() };
        assert!(c.validate().is_err());
        c = CouplingConfig { max_coupling_iters_per_step: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
