//! Coupling loop and interface acceleration.

pub mod aitken;
pub mod engine;
pub mod iqn;

pub use aitken::{aitken_omega, AitkenOmega};
pub use engine::{check_convergence, run_simulation, run_time_step, StepFailure, StepFailureKind, StepOutcome};
pub use iqn::{iqn_ils_update, qr_filter, IqnHistory, IqnUpdate};
