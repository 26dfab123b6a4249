//! Flux-tunable qubit model, coherence curves and fits, and the long-term
//! Ramsey monitor driven by a twin's bias output.

mod coherence;
mod fit;
mod model;
mod monitor;

pub use coherence::{coherence_population, CoherenceKind};
pub use fit::{fit_decay, fit_ramsey, DecayFit, RamseyFit};
pub use model::{QubitModel, DEFAULT_OPERATING_HZ, DEFAULT_SENSITIVITY};
pub use monitor::{run_monitor, MonitorConfig, MonitorRecord, MonitorResult, MonitorSummary};
