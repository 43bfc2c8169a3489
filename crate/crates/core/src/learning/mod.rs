//! Event-driven contrastive divergence and the standard CD reference.

pub mod average;
pub mod cd;
pub mod ecd;
pub mod stdp;

pub use average::{average_update_estimate, average_update_poisson, AverageUpdate};
pub use cd::{exact_log_likelihood, train_cd_reference, CdConfig};
pub use ecd::{train_ecd, EcdConfig, EcdOutcome};
pub use stdp::{
    modulation_g, ModulationSchedule, Plastic, Side, StdpConfig, TraceBank, TrainerState,
};
