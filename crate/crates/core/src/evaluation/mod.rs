//! Classification, generation, cue integration, quantization and the
//! activity watchdog.

pub mod experiments;
pub mod free_energy;
pub mod quantize;
pub mod readout;
pub mod regulator;

pub use experiments::{correlation, right_half_mask, CueResult, NetworkEval};
pub use free_energy::{classify_by_free_energy, free_energy, free_energy_accuracy, softplus};
pub use quantize::{quantize_params, Grid, QuantizationSpec};
pub use readout::{classify_by_rate, readout_from_rates, ClassReadout};
pub use regulator::{activity_regulator, ActivityRegulator, RegulatorConfig};
