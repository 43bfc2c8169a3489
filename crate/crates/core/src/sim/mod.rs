//! Fixed-step simulation of noisy LIF networks.

pub mod network;
pub mod neuron;
pub mod poisson;
pub mod record;
pub mod synapse;

pub use network::{run_network, CurrentSchedule, Network, Simulator};
pub use neuron::{Integrator, NeuronConfig, NeuronState, NeuronStepper, StepOutcome};
pub use poisson::{poisson_spikes, PoissonSource, PoissonTrain};
pub use record::SpikeRecord;
pub use synapse::{step_mean_factor, SynapseBank};
