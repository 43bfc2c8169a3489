use crate::calibration::{map_rbm_to_network, NetworkMapping, SigmoidFit};
use crate::error::Result;
use crate::rbm::RbmParams;
use crate::sim::{run_network, CurrentSchedule, Integrator, NeuronConfig, SpikeRecord};

/// Settings for sampling an RBM with the LIF network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfSampler {
    pub neuron: NeuronConfig,
    pub fit: SigmoidFit,
    pub mapping: NetworkMapping,
    pub dt: f64,
    pub integrator: Integrator,
}

impl IfSampler {
    /// Free-running network spikes, visible neurons first.
    pub fn run(&self, rbm: &RbmParams, duration: f64, seed: u64) -> Result<SpikeRecord> {
        let net = map_rbm_to_network(rbm, &self.fit, &self.neuron, &self.mapping)?;
        run_network(&net, &CurrentSchedule::none(), duration, self.dt, self.integrator, seed)
    }
}
