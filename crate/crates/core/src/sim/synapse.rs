//! First-order current synapses.
//!
//! A presynaptic spike adds `q / tau_syn` to the postsynaptic current, which
//! then relaxes as `exp(-t / tau_syn)`. The filter is linear, so one state
//! variable per target carries the summed input of any number of synapses.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Dense charge-weight matrix from a presynaptic layer to a postsynaptic one.
///
/// With `symmetric` set the same matrix also carries spikes backwards
/// (post -> pre, through the transpose), as in the RBM where `q_v = q_h^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseBank {
    pub pre: usize,
    pub post: usize,
    /// Charge per spike (C), shape `pre_size x post_size`.
    pub q: Array2<f64>,
    pub tau_syn: f64,
    pub symmetric: bool,
}

impl SynapseBank {
    pub fn new(pre: usize, post: usize, q: Array2<f64>, tau_syn: f64, symmetric: bool) -> Result<Self> {
        if !(tau_syn > 0.0) {
            return Err(Error::Config("tau_syn must be > 0".into()));
        }
        Ok(Self {
            pre,
            post,
            q,
            tau_syn,
            symmetric,
        })
    }

    /// Decay `currents` over one step, then add the impulses of `spikes`
    /// (indices into the presynaptic layer).
    pub fn integrate(&self, currents: &mut [f64], spikes: &[usize], dt: f64) {
        let decay = (-dt / self.tau_syn).exp();
        currents.iter_mut().for_each(|c| *c *= decay);
        self.deliver_forward(currents, spikes);
    }

    pub(crate) fn deliver_forward(&self, currents: &mut [f64], spikes: &[usize]) {
        let inv_tau = 1.0 / self.tau_syn;
        for &i in spikes {
            for (c, &q) in currents.iter_mut().zip(self.q.row(i)) {
                *c += q * inv_tau;
            }
        }
    }

    pub(crate) fn deliver_backward(&self, currents: &mut [f64], spikes: &[usize]) {
        let inv_tau = 1.0 / self.tau_syn;
        for &j in spikes {
            for (c, &q) in currents.iter_mut().zip(self.q.column(j)) {
                *c += q * inv_tau;
            }
        }
    }
}

/// Ratio of the mean of `exp(-t/tau)` over one step to its value at the
/// step start. Driving a neuron with `current * step_mean_factor` makes the
/// delivered charge per spike exactly `q`.
pub fn step_mean_factor(tau_syn: f64, dt: f64) -> f64 {
    let x = dt / tau_syn;
    if x < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}
