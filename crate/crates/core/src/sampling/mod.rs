//! Spike-to-state conversion, exact and Monte Carlo reference samplers, and
//! KL-divergence validation.

pub mod abstract_model;
pub mod distribution;
pub mod gibbs;
pub mod neural;
pub mod trace;

pub use abstract_model::{abstract_neural_sample, AbstractSampler, PspShape};
pub use distribution::{
    exact_boltzmann, histogram_states, kl_divergence, kl_vs_time, write_kl_csv,
    write_probability_csv, StateHistogram, MAX_ENUM_UNITS,
};
pub use gibbs::{gibbs_sample_rbm, logistic};
pub use neural::IfSampler;
pub use trace::{spikes_to_binary_trace, BinaryTrace};

use crate::rbm::RbmParams;
use crate::rng::{stream, Stream};

/// Random 5+5-style test RBM: weights `N(-0.75, 1.5^2)`, biases `N(-1.5, 0.5^2)`.
pub fn random_test_rbm(n_v: usize, n_h: usize, seed: u64) -> RbmParams {
    let mut rng = stream(seed, Stream::Aux(3));
    RbmParams::random(n_v, n_h, (-0.75, 1.5), (-1.5, 0.5), &mut rng)
        .expect("constant distribution parameters are valid")
}

/// Decade checkpoints `1, 10, 100, ...` up to and including `duration`.
pub fn decade_checkpoints(duration: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = 1.0;
    while t < duration * (1.0 - 1e-9) {
        out.push(t);
        t *= 10.0;
    }
    out.push(duration);
    out
}
