//! Discrete-time neural sampler with abstract stochastic neurons.
//!
//! Each unit has membrane value `u_k = b_k + sum_j W_kj x_j`. A unit that is
//! not refractory fires with probability `logistic(u_k - ln tau)` and is then
//! "on" for `tau` steps. With rectangular PSPs (`x_j = z_j`) and units updated
//! one at a time, the chain samples `p(z)` exactly.

use rand::Rng;

use crate::rbm::BoltzmannParams;
use crate::rng::{stream, Stream};
use crate::sampling::gibbs::logistic;
use crate::sim::SpikeRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PspShape {
    /// Input equals the presynaptic state: constant for exactly `tau` steps.
    #[default]
    Rectangular,
    /// Exponentially decaying trace with the same area as the rectangle.
    Alpha,
}

impl std::str::FromStr for PspShape {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "rect" | "rectangular" => Ok(PspShape::Rectangular),
            "alpha" => Ok(PspShape::Alpha),
            _ => Err(crate::Error::Config(format!("unknown PSP shape `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbstractSampler {
    /// Step length (s).
    pub step: f64,
    /// Refractory period in steps.
    pub tau: u32,
    pub psp: PspShape,
}

impl Default for AbstractSampler {
    fn default() -> Self {
        Self {
            step: 1e-3,
            tau: 4,
            psp: PspShape::Rectangular,
        }
    }
}

impl AbstractSampler {
    pub fn refractory(&self) -> f64 {
        self.step * self.tau as f64
    }

    /// Simulate for `duration` seconds. Spikes are stamped at `k * step`
    /// for the step `k >= 1` in which they occur.
    pub fn run(&self, params: &BoltzmannParams, duration: f64, seed: u64) -> SpikeRecord {
        let n = params.n_units();
        let steps = (duration / self.step).round() as u64;
        let tau = self.tau.max(1);
        let ln_tau = (tau as f64).ln();
        let decay = (-1.0 / tau as f64).exp();
        let kick = tau as f64 * (1.0 - decay);
        let mut rng = stream(seed, Stream::Aux(2));
        let mut zeta = vec![0u32; n];
        let mut x = vec![0.0; n];
        let mut rec = SpikeRecord::new(n, duration, self.step);
        for k in 1..=steps {
            if self.psp == PspShape::Alpha {
                x.iter_mut().for_each(|v| *v *= decay);
            }
            for i in 0..n {
                if zeta[i] > 1 {
                    zeta[i] -= 1;
                    continue;
                }
                let u = params.b[i] + params.w.row(i).dot(&ndarray::ArrayView1::from(&x[..]));
                if rng.gen::<f64>() < logistic(u - ln_tau) {
                    zeta[i] = tau;
                    match self.psp {
                        PspShape::Rectangular => x[i] = 1.0,
                        PspShape::Alpha => x[i] += kick,
                    }
                    rec.spikes.push((i as u32, k as f64 * self.step));
                } else {
                    zeta[i] = 0;
                    if self.psp == PspShape::Rectangular {
                        x[i] = 0.0;
                    }
                }
            }
        }
        rec
    }
}

/// Shorthand for [`AbstractSampler::run`] with the default 1 ms, 4-step setup.
pub fn abstract_neural_sample(
    params: &BoltzmannParams,
    psp: PspShape,
    duration: f64,
    seed: u64,
) -> SpikeRecord {
    AbstractSampler {
        psp,
        ..AbstractSampler::default()
    }
    .run(params, duration, seed)
}
