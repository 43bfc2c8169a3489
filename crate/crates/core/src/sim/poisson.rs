use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};
use crate::rng::{stream, Stream, StreamRng};

/// Largest per-step event probability accepted before the Bernoulli-per-step
/// approximation of a Poisson process is considered undersampled.
pub const MAX_STEP_PROBABILITY: f64 = 0.1;

/// A bank of independent Poisson trains, one per neuron of a target layer,
/// each with its own charge weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSource {
    pub target: usize,
    /// Rate of every train (Hz).
    pub rate: f64,
    /// Charge per event for each target neuron (C).
    pub weights: Vec<f64>,
    pub tau_syn: f64,
}

impl PoissonSource {
    pub fn validate(&self, dt: f64) -> Result<()> {
        check_rate(self.rate, dt)?;
        if !(self.tau_syn > 0.0) {
            return Err(Error::Config("bias tau_syn must be > 0".into()));
        }
        Ok(())
    }
}

fn check_rate(rate: f64, dt: f64) -> Result<f64> {
    if !(rate >= 0.0) {
        return Err(Error::Config(format!("Poisson rate must be >= 0, got {rate}")));
    }
    let p = rate * dt;
    if p > MAX_STEP_PROBABILITY + 1e-12 {
        return Err(Error::Config(format!(
            "Poisson rate {rate} Hz with dt = {dt} s gives per-step probability {p:.3} > {MAX_STEP_PROBABILITY}"
        )));
    }
    Ok(p)
}

/// Discrete-time Poisson train: each step fires with probability `rate * dt`.
/// Waiting times are drawn geometrically, so a silent step costs no draws.
#[derive(Debug, Clone)]
pub struct PoissonTrain {
    wait: Option<Geometric>,
    countdown: u64,
    rng: StreamRng,
}

impl PoissonTrain {
    pub fn new(rate: f64, dt: f64, rng: StreamRng) -> Result<Self> {
        let p = check_rate(rate, dt)?;
        let wait = if p > 0.0 {
            Some(Geometric::new(p).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        let mut train = Self {
            wait,
            countdown: u64::MAX,
            rng,
        };
        train.rearm();
        Ok(train)
    }

    fn rearm(&mut self) {
        self.countdown = match &self.wait {
            Some(g) => g.sample(&mut self.rng),
            None => u64::MAX,
        };
    }

    /// Advance one step; true if an event falls in it.
    #[inline]
    pub fn tick(&mut self) -> bool {
        if self.countdown == 0 {
            self.rearm();
            true
        } else {
            self.countdown -= 1;
            false
        }
    }

    pub fn rng(&mut self) -> &mut impl Rng {
        &mut self.rng
    }
}

/// Event times (s, at step ends) of one Poisson train over `duration`.
pub fn poisson_spikes(rate: f64, duration: f64, dt: f64, seed: u64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Config("dt must be > 0".into()));
    }
    let mut train = PoissonTrain::new(rate, dt, stream(seed, Stream::Aux(0)))?;
    let steps = (duration / dt).round() as u64;
    Ok((0..steps)
        .filter(|_| train.tick())
        .map(|k| (k + 1) as f64 * dt)
        .collect())
}
