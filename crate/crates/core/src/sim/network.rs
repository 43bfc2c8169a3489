//! Fixed-step simulation of layered LIF networks.

use crate::error::{Error, Result};
use crate::rng::{stream, Stream, StreamRng};
use crate::sim::neuron::{Integrator, NeuronConfig, NeuronState, NeuronStepper, StepOutcome};
use crate::sim::poisson::{PoissonSource, PoissonTrain};
use crate::sim::record::SpikeRecord;
use crate::sim::synapse::{step_mean_factor, SynapseBank};

/// Layers of identical neurons, dense synapse banks between them and Poisson
/// bias sources. Neurons are numbered globally, layer after layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub neuron: NeuronConfig,
    pub layers: Vec<usize>,
    pub banks: Vec<SynapseBank>,
    pub sources: Vec<PoissonSource>,
}

impl Network {
    pub fn new(neuron: NeuronConfig, layers: Vec<usize>) -> Self {
        Self {
            neuron,
            layers,
            banks: Vec::new(),
            sources: Vec::new(),
        }
    }

    pub fn n_neurons(&self) -> usize {
        self.layers.iter().sum()
    }

    pub fn offset(&self, layer: usize) -> usize {
        self.layers[..layer].iter().sum()
    }

    pub fn layer_range(&self, layer: usize) -> std::ops::Range<usize> {
        let o = self.offset(layer);
        o..o + self.layers[layer]
    }

    pub fn validate(&self) -> Result<()> {
        self.neuron.validate()?;
        let nl = self.layers.len();
        for (k, b) in self.banks.iter().enumerate() {
            if b.pre >= nl || b.post >= nl {
                return Err(Error::Dimension(format!("bank {k} references a missing layer")));
            }
            let want = (self.layers[b.pre], self.layers[b.post]);
            if b.q.dim() != want {
                return Err(Error::Dimension(format!(
                    "bank {k} is {:?}, layers need {want:?}",
                    b.q.dim()
                )));
            }
            if !(b.tau_syn > 0.0) {
                return Err(Error::Config(format!("bank {k}: tau_syn must be > 0")));
            }
        }
        for (k, s) in self.sources.iter().enumerate() {
            if s.target >= nl || s.weights.len() != self.layers[s.target] {
                return Err(Error::Dimension(format!(
                    "bias source {k} does not match its target layer"
                )));
            }
        }
        Ok(())
    }
}

/// Piecewise-constant external currents (A), applied directly to the membrane.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurrentSchedule {
    segments: Vec<(f64, Vec<f64>)>,
}

impl CurrentSchedule {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn constant(currents: Vec<f64>) -> Self {
        Self {
            segments: vec![(0.0, currents)],
        }
    }

    /// Currents from `start` onwards (until the next segment). Segments must
    /// be pushed in time order.
    pub fn push(&mut self, start: f64, currents: Vec<f64>) {
        debug_assert!(self.segments.last().map_or(true, |s| s.0 <= start));
        self.segments.push((start, currents));
    }

    pub fn at(&self, t: f64) -> Option<&[f64]> {
        let idx = self.segments.partition_point(|s| s.0 <= t + 1e-12);
        idx.checked_sub(1).map(|i| self.segments[i].1.as_slice())
    }

    fn check(&self, n: usize) -> Result<()> {
        for (t, c) in &self.segments {
            if c.len() != n {
                return Err(Error::Dimension(format!(
                    "external currents at t = {t} have {} entries, network has {n} neurons",
                    c.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Channel {
    tau: f64,
    decay: f64,
    factor: f64,
    current: Vec<f64>,
}

/// Stepping engine. Owns the network so that plasticity can rewrite weights
/// between steps; the change takes effect with the next delivered spike.
#[derive(Debug, Clone)]
pub struct Simulator {
    net: Network,
    stepper: NeuronStepper,
    step_index: u64,
    states: Vec<NeuronState>,
    rngs: Vec<StreamRng>,
    channels: Vec<Channel>,
    bank_channel: Vec<usize>,
    source_channel: Vec<usize>,
    trains: Vec<Vec<PoissonTrain>>,
    layer_of: Vec<(usize, usize)>,
    spikes: Vec<usize>,
    layer_spikes: Vec<Vec<usize>>,
    bias_events: Vec<Vec<usize>>,
}

impl Simulator {
    pub fn new(net: Network, dt: f64, integrator: Integrator, seed: u64) -> Result<Self> {
        net.validate()?;
        let stepper = NeuronStepper::new(net.neuron, dt, integrator)?;
        let n = net.n_neurons();

        let mut channels: Vec<Channel> = Vec::new();
        let mut channel_for = |tau: f64| -> usize {
            if let Some(k) = channels.iter().position(|c| c.tau == tau) {
                return k;
            }
            channels.push(Channel {
                tau,
                decay: (-dt / tau).exp(),
                factor: step_mean_factor(tau, dt),
                current: vec![0.0; n],
            });
            channels.len() - 1
        };
        let bank_channel: Vec<usize> = net.banks.iter().map(|b| channel_for(b.tau_syn)).collect();
        let source_channel: Vec<usize> =
            net.sources.iter().map(|s| channel_for(s.tau_syn)).collect();

        let mut trains = Vec::with_capacity(net.sources.len());
        for s in &net.sources {
            s.validate(dt)?;
            let off = net.offset(s.target);
            let t = (0..s.weights.len())
                .map(|i| PoissonTrain::new(s.rate, dt, stream(seed, Stream::Bias(off + i))))
                .collect::<Result<Vec<_>>>()?;
            trains.push(t);
        }

        let mut layer_of = Vec::with_capacity(n);
        for (l, &size) in net.layers.iter().enumerate() {
            layer_of.extend((0..size).map(|i| (l, i)));
        }

        Ok(Self {
            states: vec![NeuronState::at_rest(&net.neuron); n],
            rngs: (0..n).map(|i| stream(seed, Stream::Neuron(i))).collect(),
            layer_spikes: vec![Vec::new(); net.layers.len()],
            bias_events: vec![Vec::new(); net.sources.len()],
            net,
            stepper,
            step_index: 0,
            channels,
            bank_channel,
            source_channel,
            trains,
            layer_of,
            spikes: Vec::new(),
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn into_network(self) -> Network {
        self.net
    }

    pub fn dt(&self) -> f64 {
        self.stepper.dt()
    }

    /// Simulated time at the end of the last completed step.
    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.stepper.dt()
    }

    pub fn steps_done(&self) -> u64 {
        self.step_index
    }

    pub fn states(&self) -> &[NeuronState] {
        &self.states
    }

    /// Global ids that spiked at the end of the last step.
    pub fn spikes(&self) -> &[usize] {
        &self.spikes
    }

    /// Layer-local ids that spiked at the end of the last step.
    pub fn layer_spikes(&self, layer: usize) -> &[usize] {
        &self.layer_spikes[layer]
    }

    /// Target-local ids whose bias train fired during the last step.
    pub fn bias_events(&self, source: usize) -> &[usize] {
        &self.bias_events[source]
    }

    /// Total filtered synaptic current into neuron `i` (A).
    pub fn synaptic_current(&self, i: usize) -> f64 {
        self.channels.iter().map(|c| c.current[i]).sum()
    }

    /// Advance one step. `external` holds one current per neuron, or is empty.
    pub fn step(&mut self, external: &[f64]) -> Result<()> {
        let n = self.states.len();
        if !external.is_empty() && external.len() != n {
            return Err(Error::Dimension(format!(
                "external current vector has {} entries, network has {n}",
                external.len()
            )));
        }
        self.spikes.clear();
        self.layer_spikes.iter_mut().for_each(Vec::clear);

        for i in 0..n {
            let mut input = external.get(i).copied().unwrap_or(0.0);
            for c in &self.channels {
                input += c.factor * c.current[i];
            }
            match self.stepper.step(&mut self.states[i], input, &mut self.rngs[i]) {
                StepOutcome::Spiked => {
                    self.spikes.push(i);
                    let (l, local) = self.layer_of[i];
                    self.layer_spikes[l].push(local);
                }
                StepOutcome::NonFinite => {
                    return Err(Error::NonFinite {
                        neuron: i,
                        time_s: self.time() + self.stepper.dt(),
                    })
                }
                StepOutcome::Quiet | StepOutcome::Refractory => {}
            }
        }

        for c in &mut self.channels {
            let d = c.decay;
            c.current.iter_mut().for_each(|x| *x *= d);
        }

        for (k, src) in self.net.sources.iter().enumerate() {
            let off = self.net.offset(src.target);
            let ch = &mut self.channels[self.source_channel[k]];
            let inv_tau = 1.0 / src.tau_syn;
            let events = &mut self.bias_events[k];
            events.clear();
            for (i, train) in self.trains[k].iter_mut().enumerate() {
                if train.tick() {
                    ch.current[off + i] += src.weights[i] * inv_tau;
                    events.push(i);
                }
            }
        }

        for (k, bank) in self.net.banks.iter().enumerate() {
            let ch = &mut self.channels[self.bank_channel[k]];
            let post = self.net.layers[..bank.post].iter().sum::<usize>();
            let post_len = self.net.layers[bank.post];
            bank.deliver_forward(
                &mut ch.current[post..post + post_len],
                &self.layer_spikes[bank.pre],
            );
            if bank.symmetric {
                let pre = self.net.layers[..bank.pre].iter().sum::<usize>();
                let pre_len = self.net.layers[bank.pre];
                bank.deliver_backward(
                    &mut ch.current[pre..pre + pre_len],
                    &self.layer_spikes[bank.post],
                );
            }
        }

        self.step_index += 1;
        Ok(())
    }

    /// Run until `duration` (s) has elapsed since the start of this call,
    /// appending spikes to `record`.
    pub fn run_into(
        &mut self,
        schedule: &CurrentSchedule,
        duration: f64,
        record: &mut SpikeRecord,
    ) -> Result<()> {
        schedule.check(self.states.len())?;
        let steps = (duration / self.dt()).round() as u64;
        let t0 = self.time();
        for _ in 0..steps {
            let ext = schedule.at(self.time() - t0).unwrap_or(&[]);
            // borrowck: schedule is external to self
            self.step(ext)?;
            let t = self.time();
            record.spikes.extend(self.spikes.iter().map(|&i| (i as u32, t)));
        }
        Ok(())
    }
}

/// Simulate `net` from rest for `duration` seconds.
pub fn run_network(
    net: &Network,
    schedule: &CurrentSchedule,
    duration: f64,
    dt: f64,
    integrator: Integrator,
    seed: u64,
) -> Result<SpikeRecord> {
    let mut sim = Simulator::new(net.clone(), dt, integrator, seed)?;
    let mut rec = SpikeRecord::new(net.n_neurons(), duration, dt);
    sim.run_into(schedule, duration, &mut rec)?;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn empty_network_gives_empty_record() {
        let net = Network::new(NeuronConfig::default(), vec![]);
        let rec = run_network(&net, &CurrentSchedule::none(), 1.0, 1e-4, Integrator::default(), 1)
            .unwrap();
        assert!(rec.is_empty());
        assert_eq!(rec.n_neurons, 0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut net = Network::new(NeuronConfig::default(), vec![3, 2]);
        net.banks.push(SynapseBank::new(0, 1, Array2::zeros((2, 2)), 4e-3, true).unwrap());
        assert!(matches!(
            Simulator::new(net, 1e-4, Integrator::default(), 0),
            Err(Error::Dimension(_))
        ));
        let net = Network::new(NeuronConfig::default(), vec![3]);
        let sched = CurrentSchedule::constant(vec![0.0; 2]);
        assert!(run_network(&net, &sched, 0.1, 1e-4, Integrator::default(), 0).is_err());
    }

    #[test]
    fn noiseless_runs_are_bit_identical() {
        let cfg = NeuronConfig {
            sigma: 0.0,
            ..NeuronConfig::default()
        };
        let mut net = Network::new(cfg, vec![2, 2]);
        let q = Array2::from_shape_vec((2, 2), vec![1e-12, -2e-12, 3e-12, 0.5e-12]).unwrap();
        net.banks.push(SynapseBank::new(0, 1, q, 4e-3, true).unwrap());
        let sched = CurrentSchedule::constant(vec![2e-10, 1.5e-10, 0.0, 1e-10]);
        let a = run_network(&net, &sched, 0.5, 1e-4, Integrator::default(), 1).unwrap();
        let b = run_network(&net, &sched, 0.5, 1e-4, Integrator::default(), 2).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
    }

    #[test]
    fn inter_spike_intervals_respect_refractory_period() {
        let mut net = Network::new(NeuronConfig::default(), vec![4]);
        net.sources.push(PoissonSource {
            target: 0,
            rate: 1000.0,
            weights: vec![-1e-12; 4],
            tau_syn: 4e-3,
        });
        let sched = CurrentSchedule::constant(vec![-1e-9, 0.0, 1e-9, 5e-9]);
        let rec = run_network(&net, &sched, 2.0, 1e-4, Integrator::default(), 3).unwrap();
        for times in rec.per_neuron() {
            assert!(!times.is_empty());
            for w in times.windows(2) {
                assert!(w[1] - w[0] >= 4e-3 - 1e-9);
            }
        }
        assert!(rec.spikes.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn schedule_switches_at_segment_starts() {
        let mut s = CurrentSchedule::none();
        assert!(s.at(0.0).is_none());
        s.push(0.0, vec![1.0]);
        s.push(0.5, vec![2.0]);
        assert_eq!(s.at(0.25), Some(&[1.0][..]));
        assert_eq!(s.at(0.5), Some(&[2.0][..]));
        assert_eq!(s.at(9.0), Some(&[2.0][..]));
    }
}
