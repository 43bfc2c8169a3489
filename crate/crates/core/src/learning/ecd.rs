//! Online event-driven contrastive divergence on the LIF network.

use ndarray::Array2;

use crate::calibration::{map_rbm_to_network, network_to_rbm, NetworkMapping, SigmoidFit};
use crate::error::{Error, Result};
use crate::learning::stdp::{ModulationSchedule, Plastic, Side, StdpConfig, TrainerState};
use crate::rbm::RbmParams;
use crate::sim::{Integrator, NeuronConfig, Simulator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcdConfig {
    pub neuron: NeuronConfig,
    pub fit: SigmoidFit,
    pub mapping: NetworkMapping,
    pub schedule: ModulationSchedule,
    pub stdp: StdpConfig,
    pub dt: f64,
    pub integrator: Integrator,
    /// Train biases with their Poisson trains as STDP partners.
    pub learn_bias: bool,
}

impl EcdConfig {
    pub fn new(fit: SigmoidFit) -> Self {
        Self {
            neuron: NeuronConfig::default(),
            fit,
            mapping: NetworkMapping::default(),
            schedule: ModulationSchedule::default(),
            stdp: StdpConfig::default(),
            dt: 1e-4,
            integrator: Integrator::default(),
            learn_bias: true,
        }
    }
}

/// Result of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct EcdOutcome {
    pub params: RbmParams,
    /// Mean of `W` after each presentation.
    pub mean_weight: Vec<f64>,
    /// Mean hidden rate (Hz) over the data half of each presentation.
    pub hidden_rate: Vec<f64>,
}

/// Writes dimensionless increments straight into the network's charges.
struct ChargeView<'a> {
    q: &'a mut Array2<f64>,
    bias_v: &'a mut [f64],
    bias_h: &'a mut [f64],
    w_to_q: f64,
    b_to_q: f64,
    learn_bias: bool,
}

impl Plastic for ChargeView<'_> {
    fn add_row(&mut self, i: usize, g: f64, trace: &[f64], factor: f64) {
        let s = g * factor * self.w_to_q;
        for (q, &x) in self.q.row_mut(i).iter_mut().zip(trace) {
            *q += s * x;
        }
    }

    fn add_column(&mut self, j: usize, g: f64, trace: &[f64], factor: f64) {
        let s = g * factor * self.w_to_q;
        for (q, &x) in self.q.column_mut(j).iter_mut().zip(trace) {
            *q += s * x;
        }
    }

    fn add_bias(&mut self, side: Side, i: usize, delta: f64) {
        if !self.learn_bias {
            return;
        }
        match side {
            Side::Visible | Side::BiasVisible => self.bias_v[i] += delta * self.b_to_q,
            Side::Hidden | Side::BiasHidden => self.bias_h[i] += delta * self.b_to_q,
        }
    }
}

/// Present `clamps[order[p]]` for `p = 0..order.len()`. Each presentation
/// drives the visible layer with its clamp currents for the first half-epoch
/// and lets the network run freely for the second, while `g(t)` gates the
/// STDP updates. `on_presentation(p, params)` is called after every
/// presentation with the current parameters when it asks for them via
/// `wants(p)`.
pub fn train_ecd(
    init: &RbmParams,
    clamps: &[Vec<f64>],
    order: &[usize],
    cfg: &EcdConfig,
    seed: u64,
    wants: impl Fn(usize) -> bool,
    mut on_presentation: impl FnMut(usize, &RbmParams) -> Result<()>,
) -> Result<EcdOutcome> {
    cfg.schedule.validate()?;
    cfg.stdp.validate()?;
    let (nv, nh) = init.w.dim();
    if let Some(c) = clamps.iter().find(|c| c.len() != nv) {
        return Err(Error::Dimension(format!(
            "clamp vector has {} entries for {nv} visible units",
            c.len()
        )));
    }
    if let Some(&bad) = order.iter().find(|&&k| k >= clamps.len()) {
        return Err(Error::Dimension(format!("presentation index {bad} out of range")));
    }
    let net = map_rbm_to_network(init, &cfg.fit, &cfg.neuron, &cfg.mapping)?;
    let mut sim = Simulator::new(net, cfg.dt, cfg.integrator, seed)?;
    let mut state = TrainerState::new(nv, nh, cfg.stdp);
    let w_to_q = cfg.mapping.weight_to_charge(1.0, &cfg.fit);
    let b_to_q = 1.0 / (cfg.fit.beta * cfg.mapping.nu_bias);

    let steps_half = (cfg.schedule.half_epoch / cfg.dt).round() as usize;
    let steps_epoch = 2 * steps_half;
    let mut external = vec![0.0; nv + nh];
    let mut mean_weight = Vec::with_capacity(order.len());
    let mut hidden_rate = Vec::with_capacity(order.len());
    let mut v_spikes = Vec::new();
    let mut h_spikes = Vec::new();
    let mut bv_events = Vec::new();
    let mut bh_events = Vec::new();

    for (p, &item) in order.iter().enumerate() {
        external[..nv].copy_from_slice(&clamps[item]);
        let mut hidden_count = 0usize;
        for k in 0..steps_epoch {
            let ext: &[f64] = if k < steps_half { &external } else { &[] };
            sim.step(ext)?;
            let t = sim.time();
            let g = cfg.schedule.g((k + 1) as f64 * cfg.dt);
            v_spikes.clear();
            v_spikes.extend_from_slice(sim.layer_spikes(0));
            h_spikes.clear();
            h_spikes.extend_from_slice(sim.layer_spikes(1));
            bv_events.clear();
            bv_events.extend_from_slice(sim.bias_events(0));
            bh_events.clear();
            bh_events.extend_from_slice(sim.bias_events(1));
            if k < steps_half {
                hidden_count += h_spikes.len();
            }

            let net = sim.network_mut();
            let (bank, sources) = (&mut net.banks[0], &mut net.sources);
            let (sv, sh) = sources.split_at_mut(1);
            let mut view = ChargeView {
                q: &mut bank.q,
                bias_v: &mut sv[0].weights,
                bias_h: &mut sh[0].weights,
                w_to_q,
                b_to_q,
                learn_bias: cfg.learn_bias,
            };
            for &i in &bv_events {
                state.stdp_on_spike(Side::BiasVisible, i, t, g, &mut view);
            }
            for &j in &bh_events {
                state.stdp_on_spike(Side::BiasHidden, j, t, g, &mut view);
            }
            for &i in &v_spikes {
                state.stdp_on_spike(Side::Visible, i, t, g, &mut view);
            }
            for &j in &h_spikes {
                state.stdp_on_spike(Side::Hidden, j, t, g, &mut view);
            }
        }
        let params = network_to_rbm(sim.network(), &cfg.fit, &cfg.mapping, init.n_class);
        if !params.is_finite() {
            return Err(Error::Diverged {
                presentations: p + 1,
                detail: "weights or biases became non-finite".into(),
            });
        }
        mean_weight.push(params.mean_weight());
        hidden_rate.push(hidden_count as f64 / (nh.max(1) as f64 * cfg.schedule.half_epoch));
        if wants(p + 1) {
            on_presentation(p + 1, &params)?;
        }
    }
    Ok(EcdOutcome {
        params: network_to_rbm(sim.network(), &cfg.fit, &cfg.mapping, init.n_class),
        mean_weight,
        hidden_rate,
    })
}
