use ndarray::Array2;

use crate::calibration::fit::SigmoidFit;
use crate::error::Result;
use crate::rbm::RbmParams;
use crate::sim::{Network, NeuronConfig, PoissonSource, SynapseBank};

/// Constants of the spiking realization of an RBM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkMapping {
    pub tau_syn: f64,
    /// Rate of every bias train (Hz).
    pub nu_bias: f64,
}

impl Default for NetworkMapping {
    fn default() -> Self {
        Self {
            tau_syn: 4e-3,
            nu_bias: 1000.0,
        }
    }
}

impl NetworkMapping {
    /// Charge per spike for coupling `w`.
    pub fn weight_to_charge(&self, w: f64, fit: &SigmoidFit) -> f64 {
        w * self.tau_syn / fit.beta
    }

    pub fn charge_to_weight(&self, q: f64, fit: &SigmoidFit) -> f64 {
        q * fit.beta / self.tau_syn
    }

    /// Bias-train charge per event for bias `b`, chosen so that the mean
    /// bias current `I_b` satisfies `beta I_b + ln(gamma tau_r) = b`.
    pub fn bias_to_charge(&self, b: f64, fit: &SigmoidFit) -> f64 {
        (b - fit.log_gamma_tau()) / fit.beta / self.nu_bias
    }

    pub fn charge_to_bias(&self, q: f64, fit: &SigmoidFit) -> f64 {
        q * self.nu_bias * fit.beta + fit.log_gamma_tau()
    }
}

/// Two-layer network (visible = layer 0, hidden = layer 1) with one
/// symmetric bank and one bias source per layer (source 0 visible,
/// source 1 hidden).
pub fn map_rbm_to_network(
    rbm: &RbmParams,
    fit: &SigmoidFit,
    neuron: &NeuronConfig,
    mapping: &NetworkMapping,
) -> Result<Network> {
    rbm.validate()?;
    fit.validate()?;
    let (nv, nh) = rbm.w.dim();
    let mut net = Network::new(*neuron, vec![nv, nh]);
    let q: Array2<f64> = rbm.w.mapv(|w| mapping.weight_to_charge(w, fit));
    net.banks.push(SynapseBank::new(0, 1, q, mapping.tau_syn, true)?);
    for (layer, b) in [(0, &rbm.b_v), (1, &rbm.b_h)] {
        net.sources.push(PoissonSource {
            target: layer,
            rate: mapping.nu_bias,
            weights: b.iter().map(|&b| mapping.bias_to_charge(b, fit)).collect(),
            tau_syn: mapping.tau_syn,
        });
    }
    Ok(net)
}

/// Inverse of [`map_rbm_to_network`] for a network of that shape.
pub fn network_to_rbm(net: &Network, fit: &SigmoidFit, mapping: &NetworkMapping, n_class: usize) -> RbmParams {
    let bank = &net.banks[0];
    RbmParams {
        w: bank.q.mapv(|q| mapping.charge_to_weight(q, fit)),
        b_v: net.sources[0].weights.iter().map(|&q| mapping.charge_to_bias(q, fit)).collect(),
        b_h: net.sources[1].weights.iter().map(|&q| mapping.charge_to_bias(q, fit)).collect(),
        n_class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn mapping_round_trips() {
        let mut rng = stream(4, Stream::Aux(0));
        let rbm = RbmParams::random(4, 3, (0.0, 1.0), (0.0, 1.0), &mut rng)
            .unwrap()
            .with_classes(1);
        let fit = SigmoidFit::default();
        let m = NetworkMapping::default();
        let net = map_rbm_to_network(&rbm, &fit, &NeuronConfig::default(), &m).unwrap();
        net.validate().unwrap();
        let back = network_to_rbm(&net, &fit, &m, 1);
        assert!((back.w - &rbm.w).iter().all(|d| d.abs() < 1e-12));
        assert!((back.b_h - &rbm.b_h).iter().all(|d| d.abs() < 1e-12));
        assert_eq!(back.n_class, 1);
    }

    #[test]
    fn neutral_bias_needs_no_charge() {
        let fit = SigmoidFit::default();
        let m = NetworkMapping::default();
        assert!(m.bias_to_charge(fit.log_gamma_tau(), &fit).abs() < 1e-30);
        // a unit with zero input current fires at nu(0) = gamma / (1 + gamma tau_r)
        let occ = fit.rate(0.0) * fit.tau_r;
        let g = fit.gamma * fit.tau_r;
        assert!((occ - g / (1.0 + g)).abs() < 1e-12);
    }

    #[test]
    fn recurrent_charge_matches_box_integral() {
        // a spike delivers W/beta of current-time over tau_syn = tau_r
        let fit = SigmoidFit::default();
        let m = NetworkMapping::default();
        let q = m.weight_to_charge(1.0, &fit);
        assert!((q - fit.tau_r / fit.beta).abs() < 1e-24);
    }
}
