//! Measured versus predicted mean weight drift of the modulated STDP rule.

use ndarray::Array2;
use rand::Rng;

use crate::learning::stdp::{ModulationSchedule, Side, StdpConfig, TrainerState};
use crate::rbm::RbmParams;
use crate::rng::{stream, Stream};

/// Both sides of the average-update identity, per pair `(i, j)` in weight
/// units per second.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageUpdate {
    pub measured: Array2<f64>,
    pub predicted: Array2<f64>,
    /// Mean rates in the `+` and `-` plasticity windows.
    pub rates_plus: (Vec<f64>, Vec<f64>),
    pub rates_minus: (Vec<f64>, Vec<f64>),
}

impl AverageUpdate {
    pub fn mean_measured(&self) -> f64 {
        self.measured.mean().unwrap_or(0.0)
    }

    pub fn mean_predicted(&self) -> f64 {
        self.predicted.mean().unwrap_or(0.0)
    }
}

/// Run `n_epochs` epochs of `step` and accumulate, without applying, the
/// updates the rule would make. `step(k, plus_half, v, h)` fills the visible
/// and hidden spikes of step `k` of the current epoch; `plus_half` tells
/// whether the step lies in the data half.
pub fn average_update_estimate(
    n_v: usize,
    n_h: usize,
    schedule: &ModulationSchedule,
    stdp: &StdpConfig,
    dt: f64,
    n_epochs: usize,
    mut step: impl FnMut(usize, bool, &mut Vec<usize>, &mut Vec<usize>),
) -> AverageUpdate {
    let steps_half = (schedule.half_epoch / dt).round() as usize;
    let mut acc = RbmParams::zeros(n_v, n_h);
    let mut st = TrainerState::new(n_v, n_h, *stdp);
    let mut counts_plus = (vec![0usize; n_v], vec![0usize; n_h]);
    let mut counts_minus = (vec![0usize; n_v], vec![0usize; n_h]);
    let (mut v, mut h) = (Vec::new(), Vec::new());
    let mut global = 0u64;
    for _ in 0..n_epochs {
        for k in 0..2 * steps_half {
            global += 1;
            let t = global as f64 * dt;
            let tk = (k + 1) as f64 * dt;
            v.clear();
            h.clear();
            step(k, k < steps_half, &mut v, &mut h);
            let g = schedule.g(tk);
            let counts = match g {
                x if x > 0.0 => Some(&mut counts_plus),
                x if x < 0.0 => Some(&mut counts_minus),
                _ => None,
            };
            if let Some(c) = counts {
                v.iter().for_each(|&i| c.0[i] += 1);
                h.iter().for_each(|&j| c.1[j] += 1);
            }
            for &i in &v {
                st.stdp_on_spike(Side::Visible, i, t, g, &mut acc);
            }
            for &j in &h {
                st.stdp_on_spike(Side::Hidden, j, t, g, &mut acc);
            }
        }
    }
    let total = n_epochs as f64 * schedule.epoch();
    let window = n_epochs as f64 * (schedule.half_epoch - schedule.burn_in);
    let to_rates = |c: &[usize]| c.iter().map(|&n| n as f64 / window).collect::<Vec<_>>();
    let rp = (to_rates(&counts_plus.0), to_rates(&counts_plus.1));
    let rm = (to_rates(&counts_minus.0), to_rates(&counts_minus.1));
    let eta = schedule.eta(stdp);
    let predicted = Array2::from_shape_fn((n_v, n_h), |(i, j)| {
        eta * (rp.0[i] * rp.1[j] - rm.0[i] * rm.1[j])
    });
    AverageUpdate {
        measured: acc.w / total,
        predicted,
        rates_plus: rp,
        rates_minus: rm,
    }
}

/// Independent Poisson trains for every unit: visible at `plus.0`, hidden at
/// `plus.1` (Hz) in the data half and at `minus` in the other half.
pub fn average_update_poisson(
    n_v: usize,
    n_h: usize,
    plus: (f64, f64),
    minus: (f64, f64),
    schedule: &ModulationSchedule,
    stdp: &StdpConfig,
    dt: f64,
    n_epochs: usize,
    seed: u64,
) -> AverageUpdate {
    let mut rng = stream(seed, Stream::Aux(5));
    average_update_estimate(n_v, n_h, schedule, stdp, dt, n_epochs, |_, data, v, h| {
        let (rv, rh) = if data { plus } else { minus };
        v.extend((0..n_v).filter(|_| rng.gen::<f64>() < rv * dt));
        h.extend((0..n_h).filter(|_| rng.gen::<f64>() < rh * dt));
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_phases_average_to_zero() {
        let s = ModulationSchedule::default();
        let stdp = StdpConfig {
            amplitude: 1.0,
            tau_stdp: 4e-3,
        };
        let out = average_update_poisson(4, 4, (40.0, 40.0), (40.0, 40.0), &s, &stdp, 1e-4, 300, 1);
        let scale = s.eta(&stdp) * 1600.0;
        assert!(out.mean_measured().abs() < 0.1 * scale, "{}", out.mean_measured());
    }

    #[test]
    fn halving_tau_halves_drift() {
        let s = ModulationSchedule::default();
        let run = |tau: f64| {
            let stdp = StdpConfig {
                amplitude: 1.0,
                tau_stdp: tau,
            };
            average_update_poisson(4, 4, (50.0, 80.0), (20.0, 30.0), &s, &stdp, 1e-4, 300, 2)
                .mean_measured()
        };
        let ratio = run(2e-3) / run(4e-3);
        assert!((ratio - 0.5).abs() < 0.1, "{ratio}");
    }
}
