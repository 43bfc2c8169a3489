//! Recognition, generation and cue-integration runs on the spiking network.

use std::ops::Range;

use crate::calibration::{inverse_transfer, map_rbm_to_network, NetworkMapping, SigmoidFit};
use crate::error::{Error, Result};
use crate::evaluation::readout::{classify_by_rate, ClassReadout};
use crate::evaluation::regulator::{ActivityRegulator, RegulatorConfig};
use crate::mnist::{binarize, clamp_currents, LabelCode, HIGH, LOW};
use crate::rbm::RbmParams;
use crate::sim::{Integrator, NeuronConfig, Simulator, SpikeRecord};

/// Shared settings for running a trained model as a spiking network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkEval {
    pub neuron: NeuronConfig,
    pub fit: SigmoidFit,
    pub mapping: NetworkMapping,
    pub dt: f64,
    pub integrator: Integrator,
    /// Initial interval excluded from every readout (s).
    pub settle: f64,
    /// Current subtracted from the "off" clamp level for inhibited labels (A).
    pub inhibit_margin: f64,
    pub regulator: Option<RegulatorConfig>,
}

impl NetworkEval {
    pub fn new(fit: SigmoidFit) -> Self {
        Self {
            neuron: NeuronConfig::default(),
            fit,
            mapping: NetworkMapping::default(),
            dt: 1e-4,
            integrator: Integrator::default(),
            settle: 0.04,
            inhibit_margin: 2e-9,
            regulator: None,
        }
    }

    fn current_for(&self, p: f64) -> Result<f64> {
        inverse_transfer(p / self.fit.tau_r, &self.fit)
    }

    fn inhibit_current(&self) -> Result<f64> {
        Ok(self.current_for(LOW)? - self.inhibit_margin)
    }

    /// Run with fixed currents on the visible units (`None` leaves a unit
    /// free) and the watchdog, if configured, on both layers.
    pub fn run(&self, rbm: &RbmParams, drive: &[Option<f64>], duration: f64, seed: u64) -> Result<SpikeRecord> {
        let (nv, nh) = rbm.w.dim();
        if drive.len() != nv {
            return Err(Error::Dimension(format!(
                "{} visible drives for {nv} visible units",
                drive.len()
            )));
        }
        let net = map_rbm_to_network(rbm, &self.fit, &self.neuron, &self.mapping)?;
        let mut sim = Simulator::new(net, self.dt, self.integrator, seed)?;
        let mut base = vec![0.0; nv + nh];
        for (b, d) in base.iter_mut().zip(drive) {
            *b = d.unwrap_or(0.0);
        }
        let mut regs: Vec<ActivityRegulator> = match self.regulator {
            Some(cfg) => vec![
                ActivityRegulator::new(cfg, nv, self.dt),
                ActivityRegulator::new(cfg, nh, self.dt),
            ],
            None => Vec::new(),
        };
        let mut inject = [0.0, 0.0];
        let mut ext = base.clone();
        let mut rec = SpikeRecord::new(nv + nh, duration, self.dt);
        let steps = (duration / self.dt).round() as usize;
        for _ in 0..steps {
            if !regs.is_empty() {
                for (i, e) in ext.iter_mut().enumerate() {
                    *e = base[i] + inject[(i >= nv) as usize];
                }
            }
            sim.step(&ext)?;
            let t = sim.time();
            rec.spikes.extend(sim.spikes().iter().map(|&i| (i as u32, t)));
            for (l, r) in regs.iter_mut().enumerate() {
                inject[l] = r.update(sim.layer_spikes(l).len());
            }
        }
        Ok(rec)
    }

    fn label_groups(rbm: &RbmParams, code: &LabelCode) -> Vec<Range<usize>> {
        let off = rbm.n_data();
        (0..code.n_labels)
            .map(|l| {
                let g = code.group(l);
                off + g.start..off + g.end
            })
            .collect()
    }

    fn pixel_drive(&self, pixels: &[f64]) -> Result<Vec<f64>> {
        clamp_currents(&binarize(pixels), &self.fit)
    }

    /// Clamp the binarized image, leave the labels free, and read out the
    /// most active label group after the settling time.
    pub fn classify_digit(
        &self,
        rbm: &RbmParams,
        pixels: &[f64],
        code: &LabelCode,
        duration: f64,
        seed: u64,
    ) -> Result<ClassReadout> {
        let mask = vec![true; pixels.len()];
        let allowed: Vec<usize> = (0..code.n_labels).collect();
        Ok(self
            .cue_integration(rbm, pixels, &mask, &allowed, code, duration, seed)?
            .readout)
    }

    /// Clamp the group of `label` high and inhibit the other labels; the
    /// pixels run free. Returns per-pixel rates after the settling time.
    pub fn generate_digit(
        &self,
        rbm: &RbmParams,
        label: usize,
        code: &LabelCode,
        duration: f64,
        seed: u64,
    ) -> Result<(Vec<f64>, SpikeRecord)> {
        let n_data = rbm.n_data();
        let mut drive = vec![None; rbm.n_visible()];
        let hi = self.current_for(HIGH)?;
        let inhibit = self.inhibit_current()?;
        for l in 0..code.n_labels {
            for u in code.group(l) {
                drive[n_data + u] = Some(if l == label { hi } else { inhibit });
            }
        }
        let rec = self.run(rbm, &drive, duration, seed)?;
        let image = self.window_rates(&rec, 0..n_data);
        Ok((image, rec))
    }

    /// Clamp the pixels where `mask` is true, inhibit labels outside
    /// `allowed`, and let the rest of the visible layer run free.
    #[allow(clippy::too_many_arguments)]
    pub fn cue_integration(
        &self,
        rbm: &RbmParams,
        pixels: &[f64],
        mask: &[bool],
        allowed: &[usize],
        code: &LabelCode,
        duration: f64,
        seed: u64,
    ) -> Result<CueResult> {
        let n_data = rbm.n_data();
        if pixels.len() != n_data || mask.len() != n_data {
            return Err(Error::Dimension(format!(
                "image/mask sizes {}/{} for {n_data} data units",
                pixels.len(),
                mask.len()
            )));
        }
        let cur = self.pixel_drive(pixels)?;
        let inhibit = self.inhibit_current()?;
        let mut drive = vec![None; rbm.n_visible()];
        for i in 0..n_data {
            if mask[i] {
                drive[i] = Some(cur[i]);
            }
        }
        for l in 0..code.n_labels {
            if !allowed.contains(&l) {
                for u in code.group(l) {
                    drive[n_data + u] = Some(inhibit);
                }
            }
        }
        let rec = self.run(rbm, &drive, duration, seed)?;
        let readout = classify_by_rate(&rec, &Self::label_groups(rbm, code), self.settle, duration);
        let reconstruction = self.window_rates(&rec, 0..n_data);
        Ok(CueResult {
            readout,
            reconstruction,
        })
    }

    fn window_rates(&self, rec: &SpikeRecord, range: Range<usize>) -> Vec<f64> {
        let span = (rec.duration - self.settle).max(f64::MIN_POSITIVE);
        let counts = rec.counts_in(self.settle, f64::INFINITY);
        counts[range].iter().map(|&c| c as f64 / span).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CueResult {
    pub readout: ClassReadout,
    /// Per-pixel rates after settling (Hz).
    pub reconstruction: Vec<f64>,
}

/// Mask keeping only the columns `>= from_col` of a square image.
pub fn right_half_mask(side: usize, from_col: usize) -> Vec<bool> {
    (0..side * side).map(|k| k % side >= from_col).collect()
}

/// Pearson correlation of two equally long vectors.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}
