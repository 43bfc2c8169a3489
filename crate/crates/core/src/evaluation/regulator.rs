//! Layer activity watchdog: excite a layer whose population rate drops too low.

/// Per-layer watchdog settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegulatorConfig {
    /// Population mean rate below which the layer is excited (Hz).
    pub threshold_hz: f64,
    /// Sliding window (s).
    pub window: f64,
    /// Current added to every neuron of an excited layer (A).
    pub current: f64,
}

impl Default for RegulatorConfig {
    fn default() -> Self {
        Self {
            threshold_hz: 5.0,
            window: 0.02,
            current: 2e-9,
        }
    }
}

/// Sliding spike-count monitor of one layer. The monitor stays quiet until
/// its first window has filled. Once excitation starts it lasts at least
/// one full window after the rate recovers.
#[derive(Debug, Clone)]
pub struct ActivityRegulator {
    cfg: RegulatorConfig,
    size: usize,
    ring: Vec<usize>,
    pos: usize,
    filled: bool,
    sum: usize,
    hold: usize,
    dt: f64,
}

impl ActivityRegulator {
    pub fn new(cfg: RegulatorConfig, layer_size: usize, dt: f64) -> Self {
        let steps = ((cfg.window / dt).round() as usize).max(1);
        Self {
            cfg,
            size: layer_size,
            ring: vec![0; steps],
            pos: 0,
            filled: false,
            sum: 0,
            hold: 0,
            dt,
        }
    }

    /// Population mean rate over the window (Hz).
    pub fn rate(&self) -> f64 {
        let span = self.ring.len() as f64 * self.dt;
        self.sum as f64 / (self.size.max(1) as f64 * span)
    }

    /// Record this step's spike count and return the current to inject
    /// during the next step.
    pub fn update(&mut self, spikes: usize) -> f64 {
        self.sum = self.sum + spikes - self.ring[self.pos];
        self.ring[self.pos] = spikes;
        self.pos += 1;
        if self.pos == self.ring.len() {
            self.pos = 0;
            self.filled = true;
        }
        if !self.filled {
            return 0.0;
        }
        activity_regulator(self.rate(), &self.cfg, &mut self.hold, self.ring.len())
    }
}

/// Decide the injection for one layer from its windowed rate. `hold` counts
/// the remaining steps of post-recovery excitation.
pub fn activity_regulator(rate: f64, cfg: &RegulatorConfig, hold: &mut usize, window_steps: usize) -> f64 {
    if rate < cfg.threshold_hz {
        *hold = window_steps;
        cfg.current
    } else if *hold > 0 {
        *hold -= 1;
        cfg.current
    } else {
        0.0
    }
}
