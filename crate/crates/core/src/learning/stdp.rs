//! Modulated pair-based STDP with exponential traces.

use crate::error::{Error, Result};

/// Symmetric window `K(d) = exp(-|d| / tau_stdp)` with pair amplitude `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdpConfig {
    /// Update per spike pair at zero lag (weight units).
    pub amplitude: f64,
    pub tau_stdp: f64,
}

impl Default for StdpConfig {
    fn default() -> Self {
        Self {
            amplitude: 2e-3,
            tau_stdp: 4e-3,
        }
    }
}

impl StdpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.tau_stdp > 0.0) {
            return Err(Error::Config("STDP needs amplitude >= 0 and tau_stdp > 0".into()));
        }
        Ok(())
    }

    pub fn window(&self, lag: f64) -> f64 {
        (-lag.abs() / self.tau_stdp).exp()
    }
}

/// Global modulation: `+1` on `(tau_br, T)`, `-1` on `(T + tau_br, 2T)`,
/// `0` elsewhere, repeating every `2T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationSchedule {
    /// Half-epoch `T` (s).
    pub half_epoch: f64,
    /// Burn-in `tau_br` (s).
    pub burn_in: f64,
}

impl Default for ModulationSchedule {
    fn default() -> Self {
        Self {
            half_epoch: 0.05,
            burn_in: 0.01,
        }
    }
}

impl ModulationSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.burn_in >= 0.0 && self.burn_in < self.half_epoch) {
            return Err(Error::Config("need 0 <= burn_in < half_epoch".into()));
        }
        Ok(())
    }

    pub fn epoch(&self) -> f64 {
        2.0 * self.half_epoch
    }

    pub fn g(&self, t: f64) -> f64 {
        modulation_g(t, self)
    }

    /// Learning rate of the equivalent CD rule, `2 A (T - tau_br)/(2T) tau_stdp`.
    pub fn eta(&self, stdp: &StdpConfig) -> f64 {
        2.0 * stdp.amplitude * (self.half_epoch - self.burn_in) / self.epoch() * stdp.tau_stdp
    }
}

pub fn modulation_g(t: f64, s: &ModulationSchedule) -> f64 {
    let x = t.rem_euclid(s.epoch());
    let (t_half, br) = (s.half_epoch, s.burn_in);
    if x > br && x < t_half {
        1.0
    } else if x > t_half + br {
        -1.0
    } else {
        0.0
    }
}

/// Exponentially decaying spike traces, read lazily. Values are stored
/// relative to a shared reference time so one exponential serves a whole
/// layer per read.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceBank {
    scaled: Vec<f64>,
    t_ref: f64,
    tau: f64,
}

impl TraceBank {
    pub fn new(n: usize, tau: f64) -> Self {
        Self {
            scaled: vec![0.0; n],
            t_ref: 0.0,
            tau,
        }
    }

    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    fn rebase(&mut self, t: f64) {
        if (t - self.t_ref) / self.tau > 30.0 {
            let f = (-(t - self.t_ref) / self.tau).exp();
            self.scaled.iter_mut().for_each(|x| *x *= f);
            self.t_ref = t;
        }
    }

    /// Multiplier turning stored values into trace values at `t`.
    #[inline]
    pub fn factor(&self, t: f64) -> f64 {
        (-(t - self.t_ref) / self.tau).exp()
    }

    #[inline]
    pub fn scaled(&self) -> &[f64] {
        &self.scaled
    }

    pub fn value(&self, i: usize, t: f64) -> f64 {
        self.scaled[i] * self.factor(t)
    }

    pub fn add(&mut self, i: usize, t: f64, amount: f64) {
        self.rebase(t);
        self.scaled[i] += amount / self.factor(t);
    }
}

/// Traces of both layers plus the traces of the visible and hidden bias
/// trains, which act as the partners for bias learning.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub stdp: StdpConfig,
    pub visible: TraceBank,
    pub hidden: TraceBank,
    pub bias_visible: TraceBank,
    pub bias_hidden: TraceBank,
}

/// Which layer a spike came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Visible,
    Hidden,
    BiasVisible,
    BiasHidden,
}

/// Weight and bias increments produced by one spike.
pub trait Plastic {
    /// Add `delta[j]` to `w[i, j]` for all hidden `j`.
    fn add_row(&mut self, i: usize, g: f64, trace: &[f64], factor: f64);
    /// Add `delta[i]` to `w[i, j]` for all visible `i`.
    fn add_column(&mut self, j: usize, g: f64, trace: &[f64], factor: f64);
    fn add_bias(&mut self, side: Side, i: usize, delta: f64);
}

impl TrainerState {
    pub fn new(n_v: usize, n_h: usize, stdp: StdpConfig) -> Self {
        let tau = stdp.tau_stdp;
        Self {
            stdp,
            visible: TraceBank::new(n_v, tau),
            hidden: TraceBank::new(n_h, tau),
            bias_visible: TraceBank::new(n_v, tau),
            bias_hidden: TraceBank::new(n_h, tau),
        }
    }

    /// Apply the modulated update for one spike, then add it to its trace.
    /// A visible spike at `t` changes `w[i, j]` by `g * A_h[j](t)` and then
    /// raises `A_v[i]` by `A`; hidden and bias spikes act symmetrically.
    pub fn stdp_on_spike<P: Plastic>(&mut self, side: Side, i: usize, t: f64, g: f64, params: &mut P) {
        let a = self.stdp.amplitude;
        match side {
            Side::Visible => {
                if g != 0.0 {
                    params.add_row(i, g, self.hidden.scaled(), self.hidden.factor(t));
                    params.add_bias(side, i, g * self.bias_visible.value(i, t));
                }
                self.visible.add(i, t, a);
            }
            Side::Hidden => {
                if g != 0.0 {
                    params.add_column(i, g, self.visible.scaled(), self.visible.factor(t));
                    params.add_bias(side, i, g * self.bias_hidden.value(i, t));
                }
                self.hidden.add(i, t, a);
            }
            Side::BiasVisible => {
                if g != 0.0 {
                    params.add_bias(Side::Visible, i, g * self.visible.value(i, t));
                }
                self.bias_visible.add(i, t, a);
            }
            Side::BiasHidden => {
                if g != 0.0 {
                    params.add_bias(Side::Hidden, i, g * self.hidden.value(i, t));
                }
                self.bias_hidden.add(i, t, a);
            }
        }
    }
}

/// Plain dimensionless parameters as a [`Plastic`] target.
impl Plastic for crate::rbm::RbmParams {
    fn add_row(&mut self, i: usize, g: f64, trace: &[f64], factor: f64) {
        let s = g * factor;
        for (w, &x) in self.w.row_mut(i).iter_mut().zip(trace) {
            *w += s * x;
        }
    }

    fn add_column(&mut self, j: usize, g: f64, trace: &[f64], factor: f64) {
        let s = g * factor;
        for (w, &x) in self.w.column_mut(j).iter_mut().zip(trace) {
            *w += s * x;
        }
    }

    fn add_bias(&mut self, side: Side, i: usize, delta: f64) {
        match side {
            Side::Visible | Side::BiasVisible => self.b_v[i] += delta,
            Side::Hidden | Side::BiasHidden => self.b_h[i] += delta,
        }
    }
}
