//! Noisy leaky integrate-and-fire neuron.
//!
//! Below threshold the membrane obeys `C du/dt = -g_L u + I(t) + sigma xi(t)`.
//! On reaching the threshold the neuron spikes and `u` is clamped to the reset
//! potential for the refractory period.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Physical parameters of one LIF neuron (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronConfig {
    /// Membrane capacitance `C` (F).
    pub capacitance: f64,
    /// Leak conductance `g_L` (S).
    pub leak_conductance: f64,
    /// Firing threshold `theta` (V).
    pub threshold: f64,
    /// Reset potential `u_rst` (V).
    pub reset: f64,
    /// Absolute refractory period `tau_r` (s).
    pub refractory: f64,
    /// White-noise amplitude `sigma` (A s^1/2).
    pub sigma: f64,
}

impl Default for NeuronConfig {
    fn default() -> Self {
        Self {
            capacitance: 1e-12,
            leak_conductance: 1e-9,
            threshold: 0.1,
            reset: 0.0,
            refractory: 4e-3,
            sigma: 3e-11,
        }
    }
}

impl NeuronConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.capacitance > 0.0) {
            return bad("capacitance must be > 0");
        }
        if !(self.leak_conductance > 0.0) {
            return bad("leak conductance must be > 0");
        }
        if !(self.refractory >= 0.0) {
            return bad("refractory period must be >= 0");
        }
        if !(self.threshold > self.reset) {
            return bad("threshold must exceed the reset potential");
        }
        if !(self.sigma >= 0.0) {
            return bad("noise amplitude must be >= 0");
        }
        Ok(())
    }

    /// Membrane time constant `C / g_L`.
    pub fn tau_m(&self) -> f64 {
        self.capacitance / self.leak_conductance
    }

    /// Voltage noise scale `sigma_V = sigma / sqrt(g_L C)`.
    pub fn sigma_v(&self) -> f64 {
        self.sigma / (self.leak_conductance * self.capacitance).sqrt()
    }
}

/// Time-stepping scheme for the membrane SDE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Plain Euler-Maruyama; threshold tested at step ends only.
    EulerMaruyama,
    /// Exact Ornstein-Uhlenbeck transition over the step, plus a Brownian-bridge
    /// test for threshold crossings that happen between step ends.
    #[default]
    ExactBridge,
}

impl std::str::FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" | "euler-maruyama" => Ok(Integrator::EulerMaruyama),
            "exact" | "exact-bridge" => Ok(Integrator::ExactBridge),
            _ => Err(Error::Config(format!("unknown integrator `{s}`"))),
        }
    }
}

impl std::fmt::Display for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Integrator::EulerMaruyama => "euler",
            Integrator::ExactBridge => "exact",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    /// Membrane potential (V).
    pub u: f64,
    /// Remaining refractory time (s).
    pub refractory_left: f64,
}

impl NeuronState {
    pub fn at_rest(cfg: &NeuronConfig) -> Self {
        Self {
            u: cfg.reset,
            refractory_left: 0.0,
        }
    }

    pub fn is_refractory(&self, dt: f64) -> bool {
        self.refractory_left > 0.5 * dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Quiet,
    Spiked,
    Refractory,
    NonFinite,
}

/// Per-timestep constants for one neuron configuration.
#[derive(Debug, Clone)]
pub struct NeuronStepper {
    cfg: NeuronConfig,
    dt: f64,
    integrator: Integrator,
    decay: f64,
    drive_gain: f64,
    noise_sd: f64,
    bridge_var: f64,
}

impl NeuronStepper {
    pub fn new(cfg: NeuronConfig, dt: f64, integrator: Integrator) -> Result<Self> {
        cfg.validate()?;
        if !(dt > 0.0) {
            return Err(Error::Config("dt must be > 0".into()));
        }
        let tau_m = cfg.tau_m();
        let diffusion = cfg.sigma / cfg.capacitance;
        let (decay, drive_gain, noise_sd) = match integrator {
            Integrator::EulerMaruyama => (
                1.0 - dt / tau_m,
                dt / cfg.capacitance,
                diffusion * dt.sqrt(),
            ),
            Integrator::ExactBridge => {
                let a = (-dt / tau_m).exp();
                (
                    a,
                    (1.0 - a) / cfg.leak_conductance,
                    diffusion * (0.5 * tau_m * (1.0 - a * a)).sqrt(),
                )
            }
        };
        Ok(Self {
            cfg,
            dt,
            integrator,
            decay,
            drive_gain,
            noise_sd,
            bridge_var: diffusion * diffusion * dt,
        })
    }

    pub fn config(&self) -> &NeuronConfig {
        &self.cfg
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    /// Advance one step with an explicit standard-normal draw. `uniform` is
    /// consulted only by the bridge test and is produced lazily.
    pub fn step_with(
        &self,
        state: &mut NeuronState,
        input_current: f64,
        noise_draw: f64,
        uniform: impl FnOnce() -> f64,
    ) -> StepOutcome {
        if state.is_refractory(self.dt) {
            state.refractory_left -= self.dt;
            state.u = self.cfg.reset;
            return StepOutcome::Refractory;
        }
        let theta = self.cfg.threshold;
        let u0 = state.u;
        let u1 = self.decay * u0 + self.drive_gain * input_current + self.noise_sd * noise_draw;
        if !u1.is_finite() {
            state.u = u1;
            return StepOutcome::NonFinite;
        }
        let mut fired = u1 >= theta;
        if !fired && self.integrator == Integrator::ExactBridge && self.bridge_var > 0.0 {
            let z = 2.0 * (theta - u0) * (theta - u1) / self.bridge_var;
            // exp(-40) is far below the resolution of a uniform draw
            if z < 40.0 && uniform() < (-z).exp() {
                fired = true;
            }
        }
        if fired {
            state.u = self.cfg.reset;
            state.refractory_left = self.cfg.refractory;
            StepOutcome::Spiked
        } else {
            state.u = u1;
            StepOutcome::Quiet
        }
    }

    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &mut NeuronState,
        input_current: f64,
        rng: &mut R,
    ) -> StepOutcome {
        if state.is_refractory(self.dt) {
            return self.step_with(state, input_current, 0.0, || 1.0);
        }
        let xi: f64 = if self.noise_sd > 0.0 {
            rng.sample(StandardNormal)
        } else {
            0.0
        };
        self.step_with(state, input_current, xi, || rng.gen::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn quiet_cfg() -> NeuronConfig {
        NeuronConfig {
            sigma: 0.0,
            ..NeuronConfig::default()
        }
    }

    #[test]
    fn deterministic_fixed_point_is_i_over_gl() {
        for integrator in [Integrator::EulerMaruyama, Integrator::ExactBridge] {
            let cfg = quiet_cfg();
            let stepper = NeuronStepper::new(cfg, 1e-4, integrator).unwrap();
            let mut s = NeuronState::at_rest(&cfg);
            let i = 5e-11; // fixed point 50 mV, below threshold
            let mut rng = stream(0, Stream::Aux(0));
            for _ in 0..2000 {
                assert_eq!(stepper.step(&mut s, i, &mut rng), StepOutcome::Quiet);
            }
            assert!((s.u - i / cfg.leak_conductance).abs() < 1e-9, "{integrator}: {}", s.u);
        }
    }

    #[test]
    fn noiseless_neuron_fires_iff_current_exceeds_rheobase() {
        // drift fixed point I/g_L against theta = 100 mV
        let cfg = quiet_cfg();
        for integrator in [Integrator::EulerMaruyama, Integrator::ExactBridge] {
            let stepper = NeuronStepper::new(cfg, 1e-4, integrator).unwrap();
            for (i, should_fire) in [(0.99e-10, false), (1.01e-10, true), (3e-10, true)] {
                let mut s = NeuronState::at_rest(&cfg);
                let mut rng = stream(0, Stream::Aux(0));
                let fired = (0..200_000)
                    .any(|_| stepper.step(&mut s, i, &mut rng) == StepOutcome::Spiked);
                assert_eq!(fired, should_fire, "I = {i}");
            }
        }
    }

    #[test]
    fn refractory_clamp_holds_for_tau_r() {
        let cfg = quiet_cfg();
        let dt = 1e-4;
        let stepper = NeuronStepper::new(cfg, dt, Integrator::ExactBridge).unwrap();
        let mut s = NeuronState::at_rest(&cfg);
        let mut rng = stream(0, Stream::Aux(0));
        let mut spikes = vec![];
        for k in 0..5000 {
            let out = stepper.step(&mut s, 1e-6, &mut rng);
            if out == StepOutcome::Spiked {
                spikes.push(k);
            }
            if out == StepOutcome::Refractory {
                assert_eq!(s.u, cfg.reset);
            }
        }
        // huge drive: one step to fire, 40 clamped steps
        let gaps: Vec<_> = spikes.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.iter().all(|&g| g == 41), "{gaps:?}");
    }

    #[test]
    fn non_finite_state_is_reported() {
        let cfg = quiet_cfg();
        let stepper = NeuronStepper::new(cfg, 1e-4, Integrator::ExactBridge).unwrap();
        let mut s = NeuronState::at_rest(&cfg);
        assert_eq!(stepper.step_with(&mut s, f64::NAN, 0.0, || 1.0), StepOutcome::NonFinite);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = NeuronConfig::default();
        c.threshold = -1.0;
        assert!(c.validate().is_err());
        let mut c = NeuronConfig::default();
        c.capacitance = 0.0;
        assert!(c.validate().is_err());
        assert!(NeuronStepper::new(NeuronConfig::default(), 0.0, Integrator::default()).is_err());
    }

    fn stationary_sd(sigma: f64) -> f64 {
        // threshold far away so the OU process is never reset
        let cfg = NeuronConfig {
            sigma,
            threshold: 1e6,
            ..NeuronConfig::default()
        };
        let stepper = NeuronStepper::new(cfg, 1e-4, Integrator::ExactBridge).unwrap();
        let mut s = NeuronState::at_rest(&cfg);
        let mut rng = stream(11, Stream::Neuron(0));
        let (mut m1, mut m2, mut n) = (0.0, 0.0, 0.0);
        for k in 0..400_000 {
            stepper.step(&mut s, 0.0, &mut rng);
            if k > 1000 {
                m1 += s.u;
                m2 += s.u * s.u;
                n += 1.0;
            }
        }
        let mean = m1 / n;
        (m2 / n - mean * mean).sqrt()
    }

    #[test]
    fn doubling_sigma_doubles_membrane_sd() {
        let s1 = stationary_sd(3e-11);
        let s2 = stationary_sd(6e-11);
        // OU stationary variance sigma^2 / (2 g_L C)
        let expected = 3e-11 / (2.0 * 1e-9 * 1e-12f64).sqrt();
        assert!((s1 / expected - 1.0).abs() < 0.03, "{s1} vs {expected}");
        assert!((s2 / s1 - 2.0).abs() < 0.05, "{s1} {s2}");
    }
}
