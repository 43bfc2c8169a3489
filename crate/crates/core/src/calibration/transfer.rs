use std::io::Write;

use crate::error::{Error, Result};
use crate::rng::child_seed;
use crate::sim::{
    run_network, CurrentSchedule, Integrator, Network, NeuronConfig, PoissonSource,
};

/// How the probe current reaches the neuron during calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delivery {
    /// Noiseless constant current straight into the membrane.
    Direct,
    /// Poisson train of `rate` whose events carry `I / rate` coulombs through
    /// a `tau_syn` filter, the same pathway that carries RBM biases.
    BiasSynapse { rate: f64, tau_syn: f64 },
}

impl Default for Delivery {
    fn default() -> Self {
        Delivery::BiasSynapse {
            rate: 1000.0,
            tau_syn: 4e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub duration: f64,
    pub dt: f64,
    pub integrator: Integrator,
    pub delivery: Delivery,
}

impl Default for Probe {
    fn default() -> Self {
        Self {
            duration: 5.0,
            dt: 1e-4,
            integrator: Integrator::default(),
            delivery: Delivery::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferPoint {
    /// Injected current (A).
    pub current: f64,
    /// Measured mean rate (Hz).
    pub rate: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransferCurve {
    pub points: Vec<TransferPoint>,
}

impl TransferCurve {
    pub fn currents(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.current).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rate).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W, header: &str) -> Result<()> {
        if !header.is_empty() {
            writeln!(w, "# {header}")?;
        }
        writeln!(w, "current_a,rate_hz,duration_s")?;
        for p in &self.points {
            writeln!(w, "{:.6e},{:.6},{}", p.current, p.rate, p.duration)?;
        }
        Ok(())
    }
}

/// Mean firing rate of one neuron receiving `current` for `probe.duration`.
pub fn measure_rate(cfg: &NeuronConfig, current: f64, probe: &Probe, seed: u64) -> Result<f64> {
    let mut net = Network::new(*cfg, vec![1]);
    let schedule = match probe.delivery {
        Delivery::Direct => CurrentSchedule::constant(vec![current]),
        Delivery::BiasSynapse { rate, tau_syn } => {
            if !(rate > 0.0) {
                return Err(Error::Config("bias delivery needs a positive rate".into()));
            }
            net.sources.push(PoissonSource {
                target: 0,
                rate,
                weights: vec![current / rate],
                tau_syn,
            });
            CurrentSchedule::none()
        }
    };
    let rec = run_network(&net, &schedule, probe.duration, probe.dt, probe.integrator, seed)?;
    Ok(rec.len() as f64 / probe.duration)
}

/// One measurement per grid current, each with its own derived seed.
pub fn measure_transfer_curve(
    cfg: &NeuronConfig,
    grid: &[f64],
    probe: &Probe,
    seed: u64,
) -> Result<TransferCurve> {
    let points = grid
        .iter()
        .enumerate()
        .map(|(k, &current)| {
            Ok(TransferPoint {
                current,
                rate: measure_rate(cfg, current, probe, child_seed(seed, k as u64))?,
                duration: probe.duration,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransferCurve { points })
}

/// `n` evenly spaced currents on `[lo, hi]`.
pub fn current_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Default 21-point grid; covers roughly 2 Hz to 240 Hz for the default neuron.
pub fn default_grid() -> Vec<f64> {
    current_grid(-4.2e-9, 0.6e-9, 21)
}

/// `exp(x^2) erfc(x)`, finite for all `x` where the result is.
fn erfcx(x: f64) -> f64 {
    if x < 25.0 {
        (x * x).exp() * libm::erfc(x)
    } else {
        // asymptotic series, relative error < 1e-12 here
        let r = 1.0 / (x * x);
        (1.0 - 0.5 * r * (1.0 - 1.5 * r * (1.0 - 2.5 * r))) / (x * std::f64::consts::PI.sqrt())
    }
}

/// Stationary rate from the first-passage-time formula of the noisy LIF
/// neuron under constant input `current`:
/// `1 / (tau_r + tau_m sqrt(pi) int_{(u_rst-u0)/s}^{(theta-u0)/s} exp(x^2)(1+erf x) dx)`
/// with `u0 = I/g_L` and `s = sigma / sqrt(g_L C)`.
pub fn predict_transfer_curve(cfg: &NeuronConfig, current: f64) -> Result<f64> {
    cfg.validate()?;
    let s = cfg.sigma_v();
    if !(s > 0.0) {
        return Err(Error::Config("the transfer formula needs sigma > 0".into()));
    }
    let u0 = current / cfg.leak_conductance;
    let a = (cfg.reset - u0) / s;
    let b = (cfg.threshold - u0) / s;
    if a > 26.0 {
        // exp(a^2) alone exceeds 1e290: the neuron is silent
        return Ok(0.0);
    }
    let f = |x: f64| erfcx(-x);
    let rough = quadrature::double_exponential::integrate(f, a, b, 1e-6).integral;
    if !rough.is_finite() {
        return Err(Error::Quadrature(format!("integral diverged for I = {current}")));
    }
    let out = quadrature::double_exponential::integrate(f, a, b, 1e-10 * rough.abs().max(1e-300));
    if !out.integral.is_finite() || out.error_estimate > 1e-8 * out.integral.abs() {
        return Err(Error::Quadrature(format!(
            "I = {current}: estimate {} with error {}",
            out.integral, out.error_estimate
        )));
    }
    let t = cfg.refractory + cfg.tau_m() * std::f64::consts::PI.sqrt() * out.integral;
    Ok(1.0 / t)
}
